use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::Admg;

/// Where the values of a kernel come from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Source {
    /// An observational conditional `P(over | given)`.
    Observational,
    /// An unresolved interventional term `P_x(over | given)`.
    Interventional { intervene: Vec<String> },
    /// A kernel whose value is the wrapped expression.
    Derived { expr: Box<Expr> },
}

/// A symbolic expression over named variables.
///
/// Variables bound by a `Marginal` are scoped to its body. Every node
/// evaluates to a non-negative function of its free variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expr {
    Kernel {
        over: Vec<String>,
        given: Vec<String>,
        source: Source,
    },
    Product {
        factors: Vec<Expr>,
    },
    Quotient {
        num: Box<Expr>,
        den: Box<Expr>,
    },
    Marginal {
        sum_out: Vec<String>,
        of: Box<Expr>,
    },
    Normalize {
        target: String,
        of: Box<Expr>,
    },
}

/// Separator between a variable name and the index of a fresh copy of it.
pub const FRESH_SEP: char = '~';

/// The vertex name a possibly renamed bound variable stands for.
pub fn base_name(name: &str) -> &str {
    name.split(FRESH_SEP).next().unwrap_or(name)
}

/// Ranks variable names so that lists inside expressions have a fixed order.
#[derive(Clone, Debug, Default)]
pub struct VarOrder {
    rank: HashMap<String, usize>,
}

impl VarOrder {
    /// Declaration order of the graph's vertices.
    pub fn from_graph(g: &Admg) -> Self {
        VarOrder {
            rank: g
                .vertices()
                .iter()
                .enumerate()
                .map(|(i, v)| (v.name.clone(), i))
                .collect(),
        }
    }

    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Self {
        VarOrder {
            rank: names
                .iter()
                .enumerate()
                .map(|(i, n)| (n.as_ref().to_string(), i))
                .collect(),
        }
    }

    fn key<'a>(&self, name: &'a str) -> (usize, &'a str) {
        let base = base_name(name);
        (self.rank.get(base).copied().unwrap_or(usize::MAX), name)
    }

    pub fn sort(&self, vars: &mut [String]) {
        vars.sort_by(|a, b| self.key(a).cmp(&self.key(b)));
    }

    pub fn sorted<I: IntoIterator<Item = String>>(&self, vars: I) -> Vec<String> {
        let mut v: Vec<String> = vars.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        self.sort(&mut v);
        v
    }
}

impl Expr {
    /// `P(over | given)`.
    pub fn atom<S: AsRef<str>>(over: &[S], given: &[S]) -> Expr {
        Expr::Kernel {
            over: over.iter().map(|s| s.as_ref().to_string()).collect(),
            given: given.iter().map(|s| s.as_ref().to_string()).collect(),
            source: Source::Observational,
        }
    }

    /// The constant 1.
    pub fn one() -> Expr {
        Expr::Product { factors: vec![] }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Product { factors } if factors.is_empty())
    }

    pub fn product(factors: Vec<Expr>) -> Expr {
        Expr::Product { factors }
    }

    pub fn quotient(num: Expr, den: Expr) -> Expr {
        Expr::Quotient {
            num: Box::new(num),
            den: Box::new(den),
        }
    }

    pub fn marginal(sum_out: Vec<String>, of: Expr) -> Expr {
        Expr::Marginal {
            sum_out,
            of: Box::new(of),
        }
    }

    pub fn normalize(target: impl Into<String>, of: Expr) -> Expr {
        Expr::Normalize {
            target: target.into(),
            of: Box::new(of),
        }
    }

    /// An observational atom's `(over, given)`.
    pub fn as_atom(&self) -> Option<(&[String], &[String])> {
        match self {
            Expr::Kernel {
                over,
                given,
                source: Source::Observational,
            } => Some((over, given)),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Kernel { over, given, .. } => {
                out.extend(over.iter().cloned());
                out.extend(given.iter().cloned());
            }
            Expr::Product { factors } => factors.iter().for_each(|f| f.collect_free(out)),
            Expr::Quotient { num, den } => {
                num.collect_free(out);
                den.collect_free(out);
            }
            Expr::Marginal { sum_out, of } => {
                let mut inner = of.free_vars();
                for v in sum_out {
                    inner.remove(v);
                }
                out.extend(inner);
            }
            Expr::Normalize { of, .. } => of.collect_free(out),
        }
    }

    pub fn mentions(&self, var: &str) -> bool {
        self.free_vars().contains(var)
    }

    /// Every variable name in the tree, free or bound.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_all(&mut out);
        out
    }

    fn collect_all(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Kernel { over, given, source } => {
                out.extend(over.iter().cloned());
                out.extend(given.iter().cloned());
                if let Source::Derived { expr } = source {
                    expr.collect_all(out);
                }
            }
            Expr::Product { factors } => factors.iter().for_each(|f| f.collect_all(out)),
            Expr::Quotient { num, den } => {
                num.collect_all(out);
                den.collect_all(out);
            }
            Expr::Marginal { sum_out, of } => {
                out.extend(sum_out.iter().cloned());
                of.collect_all(out);
            }
            Expr::Normalize { target, of } => {
                out.insert(target.clone());
                of.collect_all(out);
            }
        }
    }

    /// Replaces free occurrences of `from` by `to`. The caller guarantees
    /// that no binder of `to` encloses a free `from` (see [`Expr::can_rename`]).
    pub fn rename_free(&self, from: &str, to: &str) -> Expr {
        let sub = |v: &[String]| -> Vec<String> {
            v.iter()
                .map(|n| if n == from { to.to_string() } else { n.clone() })
                .collect()
        };
        match self {
            Expr::Kernel { over, given, source } => Expr::Kernel {
                over: sub(over),
                given: sub(given),
                source: match source {
                    Source::Observational => Source::Observational,
                    Source::Interventional { intervene } => Source::Interventional {
                        intervene: sub(intervene),
                    },
                    Source::Derived { expr } => Source::Derived {
                        expr: Box::new(expr.rename_free(from, to)),
                    },
                },
            },
            Expr::Product { factors } => Expr::Product {
                factors: factors.iter().map(|f| f.rename_free(from, to)).collect(),
            },
            Expr::Quotient { num, den } => {
                Expr::quotient(num.rename_free(from, to), den.rename_free(from, to))
            }
            Expr::Marginal { sum_out, of } => {
                if sum_out.iter().any(|b| b == from) {
                    self.clone()
                } else {
                    Expr::marginal(sum_out.clone(), of.rename_free(from, to))
                }
            }
            Expr::Normalize { target, of } => {
                let t = if target == from { to.to_string() } else { target.clone() };
                Expr::normalize(t, of.rename_free(from, to))
            }
        }
    }

    /// True iff renaming free `from` to `to` changes no binding: `to` is not
    /// free here and no binder of `to` encloses a free `from`.
    pub fn can_rename(&self, from: &str, to: &str) -> bool {
        !self.mentions(to) && self.no_capture(from, to)
    }

    fn no_capture(&self, from: &str, to: &str) -> bool {
        match self {
            Expr::Kernel { source: Source::Derived { expr }, .. } => expr.no_capture(from, to),
            Expr::Kernel { .. } => true,
            Expr::Product { factors } => factors.iter().all(|f| f.no_capture(from, to)),
            Expr::Quotient { num, den } => num.no_capture(from, to) && den.no_capture(from, to),
            Expr::Marginal { sum_out, of } => {
                if sum_out.iter().any(|b| b == from) {
                    true
                } else if sum_out.iter().any(|b| b == to) {
                    !of.mentions(from)
                } else {
                    of.no_capture(from, to)
                }
            }
            Expr::Normalize { of, .. } => of.no_capture(from, to),
        }
    }

    /// True iff no interventional term remains anywhere in the tree.
    pub fn is_grounded(&self) -> bool {
        match self {
            Expr::Kernel { source, .. } => match source {
                Source::Observational => true,
                Source::Interventional { .. } => false,
                Source::Derived { expr } => expr.is_grounded(),
            },
            Expr::Product { factors } => factors.iter().all(Expr::is_grounded),
            Expr::Quotient { num, den } => num.is_grounded() && den.is_grounded(),
            Expr::Marginal { of, .. } | Expr::Normalize { of, .. } => of.is_grounded(),
        }
    }

    /// Replaces every derived kernel by its defining expression.
    pub fn inline(self) -> Expr {
        match self {
            Expr::Kernel {
                source: Source::Derived { expr },
                ..
            } => expr.inline(),
            k @ Expr::Kernel { .. } => k,
            Expr::Product { factors } => {
                Expr::Product {
                    factors: factors.into_iter().map(Expr::inline).collect(),
                }
            }
            Expr::Quotient { num, den } => Expr::quotient(num.inline(), den.inline()),
            Expr::Marginal { sum_out, of } => Expr::marginal(sum_out, of.inline()),
            Expr::Normalize { target, of } => Expr::normalize(target, of.inline()),
        }
    }

    /// Order-insensitive normal form for structural comparison: variable
    /// lists and product factors are sorted.
    pub fn canonical(&self) -> Expr {
        let sorted = |v: &[String]| {
            let mut v = v.to_vec();
            v.sort();
            v
        };
        match self {
            Expr::Kernel {
                over,
                given,
                source,
            } => Expr::Kernel {
                over: sorted(over),
                given: sorted(given),
                source: match source {
                    Source::Observational => Source::Observational,
                    Source::Interventional { intervene } => Source::Interventional {
                        intervene: sorted(intervene),
                    },
                    Source::Derived { expr } => Source::Derived {
                        expr: Box::new(expr.canonical()),
                    },
                },
            },
            Expr::Product { factors } => {
                let mut fs: Vec<Expr> = factors.iter().map(Expr::canonical).collect();
                fs.sort();
                Expr::Product { factors: fs }
            }
            Expr::Quotient { num, den } => Expr::quotient(num.canonical(), den.canonical()),
            Expr::Marginal { sum_out, of } => Expr::marginal(sorted(sum_out), of.canonical()),
            Expr::Normalize { target, of } => Expr::normalize(target.clone(), of.canonical()),
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + match self {
            Expr::Kernel {
                source: Source::Derived { expr },
                ..
            } => expr.size(),
            Expr::Kernel { .. } => 0,
            Expr::Product { factors } => factors.iter().map(Expr::size).sum(),
            Expr::Quotient { num, den } => num.size() + den.size(),
            Expr::Marginal { of, .. } | Expr::Normalize { of, .. } => of.size(),
        }
    }

    /// Observational atoms in the tree, deduplicated, in first-seen order.
    pub fn atoms(&self) -> Vec<(Vec<String>, Vec<String>)> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<(Vec<String>, Vec<String>)>) {
        match self {
            Expr::Kernel {
                over,
                given,
                source,
            } => match source {
                Source::Observational => {
                    let a = (over.clone(), given.clone());
                    if !out.contains(&a) {
                        out.push(a);
                    }
                }
                Source::Derived { expr } => expr.collect_atoms(out),
                Source::Interventional { .. } => {}
            },
            Expr::Product { factors } => factors.iter().for_each(|f| f.collect_atoms(out)),
            Expr::Quotient { num, den } => {
                num.collect_atoms(out);
                den.collect_atoms(out);
            }
            Expr::Marginal { of, .. } | Expr::Normalize { of, .. } => of.collect_atoms(out),
        }
    }
}

// ---------------------------------------------------------------------------
// pretty printing

struct Printer<'a> {
    bound: Vec<&'a str>,
}

impl<'a> Printer<'a> {
    fn var(&self, v: &str) -> String {
        if self.bound.contains(&v) {
            format!("{v}'")
        } else {
            v.to_string()
        }
    }

    fn vars(&self, vs: &[String]) -> String {
        vs.iter().map(|v| self.var(v)).collect::<Vec<_>>().join(",")
    }

    fn kernel_args(&self, over: &[String], given: &[String]) -> String {
        if given.is_empty() {
            self.vars(over)
        } else {
            format!("{}|{}", self.vars(over), self.vars(given))
        }
    }

    fn expr(&mut self, e: &'a Expr, out: &mut String) {
        match e {
            Expr::Kernel {
                over,
                given,
                source,
            } => match source {
                Source::Observational => {
                    out.push_str(&format!("P({})", self.kernel_args(over, given)));
                }
                Source::Interventional { intervene } => {
                    out.push_str(&format!(
                        "P_{{{}}}({})",
                        self.vars(intervene),
                        self.kernel_args(over, given)
                    ));
                }
                Source::Derived { expr } => {
                    out.push_str(&format!("Q[{}]{{", self.kernel_args(over, given)));
                    self.expr(expr, out);
                    out.push('}');
                }
            },
            Expr::Product { factors } => {
                if factors.is_empty() {
                    out.push('1');
                }
                for (i, f) in factors.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    let wrap = matches!(f, Expr::Product { .. } | Expr::Quotient { .. });
                    if wrap {
                        out.push('[');
                    }
                    self.expr(f, out);
                    if wrap {
                        out.push(']');
                    }
                }
            }
            Expr::Quotient { num, den } => {
                out.push('[');
                self.expr(num, out);
                out.push_str("] / [");
                self.expr(den, out);
                out.push(']');
            }
            Expr::Marginal { sum_out, of } => {
                let n = self.bound.len();
                self.bound.extend(sum_out.iter().map(String::as_str));
                out.push_str(&format!("Σ_{{{}}} [", self.vars(sum_out)));
                self.expr(of, out);
                out.push(']');
                self.bound.truncate(n);
            }
            Expr::Normalize { target, of } => {
                out.push_str(&format!("norm_{{{}}}[", self.var(target)));
                self.expr(of, out);
                out.push(']');
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        Printer { bound: Vec::new() }.expr(self, &mut out);
        f.write_str(&out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_marks_bound_variables() {
        let e = Expr::marginal(
            vec!["M".into()],
            Expr::product(vec![Expr::atom(&["M"], &[]), Expr::atom(&["T"], &["M", "Z"])]),
        );
        assert_eq!(e.to_string(), "Σ_{M'} [P(M') P(T|M',Z)]");
        let free: Vec<_> = e.free_vars().into_iter().collect();
        assert_eq!(free, vec!["T", "Z"]);
    }

    #[test]
    fn display_of_products_and_quotients() {
        let e = Expr::product(vec![Expr::atom(&["T"], &[]), Expr::atom(&["C"], &["T", "A"])]);
        assert_eq!(e.to_string(), "P(T) P(C|T,A)");
        assert_eq!(Expr::one().to_string(), "1");
        let q = Expr::quotient(e.clone(), Expr::atom(&["T"], &[]));
        assert_eq!(q.to_string(), "[P(T) P(C|T,A)] / [P(T)]");
        assert_eq!(
            Expr::normalize("T", q).to_string(),
            "norm_{T}[[P(T) P(C|T,A)] / [P(T)]]"
        );
    }

    #[test]
    fn json_roundtrip() {
        let e = Expr::normalize(
            "T",
            Expr::marginal(
                vec!["A".into()],
                Expr::Kernel {
                    over: vec!["C".into()],
                    given: vec!["T".into()],
                    source: Source::Interventional {
                        intervene: vec!["A".into()],
                    },
                },
            ),
        );
        let s = serde_json::to_string(&e).unwrap();
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        assert!(!e.is_grounded());
    }

    #[test]
    fn canonical_ignores_factor_order() {
        let a = Expr::product(vec![Expr::atom(&["T"], &[]), Expr::atom(&["C"], &["T", "A"])]);
        let b = Expr::product(vec![Expr::atom(&["C"], &["A", "T"]), Expr::atom(&["T"], &[])]);
        assert_ne!(a, b);
        assert_eq!(a.canonical(), b.canonical());
    }
}
