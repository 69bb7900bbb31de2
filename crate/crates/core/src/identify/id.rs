use serde::Serialize;
use thiserror::Error;

use super::expr::{Expr, VarOrder};
use super::simplify::simplify;
use crate::graph::{Admg, MutilationSpec, VertexSet};

/// An interventional query `P_x(y | z)` over observed vertex ids of one graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Query {
    pub intervene: VertexSet,
    pub outcome: VertexSet,
    pub condition: VertexSet,
}

impl Query {
    pub fn new(intervene: VertexSet, outcome: VertexSet, condition: VertexSet) -> Self {
        Query {
            intervene,
            outcome,
            condition,
        }
    }

    pub fn is_valid_for(&self, g: &Admg) -> bool {
        let o = g.observed();
        self.intervene.is_subset(o)
            && self.outcome.is_subset(o)
            && self.condition.is_subset(o)
            && self.intervene.is_disjoint(self.outcome)
            && self.intervene.is_disjoint(self.condition)
            && self.outcome.is_disjoint(self.condition)
    }
}

/// The recursion hit a set `A` inside `V` where every removable vertex
/// shares a c-component with one of its children.
#[derive(Clone, Debug, Error, PartialEq, Eq, Serialize)]
#[error("not identifiable: Q[{}] cannot be reduced from Q[{}]", .offending.join(","), .subgraph.join(","))]
pub struct IdFailure {
    /// The c-component being identified.
    pub offending: Vec<String>,
    /// Vertices of the induced subgraph where the recursion stopped.
    pub subgraph: Vec<String>,
    /// Bidirected edges of that subgraph.
    pub bidirected: Vec<(String, String)>,
}

impl IdFailure {
    pub fn subgraph_admg(&self, g: &Admg) -> Admg {
        let v: VertexSet = self.subgraph.iter().filter_map(|n| g.id(n).ok()).collect();
        g.induced(v)
    }
}

fn by_name(g: &Admg, s: VertexSet) -> Vec<usize> {
    let mut v: Vec<usize> = s.iter().collect();
    v.sort_by(|&a, &b| g.name(a).cmp(g.name(b)));
    v
}

/// Reduces the conditional query `P_x(y | z)` to an unconditional one.
///
/// A conditioning vertex `w` moves into the intervention set while
/// `y ⊥ w | x', z \ {w}` holds in the graph with edges into `x'` and out of `w`
/// removed. Candidates are scanned by name and the scan restarts after each move.
/// Returns `(x', y ∪ remaining z)`.
pub fn uq(g: &Admg, x: VertexSet, y: VertexSet, z: VertexSet) -> (VertexSet, VertexSet) {
    let (mut x, mut z) = (x, z);
    loop {
        let moved = by_name(g, z).into_iter().find(|&w| {
            let m = g.mutilate(&MutilationSpec {
                overline: x,
                underline: VertexSet::singleton(w),
            });
            m.m_separated(y, VertexSet::singleton(w), x.union(z.without(w)))
        });
        match moved {
            Some(w) => {
                x.insert(w);
                z.remove(w);
            }
            None => return (x, y.union(z)),
        }
    }
}

fn names(g: &Admg, s: VertexSet) -> Vec<String> {
    g.names(s)
}

/// Chain-rule factorization of the observational joint over `o` along a
/// topological order: `∏ P(v_i | v_1..v_{i-1})`.
pub fn observational_joint(g: &Admg, o: VertexSet) -> Expr {
    let order = g.topological_order_within(o);
    let factors = order
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let before: VertexSet = order[..i].iter().copied().collect();
            Expr::atom(&[g.name(v).to_string()], &names(g, before))
        })
        .collect();
    Expr::product(factors)
}

/// Identifies `P_x(y)` from the observational distribution over the observed
/// vertices. Selection vertices are ignored.
pub fn id(g: &Admg, x: VertexSet, y: VertexSet) -> Result<Expr, IdFailure> {
    let ord = VarOrder::from_graph(g);
    let o = g.observed();
    let x = x.intersection(o);
    let y = y.intersection(o);
    let d = g.ancestors_within(y, o.difference(x));
    let p = observational_joint(g, o);
    let mut factors = Vec::new();
    for di in g.c_components(d) {
        factors.push(identify(g, di, o, p.clone(), &ord)?);
    }
    let e = Expr::marginal(names(g, d.difference(y)), Expr::product(factors));
    Ok(simplify(e, &ord).inline())
}

/// Identifies `P_x(y | z)`: [`uq`] followed by [`id`] and a normalization over
/// the outcome when conditioning variables remain in it.
pub fn id_conditional(g: &Admg, q: &Query) -> Result<(Query, Expr), IdFailure> {
    let (x, y) = uq(g, q.intervene, q.outcome, q.condition);
    let e = id(g, x, y)?;
    let left = y.difference(q.outcome);
    let e = if left.is_empty() {
        e
    } else {
        // P_x(y | z) = P_x(y, z) / Σ_y P_x(y, z)
        let ord = VarOrder::from_graph(g);
        let den = Expr::marginal(names(g, q.outcome), e.clone());
        simplify(Expr::quotient(e, den), &ord)
    };
    Ok((Query::new(x, q.outcome, left), e))
}

/// Identifies `Q[a]` from `q`, which denotes `Q[v]`.
///
/// While `a ≠ v`, removes the first vertex `b ∈ v \ a` (by name) whose
/// c-component in `G_v` contains none of its children, using
/// `Q[v \ b] = Q[v] / Q[C(b)] · Σ_b Q[C(b)]`.
pub fn identify(g: &Admg, a: VertexSet, v: VertexSet, q: Expr, ord: &VarOrder) -> Result<Expr, IdFailure> {
    let (mut v, mut q) = (v, q);
    while a != v {
        let removable = by_name(g, v.difference(a)).into_iter().find(|&b| {
            let cb = g.c_component_of(b, v);
            cb.is_disjoint(g.children_of(b).intersection(v))
        });
        let Some(b) = removable else {
            let sub = g.induced(v);
            return Err(IdFailure {
                offending: names(g, a),
                subgraph: names(g, v),
                bidirected: sub
                    .bidirected_edges()
                    .into_iter()
                    .map(|(i, j)| (sub.name(i).to_string(), sub.name(j).to_string()))
                    .collect(),
            });
        };
        let cb = g.c_component_of(b, v);
        let qc = component_kernel(g, cb, v, &q, ord);
        let next = Expr::product(vec![
            Expr::quotient(q, qc.clone()),
            Expr::marginal(vec![g.name(b).to_string()], qc),
        ]);
        q = simplify(next, ord);
        v.remove(b);
    }
    Ok(q)
}

/// `Q[c]` for a c-component `c` of `G_v`, given `q = Q[v]`:
/// `∏_{v_i ∈ c} Q[v^(i)] / Q[v^(i-1)]` with `Q[v^(i)] = Σ_{v \ v^(i)} Q[v]`
/// over a topological order of `G_v`.
pub fn component_kernel(g: &Admg, c: VertexSet, v: VertexSet, q: &Expr, ord: &VarOrder) -> Expr {
    let order = g.topological_order_within(v);
    let prefix_kernel = |k: usize| {
        let prefix: VertexSet = order[..k].iter().copied().collect();
        simplify(Expr::marginal(names(g, v.difference(prefix)), q.clone()), ord)
    };
    let mut factors = Vec::new();
    for (i, &vi) in order.iter().enumerate() {
        if c.contains(vi) {
            factors.push(Expr::quotient(prefix_kernel(i + 1), prefix_kernel(i)));
        }
    }
    simplify(Expr::product(factors), ord)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AdmgBuilder;

    fn diagnosis() -> Admg {
        AdmgBuilder::new()
            .observed_all(&["T", "A", "C"])
            .bidirected("T", "A")
            .edge("T", "C")
            .edge("A", "C")
            .selection("S", "A")
            .build()
            .unwrap()
    }

    fn front_door() -> Admg {
        AdmgBuilder::new()
            .observed_all(&["M", "Z", "T"])
            .edge("M", "Z")
            .edge("Z", "T")
            .bidirected("M", "T")
            .build()
            .unwrap()
    }

    fn s(g: &Admg, v: &[&str]) -> VertexSet {
        g.set(v).unwrap()
    }

    #[test]
    fn uq_without_conditioning_is_identity() {
        let g = diagnosis();
        let (x, y) = uq(&g, s(&g, &["A"]), s(&g, &["T"]), VertexSet::empty());
        assert_eq!((x, y), (s(&g, &["A"]), s(&g, &["T"])));
    }

    #[test]
    fn uq_keeps_collider_child_as_outcome() {
        let g = diagnosis();
        let (x, y) = uq(&g, s(&g, &["A"]), s(&g, &["T"]), s(&g, &["C"]));
        assert_eq!(x, s(&g, &["A"]));
        assert_eq!(y, s(&g, &["T", "C"]));
    }

    #[test]
    fn uq_front_door_moves_mediator() {
        let g = front_door();
        let (x, y) = uq(&g, s(&g, &["M"]), s(&g, &["T"]), s(&g, &["Z"]));
        assert_eq!(x, s(&g, &["M", "Z"]));
        assert_eq!(y, s(&g, &["T"]));
    }

    #[test]
    fn diagnosis_surgery_expression() {
        let g = diagnosis();
        let e = id(&g, s(&g, &["A"]), s(&g, &["T", "C"])).unwrap();
        assert_eq!(e.to_string(), "P(T) P(C|T,A)");
        assert!(e.is_grounded());
    }

    #[test]
    fn front_door_expression() {
        let g = front_door();
        let q = Query::new(s(&g, &["M"]), s(&g, &["T"]), s(&g, &["Z"]));
        let (_, e) = id_conditional(&g, &q).unwrap();
        assert_eq!(e.to_string(), "Σ_{M'} [P(M') P(T|M',Z)]");
    }

    #[test]
    fn bow_graph_fails() {
        let g = AdmgBuilder::new()
            .observed_all(&["X", "Y"])
            .edge("X", "Y")
            .bidirected("X", "Y")
            .build()
            .unwrap();
        let err = id(&g, s(&g, &["X"]), s(&g, &["Y"])).unwrap_err();
        assert_eq!(err.offending, vec!["Y"]);
        assert_eq!(err.subgraph, vec!["X", "Y"]);
    }

    #[test]
    fn empty_intervention_is_a_marginal() {
        let g = diagnosis();
        let e = id(&g, VertexSet::empty(), s(&g, &["T"])).unwrap();
        assert_eq!(e.to_string(), "P(T)");
    }

    #[test]
    fn identify_base_case_returns_input() {
        let g = diagnosis();
        let ord = VarOrder::from_graph(&g);
        let q = Expr::atom(&["T"], &[]);
        let o = s(&g, &["T"]);
        assert_eq!(identify(&g, o, o, q.clone(), &ord).unwrap(), q);
    }

    #[test]
    fn identify_front_door_component() {
        let g = front_door();
        let ord = VarOrder::from_graph(&g);
        let mt = s(&g, &["M", "T"]);
        let q = component_kernel(&g, mt, g.observed(), &observational_joint(&g, g.observed()), &ord);
        assert_eq!(q.to_string(), "P(M) P(T|M,Z)");
        let r = identify(&g, s(&g, &["M"]), mt, q, &ord).unwrap();
        assert_eq!(r.to_string(), "P(M)");
    }
}
