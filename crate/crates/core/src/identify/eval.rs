use std::cell::RefCell;
use std::collections::HashMap;

use thiserror::Error;

use super::expr::{base_name, Expr, Source};
use super::table::Table;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("variable `{0}` is not available")]
    UnknownVariable(String),
    #[error("expression still contains an interventional term")]
    NotGrounded,
    #[error("atom P({0}) repeats a variable between outcome and context")]
    MalformedAtom(String),
    #[error("positivity violation: division by zero at {}", fmt_cell(.0))]
    PositivityViolation(Vec<(String, usize)>),
}

fn fmt_cell(cell: &[(String, usize)]) -> String {
    if cell.is_empty() {
        return "the empty context".into();
    }
    cell.iter()
        .map(|(v, s)| format!("{v}={s}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Supplies numeric values for observational atoms.
pub trait AtomSource {
    fn cardinality(&self, var: &str) -> Result<usize, EvalError>;
    /// Table for `P(over | given)` over the variables `over ∪ given`.
    fn atom(&self, over: &[String], given: &[String]) -> Result<Table, EvalError>;
}

/// Answers atoms by marginalizing and conditioning a joint table.
pub struct JointSource<'a> {
    joint: &'a Table,
    cache: RefCell<HashMap<(Vec<String>, Vec<String>), Table>>,
}

impl<'a> JointSource<'a> {
    pub fn new(joint: &'a Table) -> Self {
        JointSource {
            joint,
            cache: RefCell::new(HashMap::new()),
        }
    }
}

impl AtomSource for JointSource<'_> {
    fn cardinality(&self, var: &str) -> Result<usize, EvalError> {
        self.joint
            .cardinality_of(var)
            .ok_or_else(|| EvalError::UnknownVariable(var.to_string()))
    }

    fn atom(&self, over: &[String], given: &[String]) -> Result<Table, EvalError> {
        let key = (over.to_vec(), given.to_vec());
        if let Some(t) = self.cache.borrow().get(&key) {
            return Ok(t.clone());
        }
        for v in over.iter().chain(given) {
            self.cardinality(v)?;
        }
        if over.iter().any(|v| given.contains(v)) {
            return Err(EvalError::MalformedAtom(format!("{over:?}|{given:?}")));
        }
        let all: Vec<String> = over.iter().chain(given).cloned().collect();
        let num = self.joint.marginal(&all);
        let t = if given.is_empty() {
            num
        } else {
            num.div(&self.joint.marginal(given))
        };
        self.cache.borrow_mut().insert(key, t.clone());
        Ok(t)
    }
}

/// Reads an atom whose bound copies (`X~k`) stand for their base vertex.
fn observational_atom(over: &[String], given: &[String], src: &dyn AtomSource) -> Result<Table, EvalError> {
    let renamed = over.iter().chain(given).any(|v| base_name(v) != v);
    if !renamed {
        return src.atom(over, given);
    }
    let base = |vs: &[String]| vs.iter().map(|v| base_name(v).to_string()).collect::<Vec<_>>();
    let t = src.atom(&base(over), &base(given))?;
    let lookup: Vec<String> = t
        .vars()
        .iter()
        .map(|tv| {
            over.iter()
                .chain(given)
                .find(|v| base_name(v) == tv)
                .cloned()
                .unwrap_or_else(|| tv.clone())
        })
        .collect();
    Ok(t.with_vars(lookup))
}

/// Evaluates an expression to a table over its free variables. Undefined
/// cells (from division by zero) are left as NaN.
pub fn evaluate_raw(e: &Expr, src: &dyn AtomSource) -> Result<Table, EvalError> {
    match e {
        Expr::Kernel {
            over,
            given,
            source,
        } => match source {
            Source::Observational => observational_atom(over, given, src),
            Source::Interventional { .. } => Err(EvalError::NotGrounded),
            Source::Derived { expr } => evaluate_raw(expr, src),
        },
        Expr::Product { factors } => {
            let mut acc = Table::scalar(1.0);
            for f in factors {
                acc = acc.mul(&evaluate_raw(f, src)?);
            }
            Ok(acc)
        }
        Expr::Quotient { num, den } => Ok(evaluate_raw(num, src)?.div(&evaluate_raw(den, src)?)),
        Expr::Marginal { sum_out, of } => {
            let body = evaluate_raw(of, src)?;
            let mut factor = 1.0;
            for v in sum_out {
                if body.position(v).is_none() {
                    factor *= src.cardinality(base_name(v))? as f64;
                }
            }
            let out = body.sum_out(sum_out);
            Ok(if factor == 1.0 {
                out
            } else {
                out.mul(&Table::scalar(factor))
            })
        }
        Expr::Normalize { target, of } => {
            let mut body = evaluate_raw(of, src)?;
            if body.position(target).is_none() {
                body = body.broadcast(target, src.cardinality(base_name(target))?);
            }
            Ok(body.normalize_over(target))
        }
    }
}

/// Evaluates an expression and reports a positivity violation if any cell of
/// the result is undefined.
pub fn evaluate(e: &Expr, src: &dyn AtomSource) -> Result<Table, EvalError> {
    let t = evaluate_raw(e, src)?;
    match t.first_nan() {
        Some(cell) => Err(EvalError::PositivityViolation(cell)),
        None => Ok(t),
    }
}

/// Exact evaluation against a joint probability table over observed variables.
pub fn evaluate_discrete(e: &Expr, joint: &Table) -> Result<Table, EvalError> {
    evaluate(e, &JointSource::new(joint))
}
