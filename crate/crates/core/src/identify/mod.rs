//! Symbolic identification of interventional distributions.
//!
//! [`uq`] turns a conditional query into an unconditional one, [`id`] expresses
//! `P_x(y)` through observational conditionals, and [`evaluate_discrete`]
//! computes the result exactly from a joint table.

mod eval;
mod expr;
mod id;
mod parse;
mod simplify;
mod table;

pub use eval::{evaluate, evaluate_discrete, evaluate_raw, AtomSource, EvalError, JointSource};
pub use expr::{base_name, Expr, Source, VarOrder, FRESH_SEP};
pub use id::{component_kernel, id, id_conditional, identify, observational_joint, uq, IdFailure, Query};
pub use parse::{parse_expr, ExprParseError};
pub use simplify::simplify;
pub use table::Table;
