//! Reference semantics: direct evaluation of formulas under a valuation and
//! brute-force model search over a bounded universe. Independent of the
//! rewrite rules, so it can serve as a test oracle for the solver.

mod enumerate;
mod eval;
mod value;

pub use enumerate::{enumerate_models, find_model, OracleError, Universe, DEFAULT_CAP};
pub use eval::{eval, eval_constraint, eval_set_term, eval_xterm, EvalError, Valuation};
pub use value::Value;
