//! Satisfiability of quantifier-free element theories extended with nested
//! restricted quantifiers over finite sets.
//!
//! Pipeline: [`syntax`] parses a program, [`rq`] expands definitions,
//! eliminates negation, classifies the formula and lowers it to core
//! [`terms`]; [`engine`] rewrites set constraints to an irreducible form
//! while a [`theory`] decides the element part; [`solver`] drives the search
//! and builds answers. [`oracle`] is an independent evaluator used to check
//! all of the above.

pub mod engine;
pub mod oracle;
pub mod rq;
pub mod solver;
pub mod sorts;
pub mod syntax;
pub mod terms;
pub mod theory;

pub use solver::{prove, solve, Answer, Options, ProveOutcome, SolveError, Verdict};
