//! From surface programs to core formulas: definition expansion, sort
//! resolution, negation elimination, fragment classification and lowering of
//! `foreach`/`exists` to core constraints.

mod classify;
mod desugar;
mod expand;
mod negate;
mod sorts;

pub use classify::{classify, BranchReport, FragmentReport, FragmentVerdict, Node, QSym};
pub use desugar::desugar;
pub use expand::expand;
pub use negate::{negate, nnf};
pub use sorts::{resolve_sorts, SortMap};

use crate::syntax::{Program, SFormula, Span};
use crate::terms::Formula;
use crate::theory::{Theory, TheoryError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RqError {
    #[error("{span}: unknown predicate `{name}/{arity}`")]
    UnknownPredicate { name: String, arity: usize, span: Span },
    #[error("{span}: `{name}` expects {expected} arguments, got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
        span: Span,
    },
    #[error("{span}: variable `{var}` of `{def}` is existential in its body and cannot be used {context}")]
    LocalVariable {
        var: String,
        def: String,
        context: &'static str,
        span: Span,
    },
    #[error("negation of the set equality `{0}` is not expressible with restricted quantifiers")]
    SetEqUnderNegation(String),
    #[error("disequality between sets (`{0}`) is not supported")]
    SetDisequality(String),
    #[error("{span}: `{name}` is a functional predicate and cannot be negated")]
    NegatedFunctional { name: String, span: Span },
    #[error("{span}: `{name}` in the functional part of an extended quantifier is not a functional predicate of this theory")]
    NotFunctional { name: String, span: Span },
    #[error("the functional part of an extended quantifier must be a conjunction of functional predicates, found `{0}`")]
    FunctionalShape(String),
    #[error("sort clash: {}", .0.join("; "))]
    Sort(Vec<String>),
    #[error("quantified variable `{0}` ranges over sets; set-valued elements are only supported by classification")]
    SetElement(String),
    #[error("`{0}` is not a set")]
    NotASet(String),
    #[error("`{0}` is not an element term")]
    NotAnElement(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

/// Front end up to classification, without lowering to core.
pub fn classify_program(program: &Program, negated: bool) -> Result<FragmentReport, RqError> {
    let mut query = expand(program)?;
    if negated {
        query = SFormula::neg(query);
    }
    let sorts = resolve_sorts(&query)?;
    Ok(classify(&nnf(&query, &sorts)?, &sorts))
}

/// A program ready for solving.
#[derive(Debug, Clone)]
pub struct Prepared {
    /// Expanded, negation-free surface query.
    pub surface: SFormula,
    pub sorts: SortMap,
    pub report: FragmentReport,
    pub core: Formula,
}

/// Runs the front end. With `negated`, the query is negated first (the
/// proving workflow).
pub fn prepare(program: &Program, negated: bool, theory: &dyn Theory) -> Result<Prepared, RqError> {
    let mut query = expand(program)?;
    if negated {
        query = SFormula::neg(query);
    }
    let sorts = resolve_sorts(&query)?;
    let surface = nnf(&query, &sorts)?;
    let report = classify(&surface, &sorts);
    let core = desugar(&surface, &sorts, theory)?;
    Ok(Prepared {
        surface,
        sorts,
        report,
        core,
    })
}
