//! Pluggable element theories.
//!
//! A theory decides conjunctions of its literals, complements literals for
//! negation, evaluates literals on concrete values for the oracle, and
//! registers the functional predicates usable in extended quantifiers.

mod eq;
mod lia;
pub mod omega;

pub use eq::EqTheory;
pub use lia::LiaTheory;

use std::collections::BTreeMap;
use std::fmt;

use crate::oracle::Value;
use crate::terms::{TheoryLit, Var, XTerm};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TheoryError {
    #[error("theory `{theory}` does not know predicate `{pred}/{arity}`")]
    UnknownPredicate {
        theory: &'static str,
        pred: String,
        arity: usize,
    },
    #[error("`{0}` has no complement in this theory and cannot be negated")]
    NoComplement(String),
    #[error("unknown functional predicate `{name}`; registered: {registered}")]
    UnknownFunctional { name: String, registered: String },
    #[error("literal `{0}` is outside the theory's fragment: {1}")]
    Unsupported(String, String),
    #[error("cannot evaluate `{0}`: {1}")]
    Eval(String, String),
}

/// Outcome of a satisfiability check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TheoryVerdict {
    Sat(BTreeMap<Var, Value>),
    Unsat,
}

impl TheoryVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, TheoryVerdict::Sat(_))
    }
}

/// A predicate `p(x1,...,xn,y)` with exactly one `y` for every input tuple.
#[derive(Clone)]
pub struct FunctionalPredicate {
    pub name: &'static str,
    /// Number of arguments, result included.
    pub arity: usize,
    pub eval: fn(&[Value]) -> Option<Value>,
}

impl fmt::Debug for FunctionalPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

pub trait Theory: Send + Sync {
    fn name(&self) -> &'static str;

    /// Decides a conjunction of literals. The returned model assigns every
    /// variable of `lits`.
    fn sat(&self, lits: &[TheoryLit]) -> Result<TheoryVerdict, TheoryError>;

    fn negate_lit(&self, lit: &TheoryLit) -> Result<TheoryLit, TheoryError>;

    fn functional_predicates(&self) -> &[FunctionalPredicate];

    fn fp_lookup(&self, name: &str) -> Result<&FunctionalPredicate, TheoryError> {
        let fps = self.functional_predicates();
        fps.iter().find(|f| f.name == name).ok_or_else(|| {
            let names: Vec<_> = fps.iter().map(|f| format!("{f:?}")).collect();
            TheoryError::UnknownFunctional {
                name: name.to_string(),
                registered: if names.is_empty() {
                    "none".into()
                } else {
                    names.join(", ")
                },
            }
        })
    }

    /// Truth of `pred(args)` on concrete values.
    fn eval_lit(&self, pred: &str, args: &[Value]) -> Result<bool, TheoryError>;

    /// Value of a theory function application.
    fn eval_fn(&self, f: &str, args: &[Value]) -> Result<Value, TheoryError>;

    /// Whether a concrete value belongs to the theory's element domain.
    fn admits(&self, v: &Value) -> bool;

    /// Value given to variables no constraint mentions.
    fn default_value(&self) -> Value;
}

/// Looks a theory up by its CLI name.
pub fn by_name(name: &str) -> Option<Box<dyn Theory>> {
    match name {
        "eq" => Some(Box::new(EqTheory)),
        "lia" => Some(Box::new(LiaTheory)),
        _ => None,
    }
}

/// Equality and disequality are shared by every theory; both are decided
/// structurally on values.
pub(crate) fn eval_equality(pred: &str, args: &[Value]) -> Option<bool> {
    match (pred, args) {
        ("=", [a, b]) => Some(a == b),
        ("neq", [a, b]) => Some(a != b),
        _ => None,
    }
}

pub(crate) fn lit_string(l: &TheoryLit) -> String {
    l.to_string()
}

pub(crate) fn eq_complement(l: &TheoryLit) -> Option<TheoryLit> {
    match (&*l.pred, l.args.as_slice()) {
        ("=", [a, b]) => Some(TheoryLit::neq(a.clone(), b.clone())),
        ("neq", [a, b]) => Some(TheoryLit::eq(a.clone(), b.clone())),
        _ => None,
    }
}

pub(crate) fn collect_vars(lits: &[TheoryLit]) -> Vec<Var> {
    let mut out = std::collections::BTreeSet::new();
    for l in lits {
        for a in &l.args {
            out.extend(a.vars());
        }
    }
    out.into_iter().collect()
}

pub(crate) fn is_const(t: &XTerm) -> bool {
    matches!(t, XTerm::Atom(_) | XTerm::Int(_))
}
