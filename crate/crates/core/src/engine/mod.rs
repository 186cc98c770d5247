//! The rewriting procedure: rules for set constraints, unification of
//! element terms, and a depth-first search over the alternatives produced by
//! nondeterministic rules.

mod rules;
mod search;
mod unify;

use std::collections::HashMap;
use std::fmt;

pub use search::{Engine, Leaf, Limits, SearchStats, Stop};

use crate::terms::{Constraint, Formula, SetTerm, Substitution, Term, TheoryLit, XTerm};
use crate::theory::TheoryError;

/// Identifier of a rewrite rule, as printed in traces. Numbered rules follow
/// the classical presentation of RQ rewriting (1-14); the others extend it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Fig(u8),
    /// `A = {a / A}` becomes `A = {a / N}`.
    Tail,
    /// Equal sets sharing their tail variable.
    SameTail,
    /// A fresh variable is moved to the left of a user variable.
    Orient,
    Nin1,
    Nin2,
    Nin3,
    Exists,
    Or,
    Unify,
    Neq,
    /// Ordering or functional literal applied to a pair.
    PairLit,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Fig(n) => write!(f, "({n})"),
            Rule::Tail => f.write_str("tail"),
            Rule::SameTail => f.write_str("same-tail"),
            Rule::Orient => f.write_str("orient"),
            Rule::Nin1 => f.write_str("nin1"),
            Rule::Nin2 => f.write_str("nin2"),
            Rule::Nin3 => f.write_str("nin3"),
            Rule::Exists => f.write_str("exists"),
            Rule::Or => f.write_str("or"),
            Rule::Unify => f.write_str("unify"),
            Rule::Neq => f.write_str("neq"),
            Rule::PairLit => f.write_str("pair-lit"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("malformed constraint `{0}`: {1}")]
    Malformed(String, &'static str),
}

/// A conjunction under rewriting. Items are atoms or disjunctions; element
/// bindings found by unification are kept aside in `xsubst`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct State {
    pub items: Vec<Formula>,
    pub xsubst: Substitution,
    /// Rule applications on the path from the root.
    pub steps: u64,
}

impl State {
    /// `None` when `f` flattens to false. Sort constraints are dropped.
    pub fn new(f: &Formula) -> Option<State> {
        let mut items = Vec::new();
        flatten_into(f.clone(), &mut items).then_some(State {
            items,
            xsubst: Substitution::new(),
            steps: 0,
        })
    }

    /// The state read back as a formula, element bindings included as
    /// equations.
    pub fn to_formula(&self) -> Formula {
        let bindings = self.xsubst.iter().filter_map(|(v, t)| match t {
            Term::X(x) => Some(Formula::from(TheoryLit::eq(XTerm::Var(v.clone()), x.clone()))),
            Term::Set(_) => None,
        });
        Formula::and_all(self.items.iter().cloned().chain(bindings))
    }

    /// The set constraints of the state, i.e. everything but theory literals.
    pub fn set_part(&self) -> Formula {
        Formula::and_all(
            self.items
                .iter()
                .filter(|f| !matches!(f, Formula::Atom(Constraint::Theory(_))))
                .cloned(),
        )
    }

    pub fn theory_lits(&self) -> Vec<TheoryLit> {
        self.items
            .iter()
            .filter_map(|f| match f {
                Formula::Atom(Constraint::Theory(l)) => Some(l.clone()),
                _ => None,
            })
            .collect()
    }

    /// Irreducible form: every set constraint is a solved equation `A = t`
    /// whose variable occurs nowhere else, a RUQ over a variable domain, or
    /// `x nin A`; no disjunction is left.
    pub fn is_irreducible(&self) -> bool {
        self.items.iter().enumerate().all(|(i, f)| match f {
            Formula::Atom(Constraint::SetEq(SetTerm::Var(a), t)) => {
                t.tail_var() != Some(a) && !self.occurs_elsewhere(a, i)
            }
            Formula::Atom(Constraint::Subset(SetTerm::Var(_), SetTerm::Ris(r))) => {
                matches!(r.dom, SetTerm::Var(_))
            }
            Formula::Atom(Constraint::NotIn(_, SetTerm::Var(_))) => true,
            Formula::Atom(Constraint::Theory(_)) => true,
            _ => false,
        })
    }

    pub(crate) fn occurs_elsewhere(&self, v: &crate::terms::Var, i: usize) -> bool {
        self.items
            .iter()
            .enumerate()
            .any(|(j, f)| j != i && f.occurs(v))
    }

    /// Number of occurrences of each set variable over all items.
    pub(crate) fn occurrences(&self) -> HashMap<crate::terms::Var, usize> {
        let mut out: HashMap<crate::terms::Var, usize> = HashMap::new();
        for f in &self.items {
            f.visit_set_vars(&mut |v| match out.get_mut(v) {
                Some(n) => *n += 1,
                None => {
                    out.insert(v.clone(), 1);
                }
            });
        }
        out
    }

    /// Replaces item `i` by the conjuncts of `f`; false when `f` is false.
    fn replace(&mut self, i: usize, f: Formula) -> bool {
        let mut flat = Vec::new();
        if !flatten_into(f, &mut flat) {
            return false;
        }
        self.items.splice(i..=i, flat);
        true
    }
}

/// Appends the conjuncts of `f`; false when one of them is false.
fn flatten_into(f: Formula, out: &mut Vec<Formula>) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::And(a, b) => flatten_into(*a, out) && flatten_into(*b, out),
        Formula::Atom(Constraint::IsSet(_) | Constraint::IsX(_)) => true,
        other => {
            out.push(other);
            true
        }
    }
}

/// One rule application on a single formula, for testing rules in
/// isolation: the applied rule and the alternatives it produced, each read
/// back as a formula (solved element bindings appear as equations).
pub fn rewrite_once(
    f: &Formula,
    theory: &dyn crate::theory::Theory,
    supply: &crate::terms::VarSupply,
) -> Result<Option<(Rule, Vec<Formula>)>, EngineError> {
    let Some(state) = State::new(f) else {
        return Ok(None);
    };
    let engine = Engine::new(theory, supply.clone());
    Ok(engine
        .rewrite(&state)?
        .map(|(rule, alts)| (rule, alts.iter().map(|s| s.as_ref().map_or(Formula::False, State::to_formula)).collect())))
}

/// Rule that leaves `c` as it is in the context of the other conjuncts `rest`:
/// `(3)`, `(14)` or `nin3`.
pub fn irreducible_rule(c: &Constraint, rest: &[Formula]) -> Option<Rule> {
    let mut items = vec![Formula::Atom(c.clone())];
    items.extend(rest.iter().cloned());
    let st = State {
        items,
        xsubst: Substitution::new(),
        steps: 0,
    };
    rules::keeps(&st, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{find_model, Universe, DEFAULT_CAP};
    use crate::rq::{desugar, resolve_sorts};
    use crate::syntax::parse_formula;
    use crate::terms::VarSupply;
    use crate::theory::LiaTheory;

    fn core(src: &str) -> Formula {
        let f = parse_formula(src).unwrap();
        desugar(&f, &resolve_sorts(&f).unwrap(), &LiaTheory).unwrap()
    }

    fn step(src: &str) -> (String, Vec<Formula>) {
        let (rule, alts) = rewrite_once(&core(src), &LiaTheory, &VarSupply::new())
            .unwrap()
            .unwrap_or_else(|| panic!("no rule applies to {src}"));
        (rule.to_string(), alts)
    }

    fn sat(f: &Formula) -> bool {
        let u = Universe {
            int_lo: 0,
            int_hi: 2,
            max_set_card: 2,
            ..Universe::default()
        };
        find_model(f, &u, &LiaTheory, DEFAULT_CAP).unwrap().is_some()
    }

    #[test]
    fn rule_selection() {
        for (src, rule) in [
            ("foreach(X in {}, X > 0)", "(1)"),
            ("foreach(X in {1 / A}, X > 0)", "(2)"),
            ("X in {}", "(4)"),
            ("X in {1 / A}", "(5)"),
            ("X in A", "(6)"),
            ("{} = {}", "(7)"),
            ("A = A & X nin A", "(8)"),
            ("{1} = A", "(9)"),
            ("A = {1} & X nin A", "(10)"),
            ("{1 / A} = {}", "(11)"),
            ("{} = {1 / A}", "(12)"),
            ("{X / A} = {Y / B}", "(13)"),
            ("A = {1 / A}", "tail"),
            ("{X / A} = {Y / A}", "same-tail"),
            ("X nin {}", "nin1"),
            ("X nin {1 / A}", "nin2"),
            ("exists(X in A, X > 0)", "exists"),
        ] {
            assert_eq!(step(src).0, rule, "{src}");
        }
    }

    #[test]
    fn families_are_exhausted_in_order() {
        // The membership is rewritten before the earlier set equation.
        assert_eq!(step("{} = {1 / A} & X in {}").0, "(4)");
        assert_eq!(step("X > 0 & exists(Y in A, Y > X)").0, "exists");
    }

    #[test]
    fn set_unification_has_four_alternatives() {
        let (_, alts) = step("{X / A} = {Y / B}");
        assert_eq!(alts.len(), 4);
    }

    #[test]
    fn irreducible_shapes() {
        let c = |s: &str| match core(s) {
            Formula::Atom(c) => c,
            f => panic!("{f}"),
        };
        let rest = [core("X > 0")];
        assert_eq!(irreducible_rule(&c("foreach(X in A, X > 0)"), &rest), Some(Rule::Fig(3)));
        assert_eq!(irreducible_rule(&c("X nin A"), &rest), Some(Rule::Nin3));
        assert_eq!(irreducible_rule(&c("A = {1 / B}"), &rest), Some(Rule::Fig(14)));
        assert_eq!(irreducible_rule(&c("A = {1 / B}"), &[core("X in A")]), None);
        assert_eq!(irreducible_rule(&c("A = {1 / A}"), &rest), None);
    }

    #[test]
    fn single_steps_preserve_satisfiability() {
        for src in [
            "foreach(X in {1, 2 / A}, X > 1)",
            "X in {1, 2} & X > 1",
            "X nin {1 / A} & X = 1",
            "{X / A} = {Y / B} & X neq Y & A = {}",
            "{X, 1 / A} = {2, Y / A} & X > 1",
            "A = {1 / A} & 2 nin A",
            "exists(X in A, X > 1) & A = {1}",
        ] {
            let f = core(src);
            let (rule, alts) = step(src);
            assert_eq!(sat(&f), alts.iter().any(sat), "{rule} on {src}");
        }
    }

    #[test]
    fn state_flattening() {
        let st = State::new(&core("X in A & (Y > 0 & A = {})")).unwrap();
        assert_eq!(st.items.len(), 3);
        assert!(State::new(&core("X in A & false")).is_none());
        assert!(!st.is_irreducible());
        assert!(State::new(&core("X nin A & foreach(Y in A, Y > 0) & B = {1 / C}"))
            .unwrap()
            .is_irreducible());
    }
}
