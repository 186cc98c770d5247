use crate::oracle::Value;
use crate::terms::{Substitution, Term, TheoryLit, VarSupply, XTerm};
use crate::theory::Theory;

pub(super) enum Unified {
    Fail,
    /// Most general unifier plus the equations left to the theory (those
    /// involving function applications).
    Done(Substitution, Vec<TheoryLit>),
}

fn const_value(t: &XTerm) -> Option<Value> {
    match t {
        XTerm::Atom(a) => Some(Value::Atom(a.clone())),
        XTerm::Int(n) => Some(Value::Int(*n)),
        _ => None,
    }
}

/// Syntactic unification of element terms. Pairs are free constructors;
/// constants are distinct from each other and from pairs; a variable can
/// only be bound to a constant the theory admits.
pub(super) fn unify(a: &XTerm, b: &XTerm, theory: &dyn Theory, supply: &VarSupply) -> Unified {
    let mut s = Substitution::new();
    let mut residue = Vec::new();
    let mut work = vec![(a.clone(), b.clone())];
    while let Some((x, y)) = work.pop() {
        let x = s.apply_x(&x);
        let y = s.apply_x(&y);
        if x == y {
            continue;
        }
        match (&x, &y) {
            (XTerm::App(..), _) | (_, XTerm::App(..)) => {
                if matches!((&x, &y), (XTerm::Pair(..), _) | (_, XTerm::Pair(..))) {
                    return Unified::Fail;
                }
                residue.push(TheoryLit::eq(x.clone(), y.clone()));
            }
            (XTerm::Var(v), XTerm::Var(w)) => {
                // Prefer eliminating generated variables.
                if w.is_fresh() && !v.is_fresh() {
                    s.bind(w.clone(), Term::X(x.clone()), supply);
                } else {
                    s.bind(v.clone(), Term::X(y.clone()), supply);
                }
            }
            (XTerm::Var(v), t) | (t, XTerm::Var(v)) => {
                if t.contains_var(v) {
                    return Unified::Fail;
                }
                if let Some(c) = const_value(t) {
                    if !theory.admits(&c) {
                        return Unified::Fail;
                    }
                }
                s.bind(v.clone(), Term::X(t.clone()), supply);
            }
            (XTerm::Pair(x1, x2), XTerm::Pair(y1, y2)) => {
                work.push(((**x2).clone(), (**y2).clone()));
                work.push(((**x1).clone(), (**y1).clone()));
            }
            _ => return Unified::Fail,
        }
    }
    let residue = residue.iter().map(|l| s.apply_lit(l)).collect();
    Unified::Done(s, residue)
}
