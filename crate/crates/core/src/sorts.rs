//! Sort constraints: inference of `set(v)` / `isx(v)` for every free
//! variable and the clash check run before rewriting.

use std::collections::{BTreeMap, BTreeSet};

use crate::terms::{Constraint, Formula, Sort, SetTerm, Term, Var, VarKey, XTerm};

/// Conjoins one sort constraint per free variable occurrence sort. Sort
/// constraints already present are kept and not repeated, so the function
/// is idempotent.
pub fn sort_infer(f: &Formula) -> Formula {
    let present = sort_atoms(f);
    let mut extra = Vec::new();
    for v in f.free_vars() {
        let c = sort_constraint(&v);
        if !present.contains(&c) {
            extra.push(Formula::Atom(c));
        }
    }
    Formula::and_all(std::iter::once(f.clone()).chain(extra))
}

fn sort_constraint(v: &Var) -> Constraint {
    match v.sort() {
        Sort::Set => Constraint::IsSet(Term::Set(SetTerm::Var(v.clone()))),
        Sort::X => Constraint::IsX(Term::X(XTerm::Var(v.clone()))),
    }
}

fn sort_atoms(f: &Formula) -> BTreeSet<Constraint> {
    f.conjuncts()
        .into_iter()
        .filter_map(|c| match c {
            Formula::Atom(c @ (Constraint::IsSet(_) | Constraint::IsX(_))) => Some(c.clone()),
            _ => None,
        })
        .collect()
}

/// Returns `f` unchanged when its sort constraints are jointly satisfiable
/// and `False` otherwise.
pub fn sort_check(f: &Formula) -> Formula {
    match sort_table(f) {
        Ok(_) => f.clone(),
        Err(_) => Formula::False,
    }
}

/// A variable used at both sorts.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{name}` is used both as a set and as an element")]
pub struct SortClash {
    pub name: String,
}

/// Side table of variable sorts, built from every free occurrence and every
/// sort constraint in `f`.
pub fn sort_table(f: &Formula) -> Result<BTreeMap<VarKey, Sort>, SortClash> {
    let mut table: BTreeMap<VarKey, Sort> = BTreeMap::new();
    let mut note = |v: &Var, s: Sort| match table.insert(v.key(), s) {
        Some(old) if old != s => Err(SortClash {
            name: v.to_string(),
        }),
        _ => Ok(()),
    };
    for v in f.free_vars() {
        note(&v, v.sort())?;
    }
    for c in f.conjuncts() {
        match c {
            Formula::Atom(Constraint::IsSet(t)) => match t {
                Term::Set(SetTerm::Var(v)) | Term::X(XTerm::Var(v)) => note(v, Sort::Set)?,
                Term::Set(_) => {}
                Term::X(x) => {
                    return Err(SortClash {
                        name: x.to_string(),
                    })
                }
            },
            Formula::Atom(Constraint::IsX(t)) => match t {
                Term::Set(SetTerm::Var(v)) | Term::X(XTerm::Var(v)) => note(v, Sort::X)?,
                Term::X(_) => {}
                Term::Set(s) => return Err(SortClash { name: s.to_string() }),
            },
            _ => {}
        }
    }
    Ok(table)
}

/// Removes sort constraints, which the rewrite rules never look at.
pub fn strip_sorts(f: &Formula) -> Formula {
    match f {
        Formula::Atom(Constraint::IsSet(_) | Constraint::IsX(_)) => Formula::True,
        Formula::And(a, b) => Formula::and(strip_sorts(a), strip_sorts(b)),
        Formula::Or(a, b) => Formula::or(strip_sorts(a), strip_sorts(b)),
        other => other.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(n: &str) -> Var {
        Var::user(n, Sort::Set)
    }
    fn xv(n: &str) -> Var {
        Var::user(n, Sort::X)
    }

    #[test]
    fn infers_one_constraint_per_variable() {
        // B = {y / A}
        let f: Formula = Constraint::SetEq(
            SetTerm::Var(sv("B")),
            SetTerm::cons(XTerm::Var(xv("y")), SetTerm::Var(sv("A"))),
        )
        .into();
        let g = sort_infer(&f);
        let s = g.to_string();
        assert!(s.contains("set(A)") && s.contains("set(B)") && s.contains("isx(y)"), "{s}");
        assert_eq!(sort_infer(&g), g);
        assert_eq!(sort_check(&g), g);
    }

    #[test]
    fn clash_rewrites_to_false() {
        let f = Formula::and(
            Constraint::IsSet(Term::Set(SetTerm::Var(sv("A")))).into(),
            Constraint::IsX(Term::X(XTerm::Var(xv("A")))).into(),
        );
        assert_eq!(sort_check(&f), Formula::False);
        let g = Formula::and(
            Constraint::In(XTerm::Var(xv("A")), SetTerm::Empty).into(),
            Constraint::SetEq(SetTerm::Var(sv("A")), SetTerm::Empty).into(),
        );
        assert_eq!(sort_check(&sort_infer(&g)), Formula::False);
    }

    #[test]
    fn membership_in_empty_marks_element() {
        let f: Formula = Constraint::In(XTerm::Var(xv("x")), SetTerm::Empty).into();
        assert!(sort_infer(&f).to_string().contains("isx(x)"));
    }

    #[test]
    fn strip_removes_only_sort_constraints() {
        let f: Formula = Constraint::In(XTerm::Var(xv("x")), SetTerm::Empty).into();
        assert_eq!(strip_sorts(&sort_infer(&f)), f);
    }
}
