use std::cell::OnceCell;
use std::collections::HashMap;

use super::unify::{unify, Unified};
use super::{EngineError, Rule, State};
use crate::terms::{
    Constraint, CtrlTerm, Formula, Ris, SetTerm, Sort, Substitution, Term, TheoryLit, Var,
    VarSupply, XTerm,
};
use crate::theory::Theory;

pub(super) struct Cx<'a> {
    pub theory: &'a dyn Theory,
    pub supply: &'a VarSupply,
    /// Occurrence counts of the current state, built on first use.
    pub occ: OnceCell<HashMap<Var, usize>>,
}

fn occurs_elsewhere(st: &State, cx: &Cx, v: &Var, i: usize) -> bool {
    let total = cx.occ.get_or_init(|| st.occurrences()).get(v).copied().unwrap_or(0);
    let mut own = 0;
    st.items[i].visit_set_vars(&mut |w| own += usize::from(w == v));
    total > own
}

pub(super) enum Effect {
    /// Item replaced by one of the alternatives.
    Alts(Vec<Formula>),
    /// The equation `v = t` stays; `v` is replaced by `t` everywhere else.
    SetSubst(Var, SetTerm),
    /// Element bindings applied everywhere; the item becomes the residue.
    XSubst(Substitution, Formula),
}

pub(super) struct Rewrite {
    pub rule: Rule,
    pub effect: Effect,
}

fn alts(rule: Rule, alts: Vec<Formula>) -> Option<Rewrite> {
    Some(Rewrite {
        rule,
        effect: Effect::Alts(alts),
    })
}

fn one(rule: Rule, f: Formula) -> Option<Rewrite> {
    alts(rule, vec![f])
}

/// Families in the order they are exhausted: existentials, universals,
/// membership, set equality, element literals.
pub(super) const FAMILIES: usize = 5;

pub(super) fn family(f: &Formula) -> Option<usize> {
    match f {
        Formula::Atom(Constraint::Exists(_)) => Some(0),
        Formula::Atom(Constraint::Subset(..)) => Some(1),
        Formula::Atom(Constraint::In(..) | Constraint::NotIn(..)) => Some(2),
        Formula::Atom(Constraint::SetEq(..)) => Some(3),
        Formula::Atom(Constraint::Theory(_)) => Some(4),
        _ => None,
    }
}

/// The rewrite applicable to item `i`, if any.
pub(super) fn apply(st: &State, i: usize, cx: &Cx) -> Result<Option<Rewrite>, EngineError> {
    let Formula::Atom(c) = &st.items[i] else {
        return Ok(None);
    };
    Ok(match c {
        Constraint::Exists(r) => one(Rule::Exists, exists(r, cx)),
        Constraint::Subset(l, SetTerm::Ris(r)) => match l {
            SetTerm::Empty => one(Rule::Fig(1), Formula::True),
            SetTerm::Cons(a, rest) => one(Rule::Fig(2), instantiate(r, a, rest, cx)),
            _ => None,
        },
        Constraint::Subset(..) => {
            return Err(EngineError::Malformed(c.to_string(), "subset needs an intensional right side"))
        }
        Constraint::In(a, s) => match s {
            SetTerm::Empty => one(Rule::Fig(4), Formula::False),
            SetTerm::Cons(b, rest) => alts(
                Rule::Fig(5),
                vec![
                    TheoryLit::eq(a.clone(), b.clone()).into(),
                    Constraint::In(a.clone(), (**rest).clone()).into(),
                ],
            ),
            SetTerm::Var(_) => {
                let n = cx.supply.fresh(Sort::Set);
                one(
                    Rule::Fig(6),
                    Constraint::SetEq(s.clone(), SetTerm::cons(a.clone(), SetTerm::Var(n))).into(),
                )
            }
            SetTerm::Ris(_) => {
                return Err(EngineError::Malformed(c.to_string(), "membership in an intensional set"))
            }
        },
        Constraint::NotIn(a, s) => match s {
            SetTerm::Empty => one(Rule::Nin1, Formula::True),
            SetTerm::Cons(b, rest) => one(
                Rule::Nin2,
                Formula::and(
                    TheoryLit::neq(a.clone(), b.clone()).into(),
                    Constraint::NotIn(a.clone(), (**rest).clone()).into(),
                ),
            ),
            SetTerm::Var(_) => None,
            SetTerm::Ris(_) => {
                return Err(EngineError::Malformed(c.to_string(), "membership in an intensional set"))
            }
        },
        Constraint::SetEq(l, r) => set_eq(st, i, l, r, cx),
        Constraint::Theory(l) => literal(l, cx),
        Constraint::IsSet(_) | Constraint::IsX(_) => None,
    })
}

/// The rule under which item `i` is left unchanged, if it is one of the
/// irreducible shapes.
pub(super) fn keeps(st: &State, i: usize) -> Option<Rule> {
    match &st.items[i] {
        Formula::Atom(Constraint::Subset(SetTerm::Var(_), SetTerm::Ris(_))) => Some(Rule::Fig(3)),
        Formula::Atom(Constraint::NotIn(_, SetTerm::Var(_))) => Some(Rule::Nin3),
        Formula::Atom(Constraint::SetEq(SetTerm::Var(a), r)) => {
            let oriented = match r {
                SetTerm::Var(b) => !(b.is_fresh() && !a.is_fresh()) && a != b,
                _ => true,
            };
            (oriented && r.tail_var() != Some(a) && !st.occurs_elsewhere(a, i)).then_some(Rule::Fig(14))
        }
        _ => None,
    }
}

fn set_eq(st: &State, i: usize, l: &SetTerm, r: &SetTerm, cx: &Cx) -> Option<Rewrite> {
    use SetTerm::*;
    match (l, r) {
        (Empty, Empty) => one(Rule::Fig(7), Formula::True),
        (Var(a), Var(b)) if a == b => one(Rule::Fig(8), Formula::True),
        (Empty | Cons(..), Var(_)) => one(Rule::Fig(9), Constraint::SetEq(r.clone(), l.clone()).into()),
        (Var(a), Var(b)) if b.is_fresh() && !a.is_fresh() => {
            one(Rule::Orient, Constraint::SetEq(r.clone(), l.clone()).into())
        }
        (Var(a), _) if r.tail_var() == Some(a) => {
            let (elems, _) = r.split_ext();
            let n = cx.supply.fresh(Sort::Set);
            one(
                Rule::Tail,
                Constraint::SetEq(l.clone(), SetTerm::ext(elems.into_iter().cloned(), Var(n))).into(),
            )
        }
        (Var(a), _) => occurs_elsewhere(st, cx, a, i).then(|| Rewrite {
            rule: Rule::Fig(10),
            effect: Effect::SetSubst(a.clone(), r.clone()),
        }),
        (Cons(..), Empty) => one(Rule::Fig(11), Formula::False),
        (Empty, Cons(..)) => one(Rule::Fig(12), Formula::False),
        (Cons(..), Cons(..)) => match (l.tail_var(), r.tail_var()) {
            (Some(x), Some(y)) if x == y => same_tail(l, r, x, cx),
            _ => unify_ext(l, r, cx),
        },
        _ => None,
    }
}

/// `{a / A} = {b / B}`: the four alternatives of set unification.
fn unify_ext(l: &SetTerm, r: &SetTerm, cx: &Cx) -> Option<Rewrite> {
    let (SetTerm::Cons(a, ra), SetTerm::Cons(b, rb)) = (l, r) else {
        unreachable!()
    };
    let (ra, rb) = (&**ra, &**rb);
    let ab: Formula = TheoryLit::eq(a.clone(), b.clone()).into();
    let eq = |x: &SetTerm, y: &SetTerm| -> Formula { Constraint::SetEq(x.clone(), y.clone()).into() };
    let n = SetTerm::Var(cx.supply.fresh(Sort::Set));
    alts(
        Rule::Fig(13),
        vec![
            Formula::and(ab.clone(), eq(ra, rb)),
            Formula::and(ab.clone(), eq(l, rb)),
            Formula::and(ab, eq(ra, r)),
            Formula::and(
                eq(ra, &SetTerm::cons(b.clone(), n.clone())),
                eq(rb, &SetTerm::cons(a.clone(), n)),
            ),
        ],
    )
}

/// `{t0..tm / X} = {s0..sn / X}`.
fn same_tail(l: &SetTerm, r: &SetTerm, x: &Var, cx: &Cx) -> Option<Rewrite> {
    let (ts, _) = l.split_ext();
    let (ss, _) = r.split_ext();
    let tail = SetTerm::Var(x.clone());
    let t0 = ts[0].clone();
    let t_rest = SetTerm::ext(ts[1..].iter().map(|t| (*t).clone()), tail.clone());
    let eq = |a: SetTerm, b: SetTerm| -> Formula { Constraint::SetEq(a, b).into() };
    let mut out = Vec::new();
    for j in 0..ss.len() {
        let pick: Formula = TheoryLit::eq(t0.clone(), ss[j].clone()).into();
        let without = SetTerm::ext(
            ss.iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, s)| (*s).clone()),
            tail.clone(),
        );
        out.push(Formula::and(pick.clone(), eq(t_rest.clone(), without.clone())));
        out.push(Formula::and(pick.clone(), eq(l.clone(), without)));
        out.push(Formula::and(pick, eq(t_rest.clone(), r.clone())));
    }
    let n = SetTerm::Var(cx.supply.fresh(Sort::Set));
    out.push(Formula::and(
        eq(tail, SetTerm::cons(t0, n.clone())),
        eq(
            SetTerm::ext(ts[1..].iter().map(|t| (*t).clone()), n.clone()),
            SetTerm::ext(ss.iter().map(|s| (*s).clone()), n),
        ),
    ));
    alts(Rule::SameTail, out)
}

/// A term with the shape of `c` built from fresh element variables.
fn skeleton(c: &CtrlTerm, supply: &VarSupply) -> XTerm {
    match c {
        CtrlTerm::Var(_) => XTerm::Var(supply.fresh(Sort::X)),
        CtrlTerm::Pair(a, b) => XTerm::pair(skeleton(a, supply), skeleton(b, supply)),
    }
}

/// Matches a control term against an element. Element variables facing a
/// pair pattern are equated to a fresh skeleton; constants facing a pair
/// pattern make the match fail.
fn match_ctrl(
    c: &CtrlTerm,
    e: &XTerm,
    binds: &mut Vec<(Var, Term)>,
    eqs: &mut Vec<Formula>,
    supply: &VarSupply,
) -> bool {
    match (c, e) {
        (CtrlTerm::Var(v), e) => {
            binds.push((v.clone(), Term::X(e.clone())));
            true
        }
        (CtrlTerm::Pair(c1, c2), XTerm::Pair(e1, e2)) => {
            match_ctrl(c1, e1, binds, eqs, supply) && match_ctrl(c2, e2, binds, eqs, supply)
        }
        (CtrlTerm::Pair(..), XTerm::Var(_)) => {
            let skel = skeleton(c, supply);
            eqs.push(TheoryLit::eq(e.clone(), skel.clone()).into());
            match_ctrl(c, &skel, binds, eqs, supply)
        }
        (CtrlTerm::Pair(..), _) => false,
    }
}

fn fresh_locals(r: &Ris, binds: &mut Vec<(Var, Term)>, supply: &VarSupply) {
    for l in &r.locals {
        binds.push((l.clone(), Term::X(XTerm::Var(supply.fresh(l.sort())))));
    }
}

/// Body of `r` for element `a`, conjoined with the RUQ over the rest.
fn instantiate(r: &Ris, a: &XTerm, rest: &SetTerm, cx: &Cx) -> Formula {
    let mut binds = Vec::new();
    let mut eqs = Vec::new();
    if !match_ctrl(&r.ctrl, a, &mut binds, &mut eqs, cx.supply) {
        return Formula::False;
    }
    fresh_locals(r, &mut binds, cx.supply);
    let s = Substitution::simultaneous(binds);
    Formula::and_all(eqs.into_iter().chain([
        s.apply_formula(&r.fpreds, cx.supply),
        s.apply_formula(&r.filter, cx.supply),
        Constraint::foreach(r.with_dom(rest.clone())).into(),
    ]))
}

/// `exists(c in D, f)` becomes `n in D & f[c := n]` with `n` a fresh
/// skeleton of `c`.
fn exists(r: &Ris, cx: &Cx) -> Formula {
    let skel = skeleton(&r.ctrl, cx.supply);
    let mut binds = Vec::new();
    match_ctrl(&r.ctrl, &skel, &mut binds, &mut Vec::new(), cx.supply);
    fresh_locals(r, &mut binds, cx.supply);
    let s = Substitution::simultaneous(binds);
    Formula::and_all([
        Constraint::In(skel, r.dom.clone()).into(),
        s.apply_formula(&r.fpreds, cx.supply),
        s.apply_formula(&r.filter, cx.supply),
    ])
}

fn is_const(t: &XTerm) -> bool {
    matches!(t, XTerm::Atom(_) | XTerm::Int(_))
}

fn literal(l: &TheoryLit, cx: &Cx) -> Option<Rewrite> {
    match (&*l.pred, l.args.as_slice()) {
        ("=", [a, b]) => match unify(a, b, cx.theory, cx.supply) {
            Unified::Fail => one(Rule::Unify, Formula::False),
            Unified::Done(s, residue) => {
                if s.is_empty() && residue.len() == 1 && residue[0] == *l {
                    return None;
                }
                let residue = Formula::and_all(residue.into_iter().map(Formula::from));
                Some(Rewrite {
                    rule: Rule::Unify,
                    effect: Effect::XSubst(s, residue),
                })
            }
        },
        ("neq", [a, b]) => {
            if a == b {
                return one(Rule::Neq, Formula::False);
            }
            match (a, b) {
                (a, b) if is_const(a) && is_const(b) => one(Rule::Neq, Formula::True),
                (XTerm::Pair(a1, a2), XTerm::Pair(b1, b2)) => one(
                    Rule::Neq,
                    Formula::or(
                        TheoryLit::neq((**a1).clone(), (**b1).clone()).into(),
                        TheoryLit::neq((**a2).clone(), (**b2).clone()).into(),
                    ),
                ),
                (XTerm::Pair(..), t) | (t, XTerm::Pair(..)) if !matches!(t, XTerm::Var(_)) => {
                    one(Rule::Neq, Formula::True)
                }
                _ => None,
            }
        }
        _ if l.args.iter().any(|a| a.contains_pair()) => one(Rule::PairLit, Formula::False),
        _ => None,
    }
}
