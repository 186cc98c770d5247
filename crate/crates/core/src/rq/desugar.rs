use super::{RqError, SortMap};
use crate::syntax::{QKind, Rel, SCtrl, SFormula, STerm};
use crate::terms::{Constraint, CtrlTerm, Formula, Ris, SetTerm, Sort, TheoryLit, Var, XTerm};
use crate::theory::Theory;

/// Lowers a negation-free surface formula to a core formula. `foreach`
/// becomes a subset of a RIS, `exists` a core existential; multi-binder
/// forms nest outermost first with the extension on the innermost binder.
pub fn desugar(f: &SFormula, sorts: &SortMap, theory: &dyn Theory) -> Result<Formula, RqError> {
    Lower { sorts, theory }.formula(f)
}

struct Lower<'a> {
    sorts: &'a SortMap,
    theory: &'a dyn Theory,
}

impl Lower<'_> {

    fn elem(&self, t: &STerm) -> Result<XTerm, RqError> {
        Ok(match t {
            STerm::Var(v, _) if !self.sorts.is_set(v) => XTerm::Var(Var::user(v, Sort::X)),
            STerm::Atom(a) => XTerm::atom(a),
            STerm::Int(n) => XTerm::Int(*n),
            STerm::Pair(a, b) => XTerm::pair(self.elem(a)?, self.elem(b)?),
            STerm::Arith(op, a, b) => XTerm::app(op.symbol(), vec![self.elem(a)?, self.elem(b)?]),
            _ => return Err(RqError::NotAnElement(t.to_string())),
        })
    }

    fn set(&self, t: &STerm) -> Result<SetTerm, RqError> {
        Ok(match t {
            STerm::Var(v, _) if self.sorts.is_set(v) => SetTerm::Var(Var::user(v, Sort::Set)),
            STerm::Set(es, tail) => {
                let tail = match tail {
                    Some(t) => self.set(t)?,
                    None => SetTerm::Empty,
                };
                let es = es.iter().map(|e| self.elem(e)).collect::<Result<Vec<_>, _>>()?;
                SetTerm::ext(es, tail)
            }
            _ => return Err(RqError::NotASet(t.to_string())),
        })
    }

    fn ctrl(&self, c: &SCtrl) -> Result<CtrlTerm, RqError> {
        Ok(match c {
            SCtrl::Var(v, _) if self.sorts.is_set(v) => return Err(RqError::SetElement(v.clone())),
            SCtrl::Var(v, _) => CtrlTerm::Var(Var::user(v, Sort::X)),
            SCtrl::Pair(a, b) => CtrlTerm::pair(self.ctrl(a)?, self.ctrl(b)?),
        })
    }

    fn formula(&self, f: &SFormula) -> Result<Formula, RqError> {
        Ok(match f {
            SFormula::True => Formula::True,
            SFormula::False => Formula::False,
            SFormula::Rel(r, a, b) => self.rel(f, *r, a, b)?,
            SFormula::Subset(lhs, ris) => {
                let dom = self.set(&ris.dom)?;
                debug_assert_eq!(self.set(lhs)?, dom);
                Constraint::foreach(Ris::plain(self.ctrl(&ris.ctrl)?, dom, self.formula(&ris.filter)?)).into()
            }
            SFormula::Quant(q) => {
                let (last, outer) = q.binders.split_last().expect("quantifier without binder");
                let mut inner = Ris::plain(self.ctrl(&last.0)?, self.set(&last.1)?, self.formula(&q.filter)?);
                if let Some((locals, fp)) = &q.ext {
                    inner.locals = locals.iter().map(|l| Var::user(l, Sort::X)).collect();
                    inner.fpreds = self.functional(fp)?;
                }
                let mut out = quant(q.kind, inner);
                for (c, d) in outer.iter().rev() {
                    out = quant(q.kind, Ris::plain(self.ctrl(c)?, self.set(d)?, out));
                }
                out
            }
            SFormula::Call(name, args, span) => {
                let fp = self.theory.fp_lookup(name).map_err(|_| RqError::UnknownPredicate {
                    name: name.clone(),
                    arity: args.len(),
                    span: *span,
                })?;
                if fp.arity != args.len() {
                    return Err(RqError::Arity {
                        name: name.clone(),
                        expected: fp.arity,
                        got: args.len(),
                        span: *span,
                    });
                }
                let args = args.iter().map(|a| self.elem(a)).collect::<Result<Vec<_>, _>>()?;
                TheoryLit::new(name, args).into()
            }
            SFormula::And(a, b) => Formula::and(self.formula(a)?, self.formula(b)?),
            SFormula::Or(a, b) => Formula::or(self.formula(a)?, self.formula(b)?),
            SFormula::Neg(_) | SFormula::Implies(..) => {
                unreachable!("negation must be eliminated before lowering")
            }
        })
    }

    fn functional(&self, fp: &SFormula) -> Result<Formula, RqError> {
        for c in fp.conjuncts() {
            match c {
                SFormula::Call(name, _, span) => {
                    if self.theory.fp_lookup(name).is_err() {
                        return Err(RqError::NotFunctional {
                            name: name.clone(),
                            span: *span,
                        });
                    }
                }
                SFormula::True => {}
                other => return Err(RqError::FunctionalShape(other.to_string())),
            }
        }
        self.formula(fp)
    }

    fn rel(&self, f: &SFormula, r: Rel, a: &STerm, b: &STerm) -> Result<Formula, RqError> {
        let set_sorted = self.sorts.is_set_term(a) || self.sorts.is_set_term(b);
        Ok(match r {
            Rel::Eq if set_sorted => Constraint::SetEq(self.set(a)?, self.set(b)?).into(),
            Rel::Neq if set_sorted => return Err(RqError::SetDisequality(f.to_string())),
            Rel::In => Constraint::In(self.elem(a)?, self.set(b)?).into(),
            Rel::Nin => Constraint::NotIn(self.elem(a)?, self.set(b)?).into(),
            _ => TheoryLit::new(r.symbol(), vec![self.elem(a)?, self.elem(b)?]).into(),
        })
    }
}

fn quant(kind: QKind, r: Ris) -> Formula {
    match kind {
        QKind::Forall => Constraint::foreach(r).into(),
        QKind::Exists => Constraint::exists(r).into(),
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::rq::resolve_sorts;
    use crate::syntax::parse_formula;
    use crate::theory::{EqTheory, LiaTheory};

    fn lower(s: &str) -> Result<Formula, RqError> {
        let f = parse_formula(s).unwrap();
        let sorts = resolve_sorts(&f).unwrap();
        desugar(&f, &sorts, &LiaTheory)
    }

    #[test]
    fn foreach_becomes_subset() {
        let f = lower("M in {Y / S} & foreach(X in {Y / S}, M =< X)").unwrap();
        assert_eq!(f.to_string(), "M in {Y / S} & foreach(X in {Y / S}, M =< X)");
        let Formula::And(_, b) = &f else { panic!() };
        assert!(matches!(**b, Formula::Atom(Constraint::Subset(..))));
    }

    #[test]
    fn multi_binder_nests_outermost_first() {
        let f = lower("exists([X in A, Y in B], X = Y)").unwrap();
        assert_eq!(f.to_string(), "exists(X in A, exists(Y in B, X = Y))");
    }

    #[test]
    fn extended_quantifier_keeps_locals() {
        let f = lower("foreach([X,Y] in R, [N], Z < N, sum(X,Y,N))").unwrap();
        assert_eq!(f.to_string(), "foreach([X,Y] in R, [N], Z < N, sum(X,Y,N))");
    }

    #[test]
    fn functional_part_is_checked() {
        let f = parse_formula("foreach(X in R, [N], Z < N, sum(X,X,N))").unwrap();
        let sorts = resolve_sorts(&f).unwrap();
        assert!(matches!(desugar(&f, &sorts, &EqTheory), Err(RqError::NotFunctional { .. })));
        assert!(matches!(
            lower("foreach(X in R, [N], Z < N, N < X)"),
            Err(RqError::FunctionalShape(_))
        ));
    }

    #[test]
    fn set_valued_control_is_rejected() {
        assert!(matches!(
            lower("foreach([X,S] in R, foreach(Y in S, Y neq X))"),
            Err(RqError::SetElement(_))
        ));
    }

    #[test]
    fn set_equality_and_arithmetic() {
        let f = lower("A = {X + 1 / B} & X - 2 > 0").unwrap();
        assert_eq!(f.to_string(), "A = {(X + 1) / B} & (X - 2) > 0");
    }
}
