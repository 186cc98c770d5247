use super::{RqError, SortMap};
use crate::syntax::{QKind, Quant, Rel, SFormula, SRis};

/// Negation of `f` in negation-free form.
pub fn negate(f: &SFormula, sorts: &SortMap) -> Result<SFormula, RqError> {
    push(f, false, sorts)
}

/// Eliminates `neg` and `implies` by pushing negation to the literals.
pub fn nnf(f: &SFormula, sorts: &SortMap) -> Result<SFormula, RqError> {
    push(f, true, sorts)
}

fn push(f: &SFormula, pos: bool, sorts: &SortMap) -> Result<SFormula, RqError> {
    Ok(match f {
        SFormula::True => {
            if pos {
                SFormula::True
            } else {
                SFormula::False
            }
        }
        SFormula::False => {
            if pos {
                SFormula::False
            } else {
                SFormula::True
            }
        }
        SFormula::Rel(r, a, b) => {
            if pos {
                f.clone()
            } else {
                if *r == Rel::Eq && (sorts.is_set_term(a) || sorts.is_set_term(b)) {
                    return Err(RqError::SetEqUnderNegation(f.to_string()));
                }
                SFormula::Rel(r.complement(), a.clone(), b.clone())
            }
        }
        SFormula::Subset(lhs, ris) => {
            if pos {
                SFormula::Subset(
                    lhs.clone(),
                    SRis {
                        ctrl: ris.ctrl.clone(),
                        dom: ris.dom.clone(),
                        filter: Box::new(push(&ris.filter, true, sorts)?),
                    },
                )
            } else {
                SFormula::Quant(Quant {
                    kind: QKind::Exists,
                    binders: vec![(ris.ctrl.clone(), ris.dom.clone())],
                    bracketed: false,
                    ext: None,
                    filter: Box::new(push(&ris.filter, false, sorts)?),
                })
            }
        }
        SFormula::Quant(q) => SFormula::Quant(Quant {
            kind: if pos { q.kind } else { q.kind.dual() },
            binders: q.binders.clone(),
            bracketed: q.bracketed,
            ext: q.ext.clone(),
            filter: Box::new(push(&q.filter, pos, sorts)?),
        }),
        SFormula::Call(name, _, span) => {
            if !pos {
                return Err(RqError::NegatedFunctional {
                    name: name.clone(),
                    span: *span,
                });
            }
            f.clone()
        }
        SFormula::And(a, b) => {
            let (a, b) = (push(a, pos, sorts)?, push(b, pos, sorts)?);
            if pos {
                SFormula::and(a, b)
            } else {
                SFormula::or(a, b)
            }
        }
        SFormula::Or(a, b) => {
            let (a, b) = (push(a, pos, sorts)?, push(b, pos, sorts)?);
            if pos {
                SFormula::or(a, b)
            } else {
                SFormula::and(a, b)
            }
        }
        SFormula::Neg(a) => push(a, !pos, sorts)?,
        SFormula::Implies(a, b) => {
            if pos {
                SFormula::or(push(a, false, sorts)?, push(b, true, sorts)?)
            } else {
                SFormula::and(push(a, true, sorts)?, push(b, false, sorts)?)
            }
        }
    })
}
