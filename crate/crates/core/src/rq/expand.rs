use std::collections::HashMap;

use super::RqError;
use crate::syntax::{Program, Quant, SCtrl, SFormula, SRis, STerm, Span};

/// Inlines every call to a user definition. Variables of a body that are
/// not parameters are renamed apart; free ones are existential, which is
/// only sound in positive position outside any quantifier.
pub fn expand(program: &Program) -> Result<SFormula, RqError> {
    let mut ex = Expander {
        program,
        next: 0,
    };
    ex.formula(&program.query, Ctx::default())
}

#[derive(Clone, Copy, Default)]
struct Ctx {
    negative: bool,
    quantified: bool,
}

struct Expander<'p> {
    program: &'p Program,
    next: usize,
}

impl Expander<'_> {
    fn formula(&mut self, f: &SFormula, cx: Ctx) -> Result<SFormula, RqError> {
        Ok(match f {
            SFormula::True | SFormula::False | SFormula::Rel(..) => f.clone(),
            SFormula::Subset(lhs, ris) => SFormula::Subset(
                lhs.clone(),
                SRis {
                    ctrl: ris.ctrl.clone(),
                    dom: ris.dom.clone(),
                    filter: Box::new(self.formula(&ris.filter, Ctx { quantified: true, ..cx })?),
                },
            ),
            SFormula::Quant(q) => SFormula::Quant(Quant {
                filter: Box::new(self.formula(&q.filter, Ctx { quantified: true, ..cx })?),
                ..q.clone()
            }),
            SFormula::Call(name, args, span) => return self.call(name, args, *span, cx),
            SFormula::And(a, b) => SFormula::and(self.formula(a, cx)?, self.formula(b, cx)?),
            SFormula::Or(a, b) => SFormula::or(self.formula(a, cx)?, self.formula(b, cx)?),
            SFormula::Neg(a) => SFormula::neg(self.formula(a, Ctx { negative: !cx.negative, ..cx })?),
            SFormula::Implies(a, b) => SFormula::implies(
                self.formula(a, Ctx { negative: !cx.negative, ..cx })?,
                self.formula(b, cx)?,
            ),
        })
    }

    fn call(&mut self, name: &str, args: &[STerm], span: Span, cx: Ctx) -> Result<SFormula, RqError> {
        let Some(def) = self.program.definition(name) else {
            // Left to the theory (functional predicates).
            return Ok(SFormula::Call(name.to_string(), args.to_vec(), span));
        };
        if def.params.len() != args.len() {
            return Err(RqError::Arity {
                name: name.to_string(),
                expected: def.params.len(),
                got: args.len(),
                span,
            });
        }
        let free = def.body.free_vars();
        if let Some(local) = free.iter().find(|v| !def.params.contains(v)) {
            let context = if cx.negative {
                Some("under negation")
            } else if cx.quantified {
                Some("inside a quantifier")
            } else {
                None
            };
            if let Some(context) = context {
                return Err(RqError::LocalVariable {
                    var: local.clone(),
                    def: name.to_string(),
                    context,
                    span,
                });
            }
        }
        let mut names = Vec::new();
        collect_names(&def.body, &mut names);
        let renaming: HashMap<String, String> = names
            .into_iter()
            .filter(|n| !def.params.contains(n))
            .map(|n| {
                self.next += 1;
                (n, format!("_L{}", self.next))
            })
            .collect();
        let body = rename(&def.body, &renaming);
        let map: HashMap<String, STerm> = def.params.iter().cloned().zip(args.iter().cloned()).collect();
        let body = subst(&body, &map);
        self.formula(&body, cx)
    }
}

fn collect_names(f: &SFormula, out: &mut Vec<String>) {
    let push = |v: String, out: &mut Vec<String>| {
        if !out.contains(&v) {
            out.push(v);
        }
    };
    match f {
        SFormula::True | SFormula::False => {}
        SFormula::Rel(_, a, b) => {
            a.vars(out);
            b.vars(out);
        }
        SFormula::Subset(l, r) => {
            l.vars(out);
            r.dom.vars(out);
            r.ctrl.vars().into_iter().for_each(|v| push(v, out));
            collect_names(&r.filter, out);
        }
        SFormula::Quant(q) => {
            for (c, d) in &q.binders {
                c.vars().into_iter().for_each(|v| push(v, out));
                d.vars(out);
            }
            if let Some((locals, fp)) = &q.ext {
                locals.iter().cloned().for_each(|v| push(v, out));
                collect_names(fp, out);
            }
            collect_names(&q.filter, out);
        }
        SFormula::Call(_, args, _) => args.iter().for_each(|a| a.vars(out)),
        SFormula::And(a, b) | SFormula::Or(a, b) | SFormula::Implies(a, b) => {
            collect_names(a, out);
            collect_names(b, out);
        }
        SFormula::Neg(a) => collect_names(a, out),
    }
}

fn rename_term(t: &STerm, m: &HashMap<String, String>) -> STerm {
    subst_term(t, &|v| m.get(v).map(|n| STerm::Var(n.clone(), Span::default())))
}

fn rename_ctrl(c: &SCtrl, m: &HashMap<String, String>) -> SCtrl {
    match c {
        SCtrl::Var(v, s) => SCtrl::Var(m.get(v).cloned().unwrap_or_else(|| v.clone()), *s),
        SCtrl::Pair(a, b) => SCtrl::Pair(Box::new(rename_ctrl(a, m)), Box::new(rename_ctrl(b, m))),
    }
}

/// Renames every occurrence, binders included.
fn rename(f: &SFormula, m: &HashMap<String, String>) -> SFormula {
    match f {
        SFormula::True | SFormula::False => f.clone(),
        SFormula::Rel(r, a, b) => SFormula::Rel(*r, rename_term(a, m), rename_term(b, m)),
        SFormula::Subset(l, r) => SFormula::Subset(
            rename_term(l, m),
            SRis {
                ctrl: rename_ctrl(&r.ctrl, m),
                dom: rename_term(&r.dom, m),
                filter: Box::new(rename(&r.filter, m)),
            },
        ),
        SFormula::Quant(q) => SFormula::Quant(Quant {
            kind: q.kind,
            binders: q
                .binders
                .iter()
                .map(|(c, d)| (rename_ctrl(c, m), rename_term(d, m)))
                .collect(),
            bracketed: q.bracketed,
            ext: q.ext.as_ref().map(|(ls, fp)| {
                (
                    ls.iter().map(|l| m.get(l).cloned().unwrap_or_else(|| l.clone())).collect(),
                    Box::new(rename(fp, m)),
                )
            }),
            filter: Box::new(rename(&q.filter, m)),
        }),
        SFormula::Call(n, args, s) => SFormula::Call(n.clone(), args.iter().map(|a| rename_term(a, m)).collect(), *s),
        SFormula::And(a, b) => SFormula::and(rename(a, m), rename(b, m)),
        SFormula::Or(a, b) => SFormula::or(rename(a, m), rename(b, m)),
        SFormula::Implies(a, b) => SFormula::implies(rename(a, m), rename(b, m)),
        SFormula::Neg(a) => SFormula::neg(rename(a, m)),
    }
}

fn subst_term(t: &STerm, look: &dyn Fn(&str) -> Option<STerm>) -> STerm {
    match t {
        STerm::Var(v, _) => look(v).unwrap_or_else(|| t.clone()),
        STerm::Atom(_) | STerm::Int(_) => t.clone(),
        STerm::Pair(a, b) => STerm::pair(subst_term(a, look), subst_term(b, look)),
        STerm::Arith(op, a, b) => STerm::Arith(*op, Box::new(subst_term(a, look)), Box::new(subst_term(b, look))),
        STerm::Set(es, tail) => STerm::Set(
            es.iter().map(|e| subst_term(e, look)).collect(),
            tail.as_ref().map(|t| Box::new(subst_term(t, look))),
        ),
    }
}

/// Substitutes free occurrences; binders shadow.
fn subst(f: &SFormula, m: &HashMap<String, STerm>) -> SFormula {
    let look = |v: &str| m.get(v).cloned();
    let shadowed = |bound: Vec<String>| -> HashMap<String, STerm> {
        m.iter()
            .filter(|(k, _)| !bound.contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    };
    match f {
        SFormula::True | SFormula::False => f.clone(),
        SFormula::Rel(r, a, b) => SFormula::Rel(*r, subst_term(a, &look), subst_term(b, &look)),
        SFormula::Subset(l, r) => SFormula::Subset(
            subst_term(l, &look),
            SRis {
                ctrl: r.ctrl.clone(),
                dom: subst_term(&r.dom, &look),
                filter: Box::new(subst(&r.filter, &shadowed(r.ctrl.vars()))),
            },
        ),
        SFormula::Quant(q) => {
            let mut bound = Vec::new();
            let mut binders = Vec::new();
            for (c, d) in &q.binders {
                let inner = shadowed(bound.clone());
                binders.push((c.clone(), subst_term(d, &|v| inner.get(v).cloned())));
                bound.extend(c.vars());
            }
            if let Some((ls, _)) = &q.ext {
                bound.extend(ls.iter().cloned());
            }
            let inner = shadowed(bound);
            SFormula::Quant(Quant {
                kind: q.kind,
                binders,
                bracketed: q.bracketed,
                ext: q.ext.as_ref().map(|(ls, fp)| (ls.clone(), Box::new(subst(fp, &inner)))),
                filter: Box::new(subst(&q.filter, &inner)),
            })
        }
        SFormula::Call(n, args, s) => SFormula::Call(n.clone(), args.iter().map(|a| subst_term(a, &look)).collect(), *s),
        SFormula::And(a, b) => SFormula::and(subst(a, m), subst(b, m)),
        SFormula::Or(a, b) => SFormula::or(subst(a, m), subst(b, m)),
        SFormula::Implies(a, b) => SFormula::implies(subst(a, m), subst(b, m)),
        SFormula::Neg(a) => SFormula::neg(subst(a, m)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    #[test]
    fn inlines_parameters() {
        let p = parse_program("p(A, X) :- X in A. p({1,2}, Y).").unwrap();
        assert_eq!(expand(&p).unwrap().to_string(), "Y in {1,2}");
    }

    #[test]
    fn nested_definitions_and_shadowing() {
        let p = parse_program(
            "q(S) :- foreach(X in S, X > 0). p(A, X) :- q(A) & X in A. p({3}, X).",
        )
        .unwrap();
        let s = expand(&p).unwrap().to_string();
        assert_eq!(s, "foreach(_L1 in {3}, _L1 > 0) & X in {3}");
    }

    #[test]
    fn body_locals_are_renamed() {
        let p = parse_program("p(A) :- A = {Y / B}. p(S) & p(T).").unwrap();
        assert_eq!(expand(&p).unwrap().to_string(), "S = {_L1 / _L2} & T = {_L3 / _L4}");
    }

    #[test]
    fn locals_rejected_under_negation() {
        let p = parse_program("p(A) :- Y in A. neg(p(S)).").unwrap();
        assert!(matches!(expand(&p), Err(RqError::LocalVariable { .. })));
        let p = parse_program("p(A) :- Y in A. foreach(X in S, p(S)).").unwrap();
        assert!(matches!(expand(&p), Err(RqError::LocalVariable { .. })));
    }

    #[test]
    fn arity_is_checked() {
        let p = parse_program("p(A) :- A = {}. p(S, T).").unwrap();
        assert!(matches!(expand(&p), Err(RqError::Arity { .. })));
    }
}
