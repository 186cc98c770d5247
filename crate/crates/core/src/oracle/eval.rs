use std::collections::{BTreeMap, BTreeSet};

use super::Value;
use crate::terms::{Constraint, CtrlTerm, Formula, Ris, SetTerm, Term, TheoryLit, Var, XTerm};
use crate::theory::{Theory, TheoryError};

pub type Valuation = BTreeMap<Var, Value>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("variable `{0}` has no value")]
    Unbound(String),
    #[error("variable `{0}` is bound to `{1}`, which has the wrong sort")]
    Sort(String, String),
    #[error("local `{0}` is not the result of a functional predicate")]
    Local(String),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

type R<T> = Result<T, EvalError>;

/// Truth of `f` under `v`, following the set-theoretic reading of every
/// constraint. Intensional sets are computed by filtering their domain.
pub fn eval(f: &Formula, v: &Valuation, theory: &dyn Theory) -> R<bool> {
    Env {
        base: v,
        local: Vec::new(),
        theory,
    }
    .formula(f)
}

pub fn eval_constraint(c: &Constraint, v: &Valuation, theory: &dyn Theory) -> R<bool> {
    Env {
        base: v,
        local: Vec::new(),
        theory,
    }
    .constraint(c)
}

pub fn eval_set_term(t: &SetTerm, v: &Valuation, theory: &dyn Theory) -> R<BTreeSet<Value>> {
    Env {
        base: v,
        local: Vec::new(),
        theory,
    }
    .set(t)
}

pub fn eval_xterm(t: &XTerm, v: &Valuation, theory: &dyn Theory) -> R<Value> {
    Env {
        base: v,
        local: Vec::new(),
        theory,
    }
    .x(t)
}

struct Env<'a> {
    base: &'a Valuation,
    local: Vec<(Var, Value)>,
    theory: &'a dyn Theory,
}

impl Env<'_> {
    fn lookup(&self, v: &Var) -> R<&Value> {
        self.local
            .iter()
            .rev()
            .find(|(w, _)| w == v)
            .map(|(_, val)| val)
            .or_else(|| self.base.get(v))
            .ok_or_else(|| EvalError::Unbound(v.to_string()))
    }

    fn x(&self, t: &XTerm) -> R<Value> {
        match t {
            XTerm::Var(v) => {
                let val = self.lookup(v)?;
                if val.is_set() {
                    return Err(EvalError::Sort(v.to_string(), val.to_string()));
                }
                Ok(val.clone())
            }
            XTerm::Atom(a) => Ok(Value::Atom(a.clone())),
            XTerm::Int(n) => Ok(Value::Int(*n)),
            XTerm::Pair(a, b) => Ok(Value::pair(self.x(a)?, self.x(b)?)),
            XTerm::App(f, args) => {
                let vals = args.iter().map(|a| self.x(a)).collect::<R<Vec<_>>>()?;
                Ok(self.theory.eval_fn(f, &vals)?)
            }
        }
    }

    fn set(&mut self, t: &SetTerm) -> R<BTreeSet<Value>> {
        match t {
            SetTerm::Empty => Ok(BTreeSet::new()),
            SetTerm::Var(v) => match self.lookup(v)? {
                Value::Set(s) => Ok(s.clone()),
                other => Err(EvalError::Sort(v.to_string(), other.to_string())),
            },
            SetTerm::Cons(e, rest) => {
                let mut s = self.set(rest)?;
                s.insert(self.x(e)?);
                Ok(s)
            }
            SetTerm::Ris(r) => {
                let dom = self.set(&r.dom)?;
                let mut out = BTreeSet::new();
                for e in dom {
                    if self.member_passes(r, &e)? {
                        out.insert(e);
                    }
                }
                Ok(out)
            }
        }
    }

    /// Whether domain element `e` passes the body of `r`: it matches the
    /// control term and, with locals computed from the functional
    /// predicates, satisfies both the predicates and the filter.
    fn member_passes(&mut self, r: &Ris, e: &Value) -> R<bool> {
        let mark = self.local.len();
        let out = self.member_passes_inner(r, e);
        self.local.truncate(mark);
        out
    }

    fn member_passes_inner(&mut self, r: &Ris, e: &Value) -> R<bool> {
        if !bind_ctrl(&r.ctrl, e, &mut self.local) {
            return Ok(false);
        }
        if r.is_extended() {
            self.compute_locals(r)?;
            if !self.formula(&r.fpreds)? {
                return Ok(false);
            }
        }
        self.formula(&r.filter)
    }

    fn compute_locals(&mut self, r: &Ris) -> R<()> {
        let lits: Vec<&TheoryLit> = r
            .fpreds
            .conjuncts()
            .into_iter()
            .filter_map(|f| match f {
                Formula::Atom(Constraint::Theory(l)) => Some(l),
                _ => None,
            })
            .collect();
        let mut pending: Vec<&Var> = r.locals.iter().collect();
        while !pending.is_empty() {
            let mut progress = false;
            for lit in &lits {
                let Some(XTerm::Var(res)) = lit.args.last() else { continue };
                let Some(pos) = pending.iter().position(|l| *l == res) else { continue };
                let inputs = &lit.args[..lit.args.len() - 1];
                if inputs.iter().any(|a| pending.iter().any(|p| a.contains_var(p))) {
                    continue;
                }
                let Ok(fp) = self.theory.fp_lookup(&lit.pred) else { continue };
                let vals = inputs.iter().map(|a| self.x(a)).collect::<R<Vec<_>>>()?;
                let Some(out) = (fp.eval)(&vals) else {
                    return Err(EvalError::Theory(TheoryError::Eval(
                        lit.to_string(),
                        "no result".into(),
                    )));
                };
                self.local.push((res.clone(), out));
                pending.remove(pos);
                progress = true;
            }
            if !progress {
                return Err(EvalError::Local(pending[0].to_string()));
            }
        }
        Ok(())
    }

    fn formula(&mut self, f: &Formula) -> R<bool> {
        match f {
            Formula::True => Ok(true),
            Formula::False => Ok(false),
            Formula::Atom(c) => self.constraint(c),
            Formula::And(a, b) => Ok(self.formula(a)? && self.formula(b)?),
            Formula::Or(a, b) => Ok(self.formula(a)? || self.formula(b)?),
        }
    }

    fn constraint(&mut self, c: &Constraint) -> R<bool> {
        match c {
            Constraint::SetEq(a, b) => Ok(self.set(a)? == self.set(b)?),
            Constraint::In(x, s) => {
                let v = self.x(x)?;
                Ok(self.set(s)?.contains(&v))
            }
            Constraint::NotIn(x, s) => {
                let v = self.x(x)?;
                Ok(!self.set(s)?.contains(&v))
            }
            Constraint::Subset(a, b) => {
                let a = self.set(a)?;
                Ok(a.is_subset(&self.set(b)?))
            }
            Constraint::Exists(r) => {
                let dom = self.set(&r.dom)?;
                for e in &dom {
                    if self.member_passes(r, e)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Constraint::IsSet(t) => Ok(match t {
                Term::Set(SetTerm::Var(v)) => self.lookup(v)?.is_set(),
                Term::X(XTerm::Var(v)) => self.lookup(v)?.is_set(),
                Term::Set(_) => true,
                Term::X(_) => false,
            }),
            Constraint::IsX(t) => Ok(match t {
                Term::Set(SetTerm::Var(v)) | Term::X(XTerm::Var(v)) => !self.lookup(v)?.is_set(),
                Term::Set(_) => false,
                Term::X(_) => true,
            }),
            Constraint::Theory(l) => {
                let vals = l.args.iter().map(|a| self.x(a)).collect::<R<Vec<_>>>()?;
                Ok(self.theory.eval_lit(&l.pred, &vals)?)
            }
        }
    }
}

fn bind_ctrl(c: &CtrlTerm, e: &Value, out: &mut Vec<(Var, Value)>) -> bool {
    match (c, e) {
        (CtrlTerm::Var(v), e) => {
            out.push((v.clone(), e.clone()));
            true
        }
        (CtrlTerm::Pair(a, b), Value::Pair(x, y)) => bind_ctrl(a, x, out) && bind_ctrl(b, y, out),
        _ => false,
    }
}
