use std::collections::HashMap;

use super::RqError;
use crate::syntax::{Rel, SFormula, STerm};
use crate::terms::Sort;

/// Sort of every variable name of a surface formula. Names not constrained
/// to either sort are elements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SortMap {
    map: HashMap<String, Sort>,
}

impl SortMap {
    pub fn get(&self, name: &str) -> Sort {
        self.map.get(name).copied().unwrap_or(Sort::X)
    }

    pub fn is_set(&self, name: &str) -> bool {
        self.get(name) == Sort::Set
    }

    /// Whether `t` denotes a set: a set literal or a set variable.
    pub fn is_set_term(&self, t: &STerm) -> bool {
        match t {
            STerm::Set(..) => true,
            STerm::Var(v, _) => self.is_set(v),
            _ => false,
        }
    }
}

/// Union-find over variable names, each class carrying its sort if known.
#[derive(Default)]
struct Resolver {
    index: HashMap<String, usize>,
    parent: Vec<usize>,
    sort: Vec<Option<Sort>>,
    names: Vec<String>,
    clashes: Vec<String>,
}

impl Resolver {
    fn id(&mut self, v: &str) -> usize {
        if let Some(&i) = self.index.get(v) {
            return i;
        }
        let i = self.parent.len();
        self.index.insert(v.to_string(), i);
        self.parent.push(i);
        self.sort.push(None);
        self.names.push(v.to_string());
        i
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn clash(&mut self, v: &str) {
        let msg = format!("`{v}` is used both as a set and as an element");
        if !self.clashes.contains(&msg) {
            self.clashes.push(msg);
        }
    }

    fn assign(&mut self, v: &str, s: Sort) {
        let i = self.id(v);
        let r = self.find(i);
        match self.sort[r] {
            None => self.sort[r] = Some(s),
            Some(old) if old != s => self.clash(v),
            _ => {}
        }
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ia, ib) = (self.id(a), self.id(b));
        let (ra, rb) = (self.find(ia), self.find(ib));
        if ra == rb {
            return;
        }
        match (self.sort[ra], self.sort[rb]) {
            (Some(x), Some(y)) if x != y => self.clash(a),
            (None, s) | (s, None) => {
                self.parent[ra] = rb;
                self.sort[rb] = s;
            }
            _ => self.parent[ra] = rb,
        }
    }

    fn elem(&mut self, t: &STerm) -> Result<(), RqError> {
        match t {
            STerm::Var(v, _) => self.assign(v, Sort::X),
            STerm::Atom(_) | STerm::Int(_) => {}
            STerm::Pair(a, b) | STerm::Arith(_, a, b) => {
                self.elem(a)?;
                self.elem(b)?;
            }
            STerm::Set(..) => return Err(RqError::NotAnElement(t.to_string())),
        }
        Ok(())
    }

    fn set(&mut self, t: &STerm) -> Result<(), RqError> {
        match t {
            STerm::Var(v, _) => self.assign(v, Sort::Set),
            STerm::Set(es, tail) => {
                for e in es {
                    self.elem(e)?;
                }
                if let Some(tail) = tail {
                    self.set(tail)?;
                }
            }
            _ => return Err(RqError::NotASet(t.to_string())),
        }
        Ok(())
    }

    fn formula(&mut self, f: &SFormula) -> Result<(), RqError> {
        match f {
            SFormula::True | SFormula::False => {}
            SFormula::Rel(Rel::In | Rel::Nin, a, b) => {
                self.elem(a)?;
                self.set(b)?;
            }
            SFormula::Rel(r @ (Rel::Eq | Rel::Neq), a, b) => match (a, b) {
                (STerm::Var(x, _), STerm::Var(y, _)) => self.union(x, y),
                (STerm::Set(..), _) | (_, STerm::Set(..)) => {
                    if *r == Rel::Neq {
                        return Err(RqError::SetDisequality(f.to_string()));
                    }
                    self.set(a)?;
                    self.set(b)?;
                }
                _ => {
                    self.elem(a)?;
                    self.elem(b)?;
                }
            },
            SFormula::Rel(_, a, b) => {
                self.elem(a)?;
                self.elem(b)?;
            }
            SFormula::Subset(lhs, ris) => {
                self.set(lhs)?;
                self.set(&ris.dom)?;
                self.formula(&ris.filter)?;
            }
            SFormula::Quant(q) => {
                // Control variables default to elements but may serve as
                // domains of inner quantifiers.
                for (_, d) in &q.binders {
                    self.set(d)?;
                }
                if let Some((locals, fp)) = &q.ext {
                    for l in locals {
                        self.assign(l, Sort::X);
                    }
                    self.formula(fp)?;
                }
                self.formula(&q.filter)?;
            }
            SFormula::Call(_, args, _) => {
                for a in args {
                    self.elem(a)?;
                }
            }
            SFormula::And(a, b) | SFormula::Or(a, b) | SFormula::Implies(a, b) => {
                self.formula(a)?;
                self.formula(b)?;
            }
            SFormula::Neg(a) => self.formula(a)?,
        }
        Ok(())
    }
}

/// Resolves the sort of every variable from the positions it occurs in.
/// `X = Y` between variables links their sorts.
pub fn resolve_sorts(f: &SFormula) -> Result<SortMap, RqError> {
    let mut r = Resolver::default();
    r.formula(f)?;
    if !r.clashes.is_empty() {
        return Err(RqError::Sort(r.clashes));
    }
    let mut map = HashMap::new();
    for i in 0..r.names.len() {
        let root = r.find(i);
        map.insert(r.names[i].clone(), r.sort[root].unwrap_or(Sort::X));
    }
    Ok(SortMap { map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_formula;

    fn sorts(s: &str) -> Result<SortMap, RqError> {
        resolve_sorts(&parse_formula(s).unwrap())
    }

    #[test]
    fn positions_determine_sorts() {
        let m = sorts("X in A & B = {Y / C} & D = B & Z = W").unwrap();
        for v in ["A", "B", "C", "D"] {
            assert_eq!(m.get(v), Sort::Set, "{v}");
        }
        for v in ["X", "Y", "Z", "W"] {
            assert_eq!(m.get(v), Sort::X, "{v}");
        }
    }

    #[test]
    fn clashes_are_reported() {
        assert!(matches!(sorts("X in A & A in B"), Err(RqError::Sort(_))));
        assert!(matches!(sorts("X in 3"), Err(RqError::NotASet(_))));
        assert!(matches!(sorts("A neq {}"), Err(RqError::SetDisequality(_))));
    }

    #[test]
    fn quantifier_variables_are_elements() {
        let m = sorts("foreach([X,Y] in R, [N], Z < N, sum(X,Y,N))").unwrap();
        assert_eq!(m.get("R"), Sort::Set);
        assert_eq!(m.get("N"), Sort::X);
        assert_eq!(m.get("X"), Sort::X);
        let m = sorts("foreach([X,S] in R, foreach(Y in S, Y neq X))").unwrap();
        assert_eq!(m.get("S"), Sort::Set);
    }
}
