//! Equality over uninterpreted constants: union-find, then each disequality
//! checked across classes.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::*;
use crate::terms::XTerm;

#[derive(Debug, Clone, Copy, Default)]
pub struct EqTheory;

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

impl Theory for EqTheory {
    fn name(&self) -> &'static str {
        "eq"
    }

    fn sat(&self, lits: &[TheoryLit]) -> Result<TheoryVerdict, TheoryError> {
        let mut ids: BTreeMap<XTerm, usize> = BTreeMap::new();
        let mut id_of = |t: &XTerm| -> Result<usize, TheoryError> {
            match t {
                XTerm::Var(_) | XTerm::Atom(_) | XTerm::Int(_) => {
                    let n = ids.len();
                    Ok(*ids.entry(t.clone()).or_insert(n))
                }
                _ => Err(TheoryError::Unsupported(
                    t.to_string(),
                    "only variables and constants are equality-theory terms".into(),
                )),
            }
        };
        let mut eqs = Vec::new();
        let mut neqs = Vec::new();
        for l in lits {
            match (&*l.pred, l.args.as_slice()) {
                ("=", [a, b]) => eqs.push((id_of(a)?, id_of(b)?)),
                ("neq", [a, b]) => neqs.push((id_of(a)?, id_of(b)?)),
                _ => {
                    return Err(TheoryError::UnknownPredicate {
                        theory: "eq",
                        pred: l.pred.to_string(),
                        arity: l.args.len(),
                    })
                }
            }
        }
        let terms: Vec<XTerm> = {
            let mut v: Vec<(usize, XTerm)> = ids.iter().map(|(t, i)| (*i, t.clone())).collect();
            v.sort();
            v.into_iter().map(|(_, t)| t).collect()
        };
        let mut uf = UnionFind {
            parent: (0..terms.len()).collect(),
        };
        for (a, b) in eqs {
            uf.union(a, b);
        }
        // A class may hold at most one constant.
        let mut class_const: BTreeMap<usize, &XTerm> = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            if is_const(t) {
                let r = uf.find(i);
                if let Some(c) = class_const.get(&r) {
                    if *c != t {
                        return Ok(TheoryVerdict::Unsat);
                    }
                }
                class_const.insert(r, t);
            }
        }
        for (a, b) in neqs {
            if uf.find(a) == uf.find(b) {
                return Ok(TheoryVerdict::Unsat);
            }
        }
        let used: BTreeSet<String> = terms
            .iter()
            .filter_map(|t| match t {
                XTerm::Atom(a) => Some(a.to_string()),
                _ => None,
            })
            .collect();
        let mut fresh = (0..).map(|i| format!("c{i}")).filter(|n| !used.contains(n));
        let mut class_val: BTreeMap<usize, Value> = BTreeMap::new();
        let mut model = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            let XTerm::Var(v) = t else { continue };
            let r = uf.find(i);
            let val = class_val
                .entry(r)
                .or_insert_with(|| match class_const.get(&r) {
                    Some(XTerm::Atom(a)) => Value::Atom(a.clone()),
                    Some(XTerm::Int(n)) => Value::Int(*n),
                    _ => Value::Atom(Arc::from(fresh.next().unwrap())),
                })
                .clone();
            model.insert(v.clone(), val);
        }
        Ok(TheoryVerdict::Sat(model))
    }

    fn negate_lit(&self, lit: &TheoryLit) -> Result<TheoryLit, TheoryError> {
        eq_complement(lit).ok_or_else(|| TheoryError::NoComplement(lit_string(lit)))
    }

    fn functional_predicates(&self) -> &[FunctionalPredicate] {
        &[]
    }

    fn eval_lit(&self, pred: &str, args: &[Value]) -> Result<bool, TheoryError> {
        eval_equality(pred, args).ok_or_else(|| TheoryError::UnknownPredicate {
            theory: "eq",
            pred: pred.to_string(),
            arity: args.len(),
        })
    }

    fn eval_fn(&self, f: &str, _args: &[Value]) -> Result<Value, TheoryError> {
        Err(TheoryError::Eval(f.to_string(), "no functions in the equality theory".into()))
    }

    fn admits(&self, v: &Value) -> bool {
        !v.is_set()
    }

    fn default_value(&self) -> Value {
        Value::atom("c0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::{Sort, Var};

    fn v(n: &str) -> XTerm {
        XTerm::Var(Var::user(n, Sort::X))
    }

    #[test]
    fn equal_and_different_is_unsat() {
        let lits = [
            TheoryLit::eq(XTerm::atom("a"), XTerm::atom("b")),
            TheoryLit::neq(XTerm::atom("a"), XTerm::atom("b")),
        ];
        assert_eq!(EqTheory.sat(&lits).unwrap(), TheoryVerdict::Unsat);
        let lits = [
            TheoryLit::eq(v("x"), v("y")),
            TheoryLit::neq(v("x"), v("y")),
        ];
        assert_eq!(EqTheory.sat(&lits).unwrap(), TheoryVerdict::Unsat);
    }

    #[test]
    fn distinct_constants_clash() {
        let lits = [
            TheoryLit::eq(v("x"), XTerm::atom("a")),
            TheoryLit::eq(v("x"), XTerm::atom("b")),
        ];
        assert_eq!(EqTheory.sat(&lits).unwrap(), TheoryVerdict::Unsat);
    }

    #[test]
    fn model_separates_classes() {
        let lits = [
            TheoryLit::neq(v("x"), v("y")),
            TheoryLit::neq(v("y"), XTerm::atom("c0")),
            TheoryLit::eq(v("z"), XTerm::atom("a")),
        ];
        let TheoryVerdict::Sat(m) = EqTheory.sat(&lits).unwrap() else { panic!() };
        let get = |n: &str| m[&Var::user(n, Sort::X)].clone();
        assert_ne!(get("x"), get("y"));
        assert_ne!(get("y"), Value::atom("c0"));
        assert_eq!(get("z"), Value::atom("a"));
    }

    #[test]
    fn negation_swaps_equality() {
        let l = TheoryLit::eq(v("x"), v("y"));
        let n = EqTheory.negate_lit(&l).unwrap();
        assert_eq!(&*n.pred, "neq");
        assert_eq!(EqTheory.negate_lit(&n).unwrap(), l);
        assert!(EqTheory.fp_lookup("sum").is_err());
    }
}
