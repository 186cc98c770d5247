//! Linear integer arithmetic over `=`, `neq`, `=<`, `<`, `>=`, `>`, plus the
//! functional predicates `sum(X,Y,N)` (N = X + Y) and `mul(X,Y,N)`
//! (N = X * Y, one factor constant).

use std::collections::BTreeMap;

use super::omega::{eval_row, Row, System};
use super::*;
use crate::terms::XTerm;

#[derive(Debug, Clone, Copy, Default)]
pub struct LiaTheory;

const FUNCTIONAL: &[FunctionalPredicate] = &[
    FunctionalPredicate {
        name: "sum",
        arity: 3,
        eval: |args| match args {
            [Value::Int(x), Value::Int(y)] => x.checked_add(*y).map(Value::Int),
            _ => None,
        },
    },
    FunctionalPredicate {
        name: "mul",
        arity: 3,
        eval: |args| match args {
            [Value::Int(x), Value::Int(y)] => x.checked_mul(*y).map(Value::Int),
            _ => None,
        },
    },
];

/// Linear expression: constant plus coefficients per variable.
#[derive(Debug, Clone, Default, PartialEq)]
struct Lin {
    c: i128,
    coefs: BTreeMap<Var, i128>,
}

impl Lin {
    fn constant(c: i128) -> Self {
        Lin {
            c,
            coefs: BTreeMap::new(),
        }
    }

    fn scale(mut self, k: i128) -> Self {
        self.c *= k;
        self.coefs.values_mut().for_each(|a| *a *= k);
        self.coefs.retain(|_, a| *a != 0);
        self
    }

    fn add(mut self, other: Lin) -> Self {
        self.c += other.c;
        for (v, a) in other.coefs {
            *self.coefs.entry(v).or_insert(0) += a;
        }
        self.coefs.retain(|_, a| *a != 0);
        self
    }

    fn sub(self, other: Lin) -> Self {
        self.add(other.scale(-1))
    }

    fn as_const(&self) -> Option<i128> {
        self.coefs.is_empty().then_some(self.c)
    }
}

/// `Ok(None)` marks a term that is not an integer (atom or pair).
fn linearize(t: &XTerm) -> Result<Option<Lin>, TheoryError> {
    Ok(Some(match t {
        XTerm::Var(v) => Lin {
            c: 0,
            coefs: [(v.clone(), 1)].into(),
        },
        XTerm::Int(n) => Lin::constant(*n as i128),
        XTerm::Atom(_) | XTerm::Pair(..) => return Ok(None),
        XTerm::App(f, args) => {
            let [a, b] = args.as_slice() else {
                return Err(TheoryError::Unsupported(t.to_string(), format!("unknown function `{f}`")));
            };
            let (Some(a), Some(b)) = (linearize(a)?, linearize(b)?) else {
                return Err(TheoryError::Unsupported(t.to_string(), "arithmetic on a non-integer".into()));
            };
            match &**f {
                "+" => a.add(b),
                "-" => a.sub(b),
                "*" => match (a.as_const(), b.as_const()) {
                    (Some(k), _) => b.scale(k),
                    (_, Some(k)) => a.scale(k),
                    _ => {
                        return Err(TheoryError::Unsupported(
                            t.to_string(),
                            "nonlinear product".into(),
                        ))
                    }
                },
                _ => {
                    return Err(TheoryError::Unsupported(
                        t.to_string(),
                        format!("unknown function `{f}`"),
                    ))
                }
            }
        }
    }))
}

enum Encoded {
    Eq(Lin),
    Geq(Lin),
    Neq(Lin),
    True,
    False,
}

fn encode(l: &TheoryLit) -> Result<Encoded, TheoryError> {
    let unknown = || TheoryError::UnknownPredicate {
        theory: "lia",
        pred: l.pred.to_string(),
        arity: l.args.len(),
    };
    let lins = l
        .args
        .iter()
        .map(linearize)
        .collect::<Result<Vec<_>, _>>()?;
    let non_int = || {
        TheoryError::Unsupported(l.to_string(), "order and arithmetic need integer arguments".into())
    };
    let pair = |i: usize, j: usize| -> Result<(Lin, Lin), TheoryError> {
        match (&lins[i], &lins[j]) {
            (Some(a), Some(b)) => Ok((a.clone(), b.clone())),
            _ => Err(non_int()),
        }
    };
    Ok(match (&*l.pred, l.args.len()) {
        ("=" | "neq", 2) => match (&lins[0], &lins[1]) {
            (Some(a), Some(b)) => {
                let d = a.clone().sub(b.clone());
                if l.pred.as_ref() == "=" {
                    Encoded::Eq(d)
                } else {
                    Encoded::Neq(d)
                }
            }
            // Integers never equal atoms or pairs; two non-integers compare
            // structurally once ground.
            (None, None) if l.args[0].is_ground() && l.args[1].is_ground() => {
                let same = l.args[0] == l.args[1];
                if same == (l.pred.as_ref() == "=") {
                    Encoded::True
                } else {
                    Encoded::False
                }
            }
            (None, None) => return Err(non_int()),
            _ => {
                if l.pred.as_ref() == "=" {
                    Encoded::False
                } else {
                    Encoded::True
                }
            }
        },
        ("=<", 2) => {
            let (a, b) = pair(0, 1)?;
            Encoded::Geq(b.sub(a))
        }
        ("<", 2) => {
            let (a, b) = pair(0, 1)?;
            Encoded::Geq(b.sub(a).add(Lin::constant(-1)))
        }
        (">=", 2) => {
            let (a, b) = pair(0, 1)?;
            Encoded::Geq(a.sub(b))
        }
        (">", 2) => {
            let (a, b) = pair(0, 1)?;
            Encoded::Geq(a.sub(b).add(Lin::constant(-1)))
        }
        ("sum", 3) => {
            let (x, y) = pair(0, 1)?;
            let n = lins[2].clone().ok_or_else(non_int)?;
            Encoded::Eq(n.sub(x.add(y)))
        }
        ("mul", 3) => {
            let (x, y) = pair(0, 1)?;
            let n = lins[2].clone().ok_or_else(non_int)?;
            let prod = match (x.as_const(), y.as_const()) {
                (Some(k), _) => y.scale(k),
                (_, Some(k)) => x.scale(k),
                _ => {
                    return Err(TheoryError::Unsupported(
                        l.to_string(),
                        "mul needs a constant factor".into(),
                    ))
                }
            };
            Encoded::Eq(n.sub(prod))
        }
        _ => return Err(unknown()),
    })
}

impl Theory for LiaTheory {
    fn name(&self) -> &'static str {
        "lia"
    }

    fn sat(&self, lits: &[TheoryLit]) -> Result<TheoryVerdict, TheoryError> {
        let vars = collect_vars(lits);
        let index: BTreeMap<&Var, usize> = vars.iter().enumerate().map(|(i, v)| (v, i + 1)).collect();
        let mut sys = System::new(vars.len());
        let row = |l: &Lin| -> Row {
            let mut r = vec![0; vars.len() + 1];
            r[0] = l.c;
            for (v, a) in &l.coefs {
                r[index[v]] = *a;
            }
            r
        };
        for l in lits {
            match encode(l)? {
                Encoded::Eq(x) => sys.eqs.push(row(&x)),
                Encoded::Geq(x) => sys.geqs.push(row(&x)),
                Encoded::Neq(x) => sys.neqs.push(row(&x)),
                Encoded::True => {}
                Encoded::False => return Ok(TheoryVerdict::Unsat),
            }
        }
        let Some(m) = sys.solve() else {
            return Ok(TheoryVerdict::Unsat);
        };
        debug_assert!(sys.geqs.iter().all(|r| eval_row(r, &m) >= 0));
        let mut model = BTreeMap::new();
        for (v, x) in vars.iter().zip(m) {
            let x = i64::try_from(x).map_err(|_| {
                TheoryError::Unsupported(v.to_string(), "model value exceeds 64 bits".into())
            })?;
            model.insert(v.clone(), Value::Int(x));
        }
        Ok(TheoryVerdict::Sat(model))
    }

    fn negate_lit(&self, lit: &TheoryLit) -> Result<TheoryLit, TheoryError> {
        let flip = match &*lit.pred {
            "=<" => ">",
            ">" => "=<",
            "<" => ">=",
            ">=" => "<",
            _ => return eq_complement(lit).ok_or_else(|| TheoryError::NoComplement(lit_string(lit))),
        };
        Ok(TheoryLit::new(flip, lit.args.clone()))
    }

    fn functional_predicates(&self) -> &[FunctionalPredicate] {
        FUNCTIONAL
    }

    fn eval_lit(&self, pred: &str, args: &[Value]) -> Result<bool, TheoryError> {
        if let Some(b) = eval_equality(pred, args) {
            return Ok(b);
        }
        let err = || TheoryError::Eval(pred.to_string(), "expects integer arguments".into());
        if let Ok(fp) = self.fp_lookup(pred) {
            if args.len() != fp.arity {
                return Err(err());
            }
            let out = (fp.eval)(&args[..fp.arity - 1]).ok_or_else(err)?;
            return Ok(out == args[fp.arity - 1]);
        }
        let (a, b) = match args {
            [Value::Int(a), Value::Int(b)] => (*a, *b),
            [_, _] => return Err(err()),
            _ => {
                return Err(TheoryError::UnknownPredicate {
                    theory: "lia",
                    pred: pred.to_string(),
                    arity: args.len(),
                })
            }
        };
        match pred {
            "=<" => Ok(a <= b),
            "<" => Ok(a < b),
            ">=" => Ok(a >= b),
            ">" => Ok(a > b),
            _ => Err(TheoryError::UnknownPredicate {
                theory: "lia",
                pred: pred.to_string(),
                arity: 2,
            }),
        }
    }

    fn eval_fn(&self, f: &str, args: &[Value]) -> Result<Value, TheoryError> {
        let [Value::Int(a), Value::Int(b)] = args else {
            return Err(TheoryError::Eval(f.to_string(), "expects two integers".into()));
        };
        let r = match f {
            "+" => a.checked_add(*b),
            "-" => a.checked_sub(*b),
            "*" => a.checked_mul(*b),
            _ => return Err(TheoryError::Eval(f.to_string(), "unknown function".into())),
        };
        r.map(Value::Int)
            .ok_or_else(|| TheoryError::Eval(f.to_string(), "overflow".into()))
    }

    fn admits(&self, v: &Value) -> bool {
        matches!(v, Value::Int(_))
    }

    fn default_value(&self) -> Value {
        Value::Int(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::terms::Sort;

    fn v(n: &str) -> XTerm {
        XTerm::Var(Var::user(n, Sort::X))
    }

    fn lit(p: &str, a: XTerm, b: XTerm) -> TheoryLit {
        TheoryLit::new(p, vec![a, b])
    }

    #[test]
    fn commented_min_example_is_unsat() {
        let lits = [
            lit("=<", v("m"), v("y")),
            lit("=<", v("m"), v("m")),
            lit("<", v("y"), v("m")),
        ];
        assert_eq!(LiaTheory.sat(&lits).unwrap(), TheoryVerdict::Unsat);
    }

    #[test]
    fn model_satisfies_literals() {
        let lits = [lit("=<", v("min"), v("y"))];
        let TheoryVerdict::Sat(m) = LiaTheory.sat(&lits).unwrap() else { panic!() };
        let (a, b) = (&m[&Var::user("min", Sort::X)], &m[&Var::user("y", Sort::X)]);
        assert!(LiaTheory.eval_lit("=<", &[a.clone(), b.clone()]).unwrap());
    }

    #[test]
    fn sum_is_functional() {
        let fp = LiaTheory.fp_lookup("sum").unwrap();
        assert_eq!((fp.eval)(&[Value::Int(2), Value::Int(3)]), Some(Value::Int(5)));
        let lits = [
            TheoryLit::new("sum", vec![XTerm::Int(2), XTerm::Int(3), v("n")]),
            lit("neq", v("n"), XTerm::Int(5)),
        ];
        assert_eq!(LiaTheory.sat(&lits).unwrap(), TheoryVerdict::Unsat);
        let err = LiaTheory.fp_lookup("applyTo").unwrap_err();
        assert!(err.to_string().contains("sum/3"));
    }

    #[test]
    fn negation_of_order() {
        let n = LiaTheory.negate_lit(&lit("<", v("z"), v("n"))).unwrap();
        assert_eq!(n, lit(">=", v("z"), v("n")));
        assert!(LiaTheory
            .negate_lit(&TheoryLit::new("sum", vec![v("x"), v("y"), v("n")]))
            .is_err());
    }

    #[test]
    fn arithmetic_terms() {
        let lits = [
            lit("=", v("x"), XTerm::app("+", vec![XTerm::app("*", vec![XTerm::Int(2), v("y")]), XTerm::Int(1)])),
            lit("=", v("x"), XTerm::Int(4)),
        ];
        assert_eq!(LiaTheory.sat(&lits).unwrap(), TheoryVerdict::Unsat);
        let bad = [lit("=", v("x"), XTerm::app("*", vec![v("y"), v("y")]))];
        assert!(LiaTheory.sat(&bad).is_err());
        let unknown = [lit("subset", v("x"), v("y"))];
        assert!(matches!(LiaTheory.sat(&unknown), Err(TheoryError::UnknownPredicate { .. })));
    }
}
