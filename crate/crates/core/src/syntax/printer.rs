use std::fmt::{self, Write};

use super::ast::*;

impl fmt::Display for STerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            STerm::Var(v, _) => f.write_str(v),
            STerm::Atom(a) => f.write_str(a),
            STerm::Int(n) => write!(f, "{n}"),
            STerm::Pair(a, b) => write!(f, "[{a},{b}]"),
            STerm::Arith(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            STerm::Set(elems, tail) => {
                f.write_str("{")?;
                for (i, e) in elems.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{e}")?;
                }
                if let Some(t) = tail {
                    write!(f, " / {t}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl fmt::Display for SCtrl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SCtrl::Var(v, _) => f.write_str(v),
            SCtrl::Pair(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

const P_IMPLIES: u8 = 0;
const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_UNIT: u8 = 3;

fn prec(f: &SFormula) -> u8 {
    match f {
        SFormula::Implies(..) => P_IMPLIES,
        SFormula::Or(..) => P_OR,
        SFormula::And(..) => P_AND,
        _ => P_UNIT,
    }
}

fn write_at(out: &mut fmt::Formatter<'_>, f: &SFormula, min: u8) -> fmt::Result {
    if prec(f) < min {
        write!(out, "({f})")
    } else {
        write!(out, "{f}")
    }
}

impl fmt::Display for SFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SFormula::True => f.write_str("true"),
            SFormula::False => f.write_str("false"),
            SFormula::Rel(r, a, b) => write!(f, "{a} {} {b}", r.symbol()),
            SFormula::Subset(lhs, r) => {
                write!(f, "subset({lhs}, {{{} : {} | {}}})", r.ctrl, r.dom, r.filter)
            }
            SFormula::Quant(q) => {
                write!(f, "{}(", q.kind.keyword())?;
                if q.bracketed {
                    f.write_str("[")?;
                }
                for (i, (c, d)) in q.binders.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c} in {d}")?;
                }
                if q.bracketed {
                    f.write_str("]")?;
                }
                match &q.ext {
                    Some((locals, fp)) => {
                        write!(f, ", [{}], {}, {})", locals.join(","), q.filter, fp)
                    }
                    None => write!(f, ", {})", q.filter),
                }
            }
            SFormula::Call(n, args, _) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            SFormula::Neg(a) => write!(f, "neg({a})"),
            SFormula::And(a, b) => {
                write_at(f, a, P_UNIT)?;
                f.write_str(" & ")?;
                write_at(f, b, P_AND)
            }
            SFormula::Or(a, b) => {
                write_at(f, a, P_AND)?;
                f.write_str(" or ")?;
                write_at(f, b, P_OR)
            }
            SFormula::Implies(a, b) => {
                write_at(f, a, P_OR)?;
                f.write_str(" implies ")?;
                write_at(f, b, P_IMPLIES)
            }
        }
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) :- {}.", self.name, self.params.join(","), self.body)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.definitions {
            writeln!(f, "{d}")?;
        }
        writeln!(f, "{}.", self.query)
    }
}

pub fn print_program(p: &Program) -> String {
    let mut s = String::new();
    let _ = write!(s, "{p}");
    s
}
