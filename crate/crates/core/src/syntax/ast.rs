//! Surface syntax tree.

use std::fmt;

/// Source position (1-based). Positions never take part in equality, so
/// trees that differ only in layout compare equal.
#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum STerm {
    Var(String, Span),
    Atom(String),
    Int(i64),
    Pair(Box<STerm>, Box<STerm>),
    /// `{e1,...,en / tail}`; `tail` is `None` for a closed set.
    Set(Vec<STerm>, Option<Box<STerm>>),
    Arith(ArithOp, Box<STerm>, Box<STerm>),
}

impl STerm {
    pub fn var(name: &str) -> Self {
        STerm::Var(name.to_string(), Span::default())
    }

    pub fn pair(a: STerm, b: STerm) -> Self {
        STerm::Pair(Box::new(a), Box::new(b))
    }

    pub fn empty() -> Self {
        STerm::Set(Vec::new(), None)
    }

    /// Variable that terminates this term viewed as a set (the term itself if
    /// it is a variable).
    pub fn tail_var(&self) -> Option<&str> {
        match self {
            STerm::Var(v, _) => Some(v),
            STerm::Set(_, Some(t)) => t.tail_var(),
            _ => None,
        }
    }

    pub fn vars(&self, out: &mut Vec<String>) {
        match self {
            STerm::Var(v, _) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            STerm::Atom(_) | STerm::Int(_) => {}
            STerm::Pair(a, b) | STerm::Arith(_, a, b) => {
                a.vars(out);
                b.vars(out);
            }
            STerm::Set(es, t) => {
                es.iter().for_each(|e| e.vars(out));
                if let Some(t) = t {
                    t.vars(out);
                }
            }
        }
    }
}

/// Control term of a binder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SCtrl {
    Var(String, Span),
    Pair(Box<SCtrl>, Box<SCtrl>),
}

impl SCtrl {
    pub fn var(name: &str) -> Self {
        SCtrl::Var(name.to_string(), Span::default())
    }

    pub fn vars(&self) -> Vec<String> {
        match self {
            SCtrl::Var(v, _) => vec![v.clone()],
            SCtrl::Pair(a, b) => {
                let mut out = a.vars();
                out.extend(b.vars());
                out
            }
        }
    }

    pub fn to_term(&self) -> STerm {
        match self {
            SCtrl::Var(v, s) => STerm::Var(v.clone(), *s),
            SCtrl::Pair(a, b) => STerm::pair(a.to_term(), b.to_term()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rel {
    Eq,
    Neq,
    In,
    Nin,
    Le,
    Lt,
    Ge,
    Gt,
}

impl Rel {
    pub fn symbol(self) -> &'static str {
        match self {
            Rel::Eq => "=",
            Rel::Neq => "neq",
            Rel::In => "in",
            Rel::Nin => "nin",
            Rel::Le => "=<",
            Rel::Lt => "<",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    pub fn complement(self) -> Rel {
        match self {
            Rel::Eq => Rel::Neq,
            Rel::Neq => Rel::Eq,
            Rel::In => Rel::Nin,
            Rel::Nin => Rel::In,
            Rel::Le => Rel::Gt,
            Rel::Lt => Rel::Ge,
            Rel::Ge => Rel::Lt,
            Rel::Gt => Rel::Le,
        }
    }

    pub fn is_order(self) -> bool {
        matches!(self, Rel::Le | Rel::Lt | Rel::Ge | Rel::Gt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QKind {
    Forall,
    Exists,
}

impl QKind {
    pub fn keyword(self) -> &'static str {
        match self {
            QKind::Forall => "foreach",
            QKind::Exists => "exists",
        }
    }

    pub fn dual(self) -> QKind {
        match self {
            QKind::Forall => QKind::Exists,
            QKind::Exists => QKind::Forall,
        }
    }
}

/// `foreach`/`exists` in 2- or 4-argument form. Multiple binders nest
/// outermost-first; the extension (locals and functional predicates) belongs
/// to the innermost binder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quant {
    pub kind: QKind,
    pub binders: Vec<(SCtrl, STerm)>,
    /// Whether the binders were written inside `[...]`.
    pub bracketed: bool,
    pub ext: Option<(Vec<String>, Box<SFormula>)>,
    pub filter: Box<SFormula>,
}

/// `{ctrl : dom | filter}` as the second argument of `subset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SRis {
    pub ctrl: SCtrl,
    pub dom: STerm,
    pub filter: Box<SFormula>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SFormula {
    True,
    False,
    Rel(Rel, STerm, STerm),
    Subset(STerm, SRis),
    Quant(Quant),
    Call(String, Vec<STerm>, Span),
    And(Box<SFormula>, Box<SFormula>),
    Or(Box<SFormula>, Box<SFormula>),
    Neg(Box<SFormula>),
    Implies(Box<SFormula>, Box<SFormula>),
}

impl SFormula {
    pub fn and(a: SFormula, b: SFormula) -> Self {
        SFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: SFormula, b: SFormula) -> Self {
        SFormula::Or(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: SFormula) -> Self {
        SFormula::Neg(Box::new(a))
    }

    pub fn implies(a: SFormula, b: SFormula) -> Self {
        SFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn rel(r: Rel, a: STerm, b: STerm) -> Self {
        SFormula::Rel(r, a, b)
    }

    /// Right-nested conjunction of `items`; `true` when empty.
    pub fn and_all(items: Vec<SFormula>) -> Self {
        let mut it = items.into_iter().rev();
        match it.next() {
            None => SFormula::True,
            Some(last) => it.fold(last, |acc, f| SFormula::and(f, acc)),
        }
    }

    pub fn conjuncts(&self) -> Vec<&SFormula> {
        match self {
            SFormula::And(a, b) => {
                let mut out = a.conjuncts();
                out.extend(b.conjuncts());
                out
            }
            f => vec![f],
        }
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&[], &mut out);
        out
    }

    fn collect_free(&self, bound: &[String], out: &mut Vec<String>) {
        let push_term = |t: &STerm, out: &mut Vec<String>| {
            let mut vs = Vec::new();
            t.vars(&mut vs);
            for v in vs {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match self {
            SFormula::True | SFormula::False => {}
            SFormula::Rel(_, a, b) => {
                push_term(a, out);
                push_term(b, out);
            }
            SFormula::Call(_, args, _) => args.iter().for_each(|a| push_term(a, out)),
            SFormula::Subset(lhs, ris) => {
                push_term(lhs, out);
                push_term(&ris.dom, out);
                let mut inner = bound.to_vec();
                inner.extend(ris.ctrl.vars());
                ris.filter.collect_free(&inner, out);
            }
            SFormula::Quant(q) => {
                let mut inner = bound.to_vec();
                for (c, d) in &q.binders {
                    let mut vs = Vec::new();
                    d.vars(&mut vs);
                    for v in vs {
                        if !inner.contains(&v) && !out.contains(&v) {
                            out.push(v);
                        }
                    }
                    inner.extend(c.vars());
                }
                if let Some((locals, fp)) = &q.ext {
                    inner.extend(locals.iter().cloned());
                    fp.collect_free(&inner, out);
                }
                q.filter.collect_free(&inner, out);
            }
            SFormula::And(a, b) | SFormula::Or(a, b) | SFormula::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            SFormula::Neg(a) => a.collect_free(bound, out),
        }
    }
}

/// `name(P1,...,Pn) :- body`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub params: Vec<String>,
    pub body: SFormula,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub definitions: Vec<Definition>,
    pub query: SFormula,
}

impl Program {
    pub fn query(query: SFormula) -> Self {
        Program {
            definitions: Vec::new(),
            query,
        }
    }

    pub fn definition(&self, name: &str) -> Option<&Definition> {
        self.definitions.iter().find(|d| d.name == name)
    }
}
