use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::syntax::STerm;

/// Concrete values: urelements, ordered pairs and finite sets. Sets are
/// kept as ordered sets, so equal sets compare equal however they were built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Atom(Arc<str>),
    Int(i64),
    Pair(Box<Value>, Box<Value>),
    Set(BTreeSet<Value>),
}

impl Value {
    pub fn atom(name: &str) -> Self {
        Value::Atom(Arc::from(name))
    }

    pub fn pair(a: Value, b: Value) -> Self {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn empty() -> Self {
        Value::Set(BTreeSet::new())
    }

    pub fn set(items: impl IntoIterator<Item = Value>) -> Self {
        Value::Set(items.into_iter().collect())
    }

    pub fn is_set(&self) -> bool {
        matches!(self, Value::Set(_))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_set(&self) -> Option<&BTreeSet<Value>> {
        match self {
            Value::Set(s) => Some(s),
            _ => None,
        }
    }

    /// Reads a ground surface term back as a value (inverse of `Display`).
    pub fn from_surface(t: &STerm) -> Option<Value> {
        Some(match t {
            STerm::Atom(a) => Value::atom(a),
            STerm::Int(n) => Value::Int(*n),
            STerm::Pair(a, b) => Value::pair(Self::from_surface(a)?, Self::from_surface(b)?),
            STerm::Set(elems, tail) => {
                let mut out = elems
                    .iter()
                    .map(Self::from_surface)
                    .collect::<Option<BTreeSet<_>>>()?;
                if let Some(t) = tail {
                    out.extend(Self::from_surface(t)?.as_set()?.iter().cloned());
                }
                Value::Set(out)
            }
            STerm::Var(..) | STerm::Arith(..) => return None,
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Atom(a) => f.write_str(a),
            Value::Int(n) => write!(f, "{n}"),
            Value::Pair(a, b) => write!(f, "[{a},{b}]"),
            Value::Set(s) => {
                f.write_str("{")?;
                for (i, v) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    #[test]
    fn sets_are_canonical() {
        let a = Value::set([Value::Int(2), Value::Int(1), Value::Int(2)]);
        let b = Value::set([Value::Int(1), Value::Int(2)]);
        assert_eq!(a, b);
        assert_eq!(a.to_string(), "{1,2}");
    }

    #[test]
    fn display_reparses() {
        let v = Value::set([
            Value::pair(Value::atom("a"), Value::Int(-3)),
            Value::atom("b"),
        ]);
        let t = parse_term(&v.to_string()).unwrap();
        assert_eq!(Value::from_surface(&t), Some(v));
        assert_eq!(Value::from_surface(&parse_term("{1 / {2}}").unwrap()), Some(Value::set([Value::Int(1), Value::Int(2)])));
    }
}
