use std::sync::Arc;

use super::eval::{eval, EvalError, Valuation};
use super::Value;
use crate::terms::{Formula, Sort, Var};
use crate::theory::Theory;

/// Bounds of a brute-force search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    pub atoms: Vec<Arc<str>>,
    pub int_lo: i64,
    pub int_hi: i64,
    pub max_set_card: usize,
    /// Whether element variables and set members also range over pairs of
    /// base values.
    pub pairs: bool,
}

impl Default for Universe {
    fn default() -> Self {
        Universe {
            atoms: vec![Arc::from("a"), Arc::from("b"), Arc::from("c")],
            int_lo: -3,
            int_hi: 3,
            max_set_card: 3,
            pairs: false,
        }
    }
}

impl Universe {
    /// Adds the atoms occurring in `f`.
    pub fn covering(mut self, f: &Formula) -> Self {
        for a in f.atoms() {
            if !self.atoms.contains(&a) {
                self.atoms.push(a);
            }
        }
        self
    }

    /// Element values admitted by `theory`, in ascending order.
    pub fn elements(&self, theory: &dyn Theory) -> Vec<Value> {
        let mut base: Vec<Value> = self
            .atoms
            .iter()
            .map(|a| Value::Atom(a.clone()))
            .chain((self.int_lo..=self.int_hi).map(Value::Int))
            .filter(|v| theory.admits(v))
            .collect();
        if self.pairs {
            let pairs: Vec<Value> = base
                .iter()
                .flat_map(|a| base.iter().map(move |b| Value::pair(a.clone(), b.clone())))
                .collect();
            base.extend(pairs);
        }
        base.sort();
        base.dedup();
        base
    }

    /// Candidate set values: by cardinality, then lexicographically.
    pub fn sets(&self, theory: &dyn Theory) -> Vec<Value> {
        let elems = self.elements(theory);
        let mut out = Vec::new();
        for k in 0..=self.max_set_card.min(elems.len()) {
            combinations(&elems, k, &mut Vec::new(), 0, &mut out);
        }
        out
    }
}

fn combinations(elems: &[Value], k: usize, cur: &mut Vec<Value>, from: usize, out: &mut Vec<Value>) {
    if cur.len() == k {
        out.push(Value::set(cur.iter().cloned()));
        return;
    }
    for i in from..elems.len() {
        cur.push(elems[i].clone());
        combinations(elems, k, cur, i + 1, out);
        cur.pop();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("search space of {size} valuations exceeds the cap of {cap}; use a smaller universe")]
    TooLarge { size: u128, cap: u128 },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub const DEFAULT_CAP: u128 = 5_000_000;

/// Every valuation of the free variables of `f` over `u` that makes `f` true.
pub fn enumerate_models(
    f: &Formula,
    u: &Universe,
    theory: &dyn Theory,
    cap: u128,
) -> Result<Vec<Valuation>, OracleError> {
    let mut out = Vec::new();
    search(f, u, theory, cap, &mut |v| {
        out.push(v.clone());
        true
    })?;
    Ok(out)
}

/// First model in enumeration order, if any.
pub fn find_model(
    f: &Formula,
    u: &Universe,
    theory: &dyn Theory,
    cap: u128,
) -> Result<Option<Valuation>, OracleError> {
    let mut found = None;
    search(f, u, theory, cap, &mut |v| {
        found = Some(v.clone());
        false
    })?;
    Ok(found)
}

/// Calls `visit` on each model; stops early when it returns false.
fn search(
    f: &Formula,
    u: &Universe,
    theory: &dyn Theory,
    cap: u128,
    visit: &mut dyn FnMut(&Valuation) -> bool,
) -> Result<(), OracleError> {
    let vars: Vec<Var> = f.free_vars().into_iter().collect();
    let elems = u.elements(theory);
    let sets = u.sets(theory);
    let domains: Vec<&[Value]> = vars
        .iter()
        .map(|v| match v.sort() {
            Sort::X => elems.as_slice(),
            Sort::Set => sets.as_slice(),
        })
        .collect();
    let size = domains
        .iter()
        .try_fold(1u128, |acc, d| acc.checked_mul(d.len() as u128))
        .unwrap_or(u128::MAX);
    if size > cap {
        return Err(OracleError::TooLarge { size, cap });
    }
    if domains.iter().any(|d| d.is_empty()) {
        return Ok(());
    }
    let mut idx = vec![0usize; vars.len()];
    let mut val: Valuation = vars
        .iter()
        .zip(&domains)
        .map(|(v, d)| (v.clone(), d[0].clone()))
        .collect();
    loop {
        if eval(f, &val, theory)? && !visit(&val) {
            return Ok(());
        }
        // Odometer, last variable fastest.
        let mut i = vars.len();
        loop {
            if i == 0 {
                return Ok(());
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < domains[i].len() {
                val.insert(vars[i].clone(), domains[i][idx[i]].clone());
                break;
            }
            idx[i] = 0;
            val.insert(vars[i].clone(), domains[i][0].clone());
        }
    }
}
