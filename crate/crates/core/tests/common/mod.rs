//! Random inputs and bounded universes shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rq_core::oracle::Universe;
use rq_core::rq::FragmentVerdict;
use rq_core::theory::{EqTheory, LiaTheory, Theory};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus() -> Vec<(String, String)> {
    let mut files: Vec<_> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "slog"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, std::fs::read_to_string(&p).unwrap())
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Th {
    Eq,
    Lia,
}

impl Th {
    pub fn theory(self) -> Arc<dyn Theory> {
        match self {
            Th::Eq => Arc::new(EqTheory),
            Th::Lia => Arc::new(LiaTheory),
        }
    }

    /// Three atoms for EQ, integers in [-3,3] for LIA; sets of at most
    /// three elements. EQ formulas mention no integers, so none are listed.
    pub fn universe(self) -> Universe {
        let (atoms, int_lo, int_hi) = match self {
            Th::Eq => (["a", "b", "c"].iter().map(|a| Arc::from(*a)).collect(), 1, 0),
            Th::Lia => (Vec::new(), -3, 3),
        };
        Universe {
            atoms,
            int_lo,
            int_hi,
            max_set_card: 3,
            pairs: false,
        }
    }
}

/// Generator of random formulas in surface syntax, shaped to land in a given
/// fragment. Callers confirm the fragment with the classifier.
pub struct FormulaGen {
    pub rng: ChaCha8Rng,
    pub th: Th,
    bound: Vec<String>,
    next_bound: usize,
    set_vars: Vec<&'static str>,
    elem_vars: Vec<&'static str>,
}

impl FormulaGen {
    pub fn new(seed: u64, th: Th) -> Self {
        FormulaGen {
            rng: rng(seed),
            th,
            bound: Vec::new(),
            next_bound: 0,
            set_vars: vec!["A"],
            elem_vars: vec!["X"],
        }
    }

    fn constant(&mut self) -> String {
        match self.th {
            // Leave one atom of the universe unnamed, as integers beyond
            // [-1,1] are for LIA.
            Th::Eq => ["a", "b"].choose(&mut self.rng).unwrap().to_string(),
            Th::Lia => self.rng.gen_range(-1..=1).to_string(),
        }
    }

    /// An element term: a constant, a free element variable or a bound one.
    fn elem(&mut self) -> String {
        let mut pool: Vec<String> = self.elem_vars.iter().map(|v| v.to_string()).collect();
        pool.extend(self.bound.iter().cloned());
        if pool.is_empty() || self.rng.gen_bool(0.35) {
            self.constant()
        } else {
            pool.choose(&mut self.rng).unwrap().clone()
        }
    }

    fn rel(&mut self) -> &'static str {
        let rels: &[&str] = match self.th {
            Th::Eq => &["=", "neq"],
            Th::Lia => &["=", "neq", "<", "=<", ">", ">="],
        };
        rels.choose(&mut self.rng).unwrap()
    }

    fn set_var(&mut self) -> &'static str {
        self.set_vars.choose(&mut self.rng).copied().unwrap()
    }

    /// A set term over the free set variables, with at most two elements.
    fn set_term(&mut self, variable: bool) -> String {
        match self.rng.gen_range(0..if variable { 3 } else { 5 }) {
            0 => self.set_var().to_string(),
            1 => format!("{{{} / {}}}", self.elem(), self.set_var()),
            2 => format!("{{{}, {} / {}}}", self.elem(), self.elem(), self.set_var()),
            3 => format!("{{{}}}", self.elem()),
            _ => format!("{{{}, {}}}", self.constant(), self.constant()),
        }
    }

    fn literal(&mut self) -> String {
        let (a, r, b) = (self.elem(), self.rel(), self.elem());
        format!("{a} {r} {b}")
    }

    /// A top-level constraint without quantifiers.
    fn atom(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 => format!("{} in {}", self.elem(), self.set_term(false)),
            1 => format!("{} nin {}", self.elem(), self.set_term(false)),
            2 => format!("{} = {}", self.set_var(), self.set_term(false)),
            _ => self.literal(),
        }
    }

    fn fresh_bound(&mut self) -> String {
        self.next_bound += 1;
        format!("V{}", self.next_bound)
    }

    /// A quantifier whose nesting follows `kinds`, outermost first.
    fn quant(&mut self, kinds: &[&str]) -> String {
        let Some((kind, inner)) = kinds.split_first() else {
            return if self.rng.gen_bool(0.2) {
                format!("({} or {})", self.literal(), self.literal())
            } else {
                self.literal()
            };
        };
        let dom = self.set_term(true);
        let v = self.fresh_bound();
        self.bound.push(v.clone());
        let mut body = self.quant(inner);
        if self.rng.gen_bool(0.3) {
            body = format!("{} & {body}", self.literal());
        }
        self.bound.pop();
        format!("{kind}({v} in {dom}, {body})")
    }

    /// Quantifier nestings whose presence puts a formula in `target`.
    fn shapes(target: FragmentVerdict) -> &'static [&'static [&'static str]] {
        const F: &str = "foreach";
        const E: &str = "exists";
        match target {
            FragmentVerdict::PhiForall => &[&[F], &[F, F]],
            FragmentVerdict::PhiExists => &[&[E], &[E, E]],
            FragmentVerdict::PhiExistsForall => &[&[E, F], &[E], &[F]],
            FragmentVerdict::PhiForallExists => &[&[F, E], &[F, E], &[F], &[E]],
            FragmentVerdict::Outside => &[&[F, E]],
        }
    }

    /// A formula of one to three conjuncts meant for `target`; top-level
    /// disjunction appears occasionally.
    pub fn formula(&mut self, target: FragmentVerdict) -> String {
        self.next_bound = 0;
        self.set_vars = if self.rng.gen_bool(0.5) { vec!["A"] } else { vec!["A", "B"] };
        self.elem_vars = match (self.th, self.rng.gen_range(0..3)) {
            (_, 0) => vec![],
            (Th::Eq, 2) => vec!["X", "Y"],
            _ => vec!["X"],
        };
        let n = self.rng.gen_range(1..=3);
        let mut parts = Vec::new();
        let mut quantified = false;
        for k in 0..n {
            if self.rng.gen_bool(0.6) || (k + 1 == n && !quantified) {
                let shape = Self::shapes(target).choose(&mut self.rng).unwrap();
                parts.push(self.quant(shape));
                quantified = true;
            } else {
                parts.push(self.atom());
            }
        }
        let mut f = parts.join(" & ");
        if self.rng.gen_bool(0.1) {
            f = format!("{f} or {}", self.atom());
        }
        f
    }

    /// A random formula exercising the whole surface grammar.
    pub fn any_formula(&mut self, depth: u32) -> String {
        self.set_vars = vec!["A", "B", "S_1"];
        self.elem_vars = vec!["X", "Y", "Z_0"];
        self.fuzz(depth)
    }

    fn fuzz_term(&mut self, depth: u32) -> String {
        if depth == 0 {
            return match self.rng.gen_range(0..3) {
                0 => ["a", "b", "c"].choose(&mut self.rng).unwrap().to_string(),
                1 => self.rng.gen_range(-5..=5).to_string(),
                _ => self.elem(),
            };
        }
        match self.rng.gen_range(0..5) {
            0 => format!("[{},{}]", self.fuzz_term(depth - 1), self.fuzz_term(depth - 1)),
            1 => {
                let op = ["+", "-", "*"].choose(&mut self.rng).unwrap();
                format!("({} {op} {})", self.fuzz_term(depth - 1), self.fuzz_term(depth - 1))
            }
            _ => self.fuzz_term(0),
        }
    }

    fn fuzz_set(&mut self, depth: u32) -> String {
        let n = self.rng.gen_range(0..3);
        let elems: Vec<String> = (0..n).map(|_| self.fuzz_term(depth.min(1))).collect();
        match self.rng.gen_range(0..3) {
            0 => self.set_var().to_string(),
            1 => format!("{{{}}}", elems.join(",")),
            _ if n == 0 => "{}".to_string(),
            _ => format!("{{{} / {}}}", elems.join(","), self.set_var()),
        }
    }

    fn fuzz(&mut self, depth: u32) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.25);
        if leaf {
            return match self.rng.gen_range(0..7) {
                0 => "true".into(),
                1 => "false".into(),
                2 => format!("{} in {}", self.fuzz_term(1), self.fuzz_set(1)),
                3 => format!("{} nin {}", self.fuzz_term(1), self.fuzz_set(1)),
                4 => format!("{} = {}", self.set_var(), self.fuzz_set(1)),
                5 => format!("sum({},{},{})", self.elem(), self.elem(), self.elem()),
                _ => {
                    let r = ["=", "neq", "<", "=<", ">", ">="].choose(&mut self.rng).unwrap();
                    format!("{} {r} {}", self.fuzz_term(1), self.fuzz_term(1))
                }
            };
        }
        let d = depth - 1;
        match self.rng.gen_range(0..9) {
            0 => format!("{} & {}", self.fuzz(d), self.fuzz(d)),
            1 => format!("({} or {})", self.fuzz(d), self.fuzz(d)),
            2 => format!("({} implies {})", self.fuzz(d), self.fuzz(d)),
            3 => format!("neg({})", self.fuzz(d)),
            4 => {
                let (v, s) = (self.fresh_bound(), self.set_var());
                format!("subset({s}, {{{v} : {s} | {}}})", self.fuzz(d))
            }
            5 => {
                let (v, w) = (self.fresh_bound(), self.fresh_bound());
                let (a, b) = (self.fuzz_set(0), self.fuzz_set(0));
                format!("exists([{v} in {a}, {w} in {b}], {})", self.fuzz(d))
            }
            6 => {
                let (x, y, n) = (self.fresh_bound(), self.fresh_bound(), self.fresh_bound());
                let s = self.set_var();
                format!("foreach([{x},{y}] in {s}, [{n}], {}, sum({x},{y},{n}))", self.fuzz(d))
            }
            _ => {
                let kind = ["foreach", "exists"].choose(&mut self.rng).unwrap();
                let v = self.fresh_bound();
                format!("{kind}({v} in {}, {})", self.fuzz_set(0), self.fuzz(d))
            }
        }
    }
}

/// A random conjunction of linear literals over `X`, `Y`, `Z` with small
/// coefficients and constants.
pub fn lia_conjunction(rng: &mut ChaCha8Rng) -> String {
    let vars = ["X", "Y", "Z"];
    let n = rng.gen_range(1..=4);
    let mut lits = Vec::new();
    for _ in 0..n {
        let side = |rng: &mut ChaCha8Rng| -> String {
            let v = vars.choose(rng).unwrap();
            match rng.gen_range(0..4) {
                0 => rng.gen_range(-3..=3).to_string(),
                1 => format!("{} * {v}", rng.gen_range(-2..=2)),
                2 => format!("{v} + {}", vars.choose(rng).unwrap()),
                _ => v.to_string(),
            }
        };
        let (a, b) = (side(rng), side(rng));
        let r = ["=", "neq", "<", "=<", ">", ">="].choose(rng).unwrap();
        lits.push(format!("{a} {r} {b}"));
    }
    lits.join(" & ")
}
