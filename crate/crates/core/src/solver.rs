//! Search driver: runs the rewrite engine over every choice point, turns
//! irreducible leaves into answers and implements the proving workflow.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::engine::{Engine, EngineError, Leaf, Limits, SearchStats, State, Stop};
use crate::oracle::{self, EvalError, Valuation, Value};
use crate::rq::{self, FragmentReport, FragmentVerdict, RqError};
use crate::syntax::{self, ParseError, Program};
use crate::terms::{Constraint, Formula, SetTerm, Sort, Var, VarSupply, XTerm};
use crate::theory::{LiaTheory, Theory};

/// Per-branch budget for formulas outside the decidable fragments.
pub const OUTSIDE_BRANCH_STEPS: u64 = 100_000;
/// Whole-search budget outside the fragments, as a multiple of the branch
/// budget.
pub const OUTSIDE_TOTAL_FACTOR: u64 = 10;

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Rq(#[from] RqError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("answer extraction failed: {0}")]
    Answer(#[from] EvalError),
}

#[derive(Clone)]
pub struct Options {
    pub theory: Arc<dyn Theory>,
    /// Per-branch step budget; overrides the fragment default.
    pub max_steps: Option<u64>,
    /// Stop after this many distinct answers; `None` enumerates all.
    pub max_answers: Option<usize>,
    /// Explore disjoint subtrees on the rayon pool.
    pub parallel: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            theory: Arc::new(LiaTheory),
            max_steps: None,
            max_answers: Some(1),
            parallel: false,
        }
    }
}

impl fmt::Debug for Options {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Options")
            .field("theory", &self.theory.name())
            .field("max_steps", &self.max_steps)
            .field("max_answers", &self.max_answers)
            .field("parallel", &self.parallel)
            .finish()
    }
}

impl Options {
    pub fn with_theory(theory: Arc<dyn Theory>) -> Self {
        Options {
            theory,
            ..Options::default()
        }
    }

    /// Budget for a formula of the given fragment.
    pub fn limits(&self, fragment: FragmentVerdict) -> Limits {
        match (self.max_steps, fragment.is_decidable()) {
            (Some(n), _) => Limits {
                branch_steps: Some(n),
                total_steps: (!fragment.is_decidable()).then(|| n.saturating_mul(OUTSIDE_TOTAL_FACTOR)),
            },
            (None, true) => Limits::default(),
            (None, false) => Limits {
                branch_steps: Some(OUTSIDE_BRANCH_STEPS),
                total_steps: Some(OUTSIDE_BRANCH_STEPS * OUTSIDE_TOTAL_FACTOR),
            },
        }
    }
}

/// A satisfiable irreducible form and a concrete model of it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    /// Set constraints left in irreducible form.
    pub irreducible: Formula,
    /// Element bindings found by unification, for the query variables.
    pub bindings: Vec<(Var, XTerm)>,
    /// Element literals handed to the theory.
    pub residue: Formula,
    pub theory_model: BTreeMap<Var, Value>,
    /// Values for the free variables of the query.
    pub valuation: Valuation,
}

impl fmt::Display for Answer {
    /// Comma-separated constraints, in the style of a CLP answer.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.bindings.iter().map(|(v, t)| format!("{v} = {t}")).collect();
        parts.extend(self.irreducible.conjuncts().iter().map(|c| c.to_string()));
        parts.extend(self.residue.conjuncts().iter().map(|c| c.to_string()));
        parts.retain(|p| p != "true");
        if parts.is_empty() {
            f.write_str("true")
        } else {
            f.write_str(&parts.join(", "))
        }
    }
}

impl Answer {
    /// The valuation as `V = value` lines, in variable order.
    pub fn valuation_text(&self) -> Vec<String> {
        self.valuation.iter().map(|(v, x)| format!("{v} = {x}")).collect()
    }

    /// Solved set equation for the query variable `name`, if any.
    pub fn solved(&self, name: &str) -> Option<&SetTerm> {
        self.irreducible.conjuncts().into_iter().find_map(|c| match c {
            Formula::Atom(Constraint::SetEq(SetTerm::Var(v), t)) if !v.is_fresh() && v.name() == name => Some(t),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Sat(Vec<Answer>),
    Unsat,
    Unknown(String),
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Sat(_) => "sat",
            Verdict::Unsat => "unsat",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

/// Result of solving a program.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub verdict: Verdict,
    pub report: FragmentReport,
    /// The core formula that was solved.
    pub core: Formula,
    pub stats: SearchStats,
}

#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProveOutcome {
    Proved,
    Counterexample(Answer),
    Unknown(String),
}

pub type Trace<'t> = Option<&'t mut dyn FnMut(String)>;

/// Decides a core formula: every choice point is explored until
/// `max_answers` distinct answers are found or the search space is
/// exhausted.
pub fn sat_rq(
    f: &Formula,
    theory: &dyn Theory,
    limits: Limits,
    opts: &Options,
    trace: Trace<'_>,
) -> Result<(Verdict, SearchStats), SolveError> {
    let query_vars = f.free_vars();
    let Some(root) = State::new(f) else {
        let stats = SearchStats {
            steps: 0,
            cut: 0,
            leaves: 0,
            stop: Stop::Exhausted,
        };
        return Ok((Verdict::Unsat, stats));
    };
    let supply = VarSupply::avoiding(f);
    let mut answers = Answers::new(&query_vars, theory, &supply, opts.max_answers);

    let stats = if opts.parallel && trace.is_none() {
        parallel(root, theory, &supply, limits, &mut answers)?
    } else {
        let engine = Engine::new(theory, supply.clone());
        let mut failure = None;
        let stats = engine.search(vec![root], limits, trace, &mut |leaf| match answers.push(&leaf) {
            Ok(more) => more,
            Err(e) => {
                failure = Some(e);
                false
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        stats
    };

    let verdict = if !answers.list.is_empty() {
        Verdict::Sat(answers.list)
    } else if stats.cut > 0 {
        let why = if stats.stop == Stop::TotalBudget {
            format!("total step budget exhausted after {} steps", stats.steps)
        } else {
            format!("step budget exhausted on {} branch(es)", stats.cut)
        };
        Verdict::Unknown(why)
    } else {
        Verdict::Unsat
    };
    Ok((verdict, stats))
}

fn parallel(
    root: State,
    theory: &dyn Theory,
    supply: &VarSupply,
    limits: Limits,
    answers: &mut Answers<'_>,
) -> Result<SearchStats, SolveError> {
    let engine = Engine::new(theory, supply.clone());
    let want = rayon::current_num_threads() * 4;
    let (early, frontier, steps) = engine.frontier(root, want, limits)?;
    let max = answers.max;
    let results: Vec<Result<(Vec<Leaf>, SearchStats), EngineError>> = frontier
        .into_par_iter()
        .map(|st| {
            let engine = Engine::new(theory, supply.clone());
            let mut got = Vec::new();
            let stats = engine.search(vec![st], limits, None, &mut |leaf| {
                got.push(leaf);
                max.is_none_or(|m| got.len() < m)
            })?;
            Ok((got, stats))
        })
        .collect();
    let mut total = SearchStats {
        steps,
        cut: 0,
        leaves: early.len() as u64,
        stop: Stop::Exhausted,
    };
    let mut more = true;
    for leaf in &early {
        more = more && answers.push(leaf)?;
    }
    for r in results {
        let (leaves, stats) = r?;
        total.steps += stats.steps;
        total.cut += stats.cut;
        total.leaves += stats.leaves;
        if stats.stop == Stop::TotalBudget {
            total.stop = Stop::TotalBudget;
        }
        for leaf in &leaves {
            more = more && answers.push(leaf)?;
        }
    }
    if !more && total.stop == Stop::Exhausted {
        total.stop = Stop::Halted;
    }
    Ok(total)
}

struct Answers<'a> {
    query_vars: &'a BTreeSet<Var>,
    theory: &'a dyn Theory,
    supply: &'a VarSupply,
    max: Option<usize>,
    list: Vec<Answer>,
    seen: BTreeSet<String>,
}

impl<'a> Answers<'a> {
    fn new(query_vars: &'a BTreeSet<Var>, theory: &'a dyn Theory, supply: &'a VarSupply, max: Option<usize>) -> Self {
        Answers {
            query_vars,
            theory,
            supply,
            max,
            list: Vec::new(),
            seen: BTreeSet::new(),
        }
    }

    /// Records a leaf; returns whether more answers are wanted.
    fn push(&mut self, leaf: &Leaf) -> Result<bool, SolveError> {
        if self.max.is_some_and(|m| self.list.len() >= m) {
            return Ok(false);
        }
        let a = answer(leaf, self.query_vars, self.theory, self.supply)?;
        if self.seen.insert(a.to_string()) {
            self.list.push(a);
        }
        Ok(self.max.is_none_or(|m| self.list.len() < m))
    }
}

/// Builds the answer of an irreducible leaf. Set variables without a solved
/// equation denote the empty set, which satisfies every irreducible
/// constraint; element variables take their theory value, or the theory's
/// default when unconstrained.
fn answer(leaf: &Leaf, query_vars: &BTreeSet<Var>, theory: &dyn Theory, supply: &VarSupply) -> Result<Answer, SolveError> {
    let st = &leaf.state;
    let model = &leaf.model;
    let elem_env = |t: &XTerm| -> Valuation {
        t.vars()
            .into_iter()
            .map(|v| {
                let x = model.get(&v).cloned().unwrap_or_else(|| theory.default_value());
                (v, x)
            })
            .collect()
    };
    let elem_value = |t: &XTerm| -> Result<Value, EvalError> {
        let t = st.xsubst.apply_x(t);
        oracle::eval_xterm(&t, &elem_env(&t), theory)
    };

    let mut solved = BTreeMap::new();
    for item in &st.items {
        if let Formula::Atom(Constraint::SetEq(SetTerm::Var(a), t)) = item {
            solved.entry(a.clone()).or_insert_with(|| st.xsubst.apply_set(t, supply));
        }
    }

    let mut valuation = Valuation::new();
    for v in query_vars {
        let value = match v.sort() {
            Sort::X => elem_value(&XTerm::Var(v.clone()))?,
            Sort::Set => match solved.get(v) {
                Some(t) => {
                    let mut env = Valuation::new();
                    for w in t.free_vars() {
                        let x = match w.sort() {
                            Sort::X => elem_value(&XTerm::Var(w.clone()))?,
                            Sort::Set => Value::Set(BTreeSet::new()),
                        };
                        env.insert(w, x);
                    }
                    Value::Set(oracle::eval_set_term(t, &env, theory)?)
                }
                None => Value::Set(BTreeSet::new()),
            },
        };
        valuation.insert(v.clone(), value);
    }

    let bindings = st
        .xsubst
        .iter()
        .filter(|(v, _)| query_vars.contains(*v))
        .filter_map(|(v, t)| match t {
            crate::terms::Term::X(x) => Some((v.clone(), x.clone())),
            crate::terms::Term::Set(_) => None,
        })
        .collect();
    Ok(Answer {
        irreducible: st.set_part(),
        bindings,
        residue: Formula::and_all(st.theory_lits().into_iter().map(Formula::from)),
        theory_model: model.clone(),
        valuation,
    })
}

/// Parses, prepares and solves a program.
pub fn solve_source(src: &str, opts: &Options, trace: Trace<'_>) -> Result<Outcome, SolveError> {
    solve(&syntax::parse_program(src)?, opts, trace)
}

/// Solves the query of a program.
pub fn solve(program: &Program, opts: &Options, trace: Trace<'_>) -> Result<Outcome, SolveError> {
    run(program, false, opts, trace)
}

fn run(program: &Program, negated: bool, opts: &Options, trace: Trace<'_>) -> Result<Outcome, SolveError> {
    let theory = opts.theory.as_ref();
    let prepared = rq::prepare(program, negated, theory)?;
    let limits = opts.limits(prepared.report.verdict);
    let (verdict, stats) = sat_rq(&prepared.core, theory, limits, opts, trace)?;
    Ok(Outcome {
        verdict,
        report: prepared.report,
        core: prepared.core,
        stats,
    })
}

/// Proves the query of a program valid by refuting its negation. A query
/// already of the form `neg(L)` is taken as the negated lemma and solved
/// as written.
pub fn prove(program: &Program, opts: &Options, trace: Trace<'_>) -> Result<(ProveOutcome, Outcome), SolveError> {
    let negated = !matches!(program.query, syntax::SFormula::Neg(_));
    let opts = Options {
        max_answers: Some(1),
        ..opts.clone()
    };
    let outcome = run(program, negated, &opts, trace)?;
    let result = match &outcome.verdict {
        Verdict::Unsat => ProveOutcome::Proved,
        Verdict::Sat(answers) => ProveOutcome::Counterexample(answers[0].clone()),
        Verdict::Unknown(why) => ProveOutcome::Unknown(why.clone()),
    };
    Ok((result, outcome))
}
