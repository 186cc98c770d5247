use std::collections::BTreeMap;

use super::rules::{self, Cx, Effect, Rewrite, FAMILIES};
use super::{EngineError, Rule, State};
use crate::oracle::Value;
use crate::terms::{Formula, Substitution, Term, TheoryLit, Var, VarSupply};
use crate::theory::{Theory, TheoryVerdict};

/// Step budgets. `None` means unlimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Limits {
    /// Rule applications along one path from the root.
    pub branch_steps: Option<u64>,
    /// Rule applications over the whole search.
    pub total_steps: Option<u64>,
}

/// An irreducible state whose element part is satisfiable.
#[derive(Debug, Clone)]
pub struct Leaf {
    pub state: State,
    pub model: BTreeMap<Var, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Every branch was followed to its end or cut by the branch budget.
    Exhausted,
    /// The leaf callback asked to stop.
    Halted,
    /// The total budget ran out.
    TotalBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchStats {
    pub steps: u64,
    /// Branches abandoned because of a budget.
    pub cut: u64,
    pub leaves: u64,
    pub stop: Stop,
}

/// Successor states of one step; `None` marks a false alternative.
pub(crate) type Alts = Vec<Option<State>>;

/// One rule application: the rule, the item it rewrote, and the states it
/// leads to (`None` for alternatives that are false).
pub(crate) struct Applied {
    pub rule: Rule,
    pub line: Option<String>,
    pub alts: Alts,
}

enum Next {
    Branch(Alts),
    Leaf(BTreeMap<Var, Value>),
    Dead,
}

pub struct Engine<'a> {
    theory: &'a dyn Theory,
    supply: VarSupply,
}

impl<'a> Engine<'a> {
    pub fn new(theory: &'a dyn Theory, supply: VarSupply) -> Self {
        Engine { theory, supply }
    }

    pub fn supply(&self) -> &VarSupply {
        &self.supply
    }

    fn cx(&self) -> Cx<'_> {
        Cx {
            theory: self.theory,
            supply: &self.supply,
            occ: Default::default(),
        }
    }

    /// Applies the first applicable rule: families in order, leftmost
    /// constraint within a family.
    pub(crate) fn rewrite(&self, st: &State) -> Result<Option<(Rule, Alts)>, EngineError> {
        Ok(self.apply(st, false)?.map(|a| (a.rule, a.alts)))
    }

    pub(crate) fn apply(&self, st: &State, want_line: bool) -> Result<Option<Applied>, EngineError> {
        let cx = self.cx();
        for fam in 0..FAMILIES {
            for i in 0..st.items.len() {
                if rules::family(&st.items[i]) != Some(fam) {
                    continue;
                }
                if let Some(rw) = rules::apply(st, i, &cx)? {
                    return Ok(Some(self.perform(st, i, rw, want_line)));
                }
            }
        }
        Ok(None)
    }

    fn perform(&self, st: &State, i: usize, rw: Rewrite, want_line: bool) -> Applied {
        let before = &st.items[i];
        let mut next = st.clone();
        next.steps += 1;
        let (alts, result) = match rw.effect {
            Effect::Alts(fs) => {
                let text = if want_line {
                    fs.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" | ")
                } else {
                    String::new()
                };
                let n = fs.len();
                let mut spare = Some(next);
                let alts = fs
                    .into_iter()
                    .enumerate()
                    .map(|(k, f)| {
                        let mut s = if k + 1 == n {
                            spare.take().unwrap()
                        } else {
                            spare.as_ref().unwrap().clone()
                        };
                        s.replace(i, f).then_some(s)
                    })
                    .collect();
                (alts, text)
            }
            Effect::SetSubst(v, t) => {
                let sub = Substitution::singleton(v.clone(), Term::Set(t.clone()));
                for (j, item) in next.items.iter_mut().enumerate() {
                    if j != i && item.occurs(&v) {
                        *item = sub.apply_formula(item, &self.supply);
                    }
                }
                (vec![Some(next)], format!("{before} & {v} := {t}"))
            }
            Effect::XSubst(sub, residue) => {
                let bound: Vec<&Var> = sub.domain().collect();
                for (j, item) in next.items.iter_mut().enumerate() {
                    if j != i && bound.iter().any(|v| item.occurs(v)) {
                        *item = sub.apply_formula(item, &self.supply);
                    }
                }
                let mut text: Vec<String> = Vec::new();
                for (v, t) in sub.iter() {
                    if want_line {
                        text.push(format!("{v} := {t}"));
                    }
                    next.xsubst.bind(v.clone(), t.clone(), &self.supply);
                }
                if want_line && residue != Formula::True {
                    text.push(residue.to_string());
                }
                let ok = next.replace(i, residue);
                let text = if text.is_empty() { "true".into() } else { text.join(", ") };
                (vec![ok.then_some(next)], text)
            }
        };
        Applied {
            rule: rw.rule,
            line: want_line.then(|| format!("{} {} ==> {}", rw.rule, before, result)),
            alts,
        }
    }

    /// Theory literals ready for the theory: those without pairs. A
    /// disequality between a variable and a pair is left out; it holds in
    /// every model because theory values are never pairs.
    fn ready_lits(st: &State) -> Vec<TheoryLit> {
        st.theory_lits()
            .into_iter()
            .filter(|l| !l.args.iter().any(|a| a.contains_pair()))
            .collect()
    }

    fn sat(&self, st: &State) -> Result<Option<BTreeMap<Var, Value>>, EngineError> {
        Ok(match self.theory.sat(&Self::ready_lits(st))? {
            TheoryVerdict::Sat(m) => Some(m),
            TheoryVerdict::Unsat => None,
        })
    }

    /// What to do with a state no rule applies to: split a disjunction
    /// (preferring those with set constraints) or finish with the theory.
    fn settle(&self, st: &State, trace: &mut Option<&mut dyn FnMut(String)>) -> Result<Next, EngineError> {
        let ors: Vec<usize> = (0..st.items.len())
            .filter(|&i| matches!(st.items[i], Formula::Or(..)))
            .collect();
        if ors.is_empty() {
            return Ok(match self.sat(st)? {
                Some(m) => Next::Leaf(m),
                None => Next::Dead,
            });
        }
        if self.sat(st)?.is_none() {
            return Ok(Next::Dead);
        }
        let i = ors
            .iter()
            .copied()
            .find(|&i| has_set_constraint(&st.items[i]))
            .unwrap_or(ors[0]);
        let mut disjuncts = Vec::new();
        flatten_or(&st.items[i], &mut disjuncts);
        if let Some(t) = trace {
            let text = disjuncts.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(" | ");
            t(format!("{} {} ==> {}", Rule::Or, st.items[i], text));
        }
        let mut next = st.clone();
        next.steps += 1;
        Ok(Next::Branch(
            disjuncts
                .into_iter()
                .map(|d| {
                    let mut s = next.clone();
                    s.replace(i, d.clone()).then_some(s)
                })
                .collect(),
        ))
    }

    fn advance(&self, st: &State, trace: &mut Option<&mut dyn FnMut(String)>) -> Result<Next, EngineError> {
        match self.apply(st, trace.is_some())? {
            Some(a) => {
                // Every descendant keeps the current literals (up to
                // instantiation), so an inconsistent state need not branch.
                if a.alts.len() > 1 && self.sat(st)?.is_none() {
                    return Ok(Next::Dead);
                }
                if let (Some(t), Some(line)) = (trace, a.line) {
                    t(line);
                }
                Ok(Next::Branch(a.alts))
            }
            None => self.settle(st, trace),
        }
    }

    /// Depth-first search from `roots`, alternatives left to right. Each
    /// satisfiable irreducible state is passed to `on_leaf`, which returns
    /// whether to continue.
    pub fn search(
        &self,
        roots: Vec<State>,
        limits: Limits,
        mut trace: Option<&mut dyn FnMut(String)>,
        on_leaf: &mut dyn FnMut(Leaf) -> bool,
    ) -> Result<SearchStats, EngineError> {
        let mut stack: Vec<State> = roots.into_iter().rev().collect();
        let mut stats = SearchStats {
            steps: 0,
            cut: 0,
            leaves: 0,
            stop: Stop::Exhausted,
        };
        while let Some(mut st) = stack.pop() {
            loop {
                if limits.branch_steps.is_some_and(|b| st.steps >= b) {
                    stats.cut += 1;
                    break;
                }
                if limits.total_steps.is_some_and(|b| stats.steps >= b) {
                    stats.cut += 1 + stack.len() as u64;
                    stats.stop = Stop::TotalBudget;
                    return Ok(stats);
                }
                match self.advance(&st, &mut trace)? {
                    Next::Dead => break,
                    Next::Leaf(model) => {
                        stats.leaves += 1;
                        if !on_leaf(Leaf { state: st, model }) {
                            stats.stop = Stop::Halted;
                            return Ok(stats);
                        }
                        break;
                    }
                    Next::Branch(alts) => {
                        stats.steps += 1;
                        let mut live: Vec<State> = alts.into_iter().flatten().collect();
                        if live.is_empty() {
                            break;
                        }
                        let first = live.remove(0);
                        stack.extend(live.into_iter().rev());
                        st = first;
                    }
                }
            }
        }
        Ok(stats)
    }

    /// Expands the search breadth-first until at least `want` open states
    /// exist (or none is left), returning leaves met on the way and the
    /// frontier. Used to hand disjoint subtrees to worker threads.
    pub fn frontier(
        &self,
        root: State,
        want: usize,
        limits: Limits,
    ) -> Result<(Vec<Leaf>, Vec<State>, u64), EngineError> {
        let mut queue = std::collections::VecDeque::from([root]);
        let mut leaves = Vec::new();
        let mut steps = 0;
        while queue.len() < want {
            let Some(st) = queue.pop_front() else { break };
            if limits.branch_steps.is_some_and(|b| st.steps >= b) {
                queue.push_front(st);
                break;
            }
            match self.advance(&st, &mut None)? {
                Next::Dead => {}
                Next::Leaf(model) => leaves.push(Leaf { state: st, model }),
                Next::Branch(alts) => {
                    steps += 1;
                    queue.extend(alts.into_iter().flatten());
                }
            }
            if steps > 10_000 {
                break;
            }
        }
        Ok((leaves, queue.into_iter().collect(), steps))
    }
}

fn has_set_constraint(f: &Formula) -> bool {
    match f {
        Formula::Atom(c) => c.is_set_constraint(),
        Formula::And(a, b) | Formula::Or(a, b) => has_set_constraint(a) || has_set_constraint(b),
        _ => false,
    }
}

fn flatten_or<'f>(f: &'f Formula, out: &mut Vec<&'f Formula>) {
    match f {
        Formula::Or(a, b) => {
            flatten_or(a, out);
            flatten_or(b, out);
        }
        other => out.push(other),
    }
}
