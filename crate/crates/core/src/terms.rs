//! Two-sorted terms and formulas.
//!
//! Element terms ([`XTerm`]) belong to the pluggable theory; set terms
//! ([`SetTerm`]) are built from the empty set, extensional cons cells and
//! restricted intensional sets. Everything is immutable once built, and
//! substitution produces new values.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// The two sorts of the language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Set,
    X,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Set => f.write_str("set"),
            Sort::X => f.write_str("isx"),
        }
    }
}

/// A variable. User variables carry their source name; generated ones carry
/// a session-unique id and print as `_N<id>`.
// Equality agrees with the derived order and hash; it only checks the
// cheap fields first.
#[allow(clippy::derived_hash_with_manual_eq, clippy::derive_ord_xor_partial_ord)]
#[derive(Debug, Clone, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    name: Arc<str>,
    fresh: Option<u64>,
    sort: Sort,
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.fresh == other.fresh
            && self.sort == other.sort
            && (Arc::ptr_eq(&self.name, &other.name) || self.name == other.name)
    }
}

/// Identity of a variable regardless of the sort it was used at.
pub type VarKey = (Arc<str>, Option<u64>);

impl Var {
    pub fn user(name: &str, sort: Sort) -> Self {
        Var {
            name: Arc::from(name),
            fresh: None,
            sort,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }

    pub fn fresh_id(&self) -> Option<u64> {
        self.fresh
    }

    pub fn is_fresh(&self) -> bool {
        self.fresh.is_some()
    }

    pub fn key(&self) -> VarKey {
        (self.name.clone(), self.fresh)
    }

    /// Same identity, different sort. Used by sort checking only.
    pub fn with_sort(&self, sort: Sort) -> Self {
        Var {
            sort,
            ..self.clone()
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.fresh {
            Some(id) => write!(f, "_N{id}"),
            None => f.write_str(&self.name),
        }
    }
}

/// Fresh-variable supply. Clones share one atomic counter, so variables
/// issued from any clone are distinct.
#[derive(Debug, Clone, Default)]
pub struct VarSupply {
    next: Arc<AtomicU64>,
}

impl VarSupply {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&self, sort: Sort) -> Var {
        let id = self.next.fetch_add(1, Ordering::Relaxed) + 1;
        Var {
            name: Arc::from("_N"),
            fresh: Some(id),
            sort,
        }
    }

    /// A supply whose variables are distinct from the generated ones
    /// already occurring in `f`.
    pub fn avoiding(f: &Formula) -> Self {
        let mut max = 0;
        let mut see = |v: &Var| max = max.max(v.fresh.unwrap_or(0));
        f.visit_set_vars(&mut see);
        f.visit_xterms(&mut |x| x.vars().iter().for_each(&mut see));
        VarSupply {
            next: Arc::new(AtomicU64::new(max)),
        }
    }

    /// Number of variables issued so far.
    pub fn issued(&self) -> u64 {
        self.next.load(Ordering::Relaxed)
    }
}

/// Element terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum XTerm {
    Var(Var),
    Atom(Arc<str>),
    Int(i64),
    Pair(Box<XTerm>, Box<XTerm>),
    /// Theory function application (`+`, `-`, `*` for arithmetic).
    App(Arc<str>, Vec<XTerm>),
}

impl XTerm {
    pub fn var(v: Var) -> Self {
        debug_assert_eq!(v.sort, Sort::X);
        XTerm::Var(v)
    }

    pub fn atom(name: &str) -> Self {
        XTerm::Atom(Arc::from(name))
    }

    pub fn pair(a: XTerm, b: XTerm) -> Self {
        XTerm::Pair(Box::new(a), Box::new(b))
    }

    pub fn app(f: &str, args: Vec<XTerm>) -> Self {
        XTerm::App(Arc::from(f), args)
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            XTerm::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        match self {
            XTerm::Var(w) => w == v,
            XTerm::Atom(_) | XTerm::Int(_) => false,
            XTerm::Pair(a, b) => a.contains_var(v) || b.contains_var(v),
            XTerm::App(_, args) => args.iter().any(|a| a.contains_var(v)),
        }
    }

    pub fn contains_pair(&self) -> bool {
        match self {
            XTerm::Pair(..) => true,
            XTerm::App(_, args) => args.iter().any(XTerm::contains_pair),
            _ => false,
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            XTerm::Var(_) => false,
            XTerm::Atom(_) | XTerm::Int(_) => true,
            XTerm::Pair(a, b) => a.is_ground() && b.is_ground(),
            XTerm::App(_, args) => args.iter().all(XTerm::is_ground),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            XTerm::Var(v) => {
                out.insert(v.clone());
            }
            XTerm::Atom(_) | XTerm::Int(_) => {}
            XTerm::Pair(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            XTerm::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            XTerm::Atom(a) => {
                out.insert(a.clone());
            }
            XTerm::Var(_) | XTerm::Int(_) => {}
            XTerm::Pair(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            XTerm::App(_, args) => args.iter().for_each(|a| a.collect_atoms(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }
}

/// Control terms of RIS and quantifiers: variables or nested pairs of
/// pairwise-distinct variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CtrlTerm {
    Var(Var),
    Pair(Box<CtrlTerm>, Box<CtrlTerm>),
}

impl CtrlTerm {
    pub fn pair(a: CtrlTerm, b: CtrlTerm) -> Self {
        CtrlTerm::Pair(Box::new(a), Box::new(b))
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.push_vars(&mut out);
        out
    }

    pub fn binds(&self, v: &Var) -> bool {
        match self {
            CtrlTerm::Var(w) => w == v,
            CtrlTerm::Pair(a, b) => a.binds(v) || b.binds(v),
        }
    }

    fn push_vars(&self, out: &mut Vec<Var>) {
        match self {
            CtrlTerm::Var(v) => out.push(v.clone()),
            CtrlTerm::Pair(a, b) => {
                a.push_vars(out);
                b.push_vars(out);
            }
        }
    }

    /// True when no variable occurs twice.
    pub fn is_linear(&self) -> bool {
        let vars = self.vars();
        let keys: BTreeSet<_> = vars.iter().map(Var::key).collect();
        keys.len() == vars.len()
    }

    pub fn to_xterm(&self) -> XTerm {
        match self {
            CtrlTerm::Var(v) => XTerm::Var(v.clone()),
            CtrlTerm::Pair(a, b) => XTerm::pair(a.to_xterm(), b.to_xterm()),
        }
    }

    fn rename(&self, map: &BTreeMap<Var, Var>) -> CtrlTerm {
        match self {
            CtrlTerm::Var(v) => CtrlTerm::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            CtrlTerm::Pair(a, b) => CtrlTerm::pair(a.rename(map), b.rename(map)),
        }
    }
}

/// Body shared by RIS terms and restricted existential quantifiers:
/// `{ctrl : dom | filter}`, optionally extended with existential locals that
/// are the results of the functional predicates in `fpreds`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ris {
    pub ctrl: CtrlTerm,
    pub dom: SetTerm,
    pub locals: Vec<Var>,
    pub filter: Formula,
    pub fpreds: Formula,
}

impl Ris {
    pub fn plain(ctrl: CtrlTerm, dom: SetTerm, filter: Formula) -> Self {
        Ris {
            ctrl,
            dom,
            locals: Vec::new(),
            filter,
            fpreds: Formula::True,
        }
    }

    pub fn is_extended(&self) -> bool {
        !self.locals.is_empty() || self.fpreds != Formula::True
    }

    /// Variables bound by this body: control variables and locals.
    pub fn bound_vars(&self) -> Vec<Var> {
        let mut out = self.ctrl.vars();
        out.extend(self.locals.iter().cloned());
        out
    }

    /// Same body with a different domain.
    pub fn with_dom(&self, dom: SetTerm) -> Ris {
        Ris {
            dom,
            ..self.clone()
        }
    }
}

/// Set terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SetTerm {
    Empty,
    Var(Var),
    Cons(XTerm, Arc<SetTerm>),
    Ris(Box<Ris>),
}

impl SetTerm {
    pub fn var(v: Var) -> Self {
        debug_assert_eq!(v.sort, Sort::Set);
        SetTerm::Var(v)
    }

    pub fn cons(elem: XTerm, rest: SetTerm) -> Self {
        SetTerm::Cons(elem, Arc::new(rest))
    }

    /// `{e1, ..., en / tail}`.
    pub fn ext(elems: impl IntoIterator<Item = XTerm>, tail: SetTerm) -> Self {
        let elems: Vec<_> = elems.into_iter().collect();
        elems
            .into_iter()
            .rev()
            .fold(tail, |acc, e| SetTerm::cons(e, acc))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            SetTerm::Var(v) => Some(v),
            _ => None,
        }
    }

    /// Splits an extensional chain into its elements and its tail.
    pub fn split_ext(&self) -> (Vec<&XTerm>, &SetTerm) {
        let mut elems = Vec::new();
        let mut cur = self;
        while let SetTerm::Cons(e, rest) = cur {
            elems.push(e);
            cur = rest;
        }
        (elems, cur)
    }

    /// The terminal variable of an extensional chain (or the variable itself).
    /// The term after all leading elements.
    pub fn tail(&self) -> &SetTerm {
        let mut cur = self;
        while let SetTerm::Cons(_, rest) = cur {
            cur = rest;
        }
        cur
    }

    pub fn tail_var(&self) -> Option<&Var> {
        match self.tail() {
            SetTerm::Var(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_ext(&self) -> bool {
        !matches!(self.tail(), SetTerm::Ris(_))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>) {
        match self {
            SetTerm::Empty => {}
            SetTerm::Var(v) => {
                out.insert(v.clone());
            }
            SetTerm::Cons(e, rest) => {
                e.collect_vars(out);
                rest.collect_free(out);
            }
            SetTerm::Ris(r) => r.collect_free(out),
        }
    }

    pub fn occurs(&self, v: &Var) -> bool {
        match self {
            SetTerm::Empty => false,
            SetTerm::Var(w) => w == v,
            SetTerm::Cons(e, rest) => e.contains_var(v) || rest.occurs(v),
            SetTerm::Ris(r) => r.occurs_free(v),
        }
    }
}

/// Calls `f` on every occurrence of a set variable. Set variables are never
/// bound by a RIS, so no scoping is needed.
fn visit_set_vars(s: &SetTerm, f: &mut dyn FnMut(&Var)) {
    match s {
        SetTerm::Empty => {}
        SetTerm::Var(v) => f(v),
        SetTerm::Cons(_, rest) => visit_set_vars(rest, f),
        SetTerm::Ris(r) => {
            visit_set_vars(&r.dom, f);
            r.filter.visit_set_vars(f);
            r.fpreds.visit_set_vars(f);
        }
    }
}

impl Formula {
    pub fn visit_set_vars(&self, f: &mut dyn FnMut(&Var)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.visit_set_vars(f);
                b.visit_set_vars(f);
            }
            Formula::Atom(c) => match c {
                Constraint::SetEq(a, b) | Constraint::Subset(a, b) => {
                    visit_set_vars(a, f);
                    visit_set_vars(b, f);
                }
                Constraint::In(_, s) | Constraint::NotIn(_, s) => visit_set_vars(s, f),
                Constraint::Exists(r) => {
                    visit_set_vars(&r.dom, f);
                    r.filter.visit_set_vars(f);
                    r.fpreds.visit_set_vars(f);
                }
                Constraint::IsSet(Term::Set(s)) | Constraint::IsX(Term::Set(s)) => visit_set_vars(s, f),
                Constraint::IsSet(Term::X(_)) | Constraint::IsX(Term::X(_)) | Constraint::Theory(_) => {}
            },
        }
    }
}

impl Ris {
    fn collect_free(&self, out: &mut BTreeSet<Var>) {
        self.dom.collect_free(out);
        let mut inner = BTreeSet::new();
        self.filter.collect_free(&mut inner);
        self.fpreds.collect_free(&mut inner);
        let bound = self.bound_vars();
        out.extend(inner.into_iter().filter(|v| !bound.contains(v)));
    }

    fn occurs_free(&self, v: &Var) -> bool {
        if self.dom.occurs(v) {
            return true;
        }
        if self.ctrl.binds(v) || self.locals.contains(v) {
            return false;
        }
        self.filter.occurs(v) || self.fpreds.occurs(v)
    }
}

/// True iff `t` is an extensional chain (possibly with zero elements) whose
/// terminal variable is `v`.
pub fn occurs_in_tail(v: &Var, t: &SetTerm) -> bool {
    t.tail_var() == Some(v)
}

/// Either-sorted term, used where a position accepts both.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    X(XTerm),
    Set(SetTerm),
}

impl Term {
    pub fn sort(&self) -> Sort {
        match self {
            Term::X(_) => Sort::X,
            Term::Set(_) => Sort::Set,
        }
    }
}

/// Literal of the element theory: a predicate symbol applied to element terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TheoryLit {
    pub pred: Arc<str>,
    pub args: Vec<XTerm>,
}

impl TheoryLit {
    pub fn new(pred: &str, args: Vec<XTerm>) -> Self {
        TheoryLit {
            pred: Arc::from(pred),
            args,
        }
    }

    pub fn eq(a: XTerm, b: XTerm) -> Self {
        Self::new("=", vec![a, b])
    }

    pub fn neq(a: XTerm, b: XTerm) -> Self {
        Self::new("neq", vec![a, b])
    }

    pub fn is_binary_rel(&self) -> bool {
        self.args.len() == 2 && is_relation_symbol(&self.pred)
    }
}

/// The relation symbols written infix in the surface syntax.
pub fn is_relation_symbol(s: &str) -> bool {
    matches!(s, "=" | "neq" | "=<" | "<" | ">=" | ">")
}

/// Atomic constraints.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    SetEq(SetTerm, SetTerm),
    In(XTerm, SetTerm),
    NotIn(XTerm, SetTerm),
    /// `A ⊆ {ctrl : A | filter}`: a restricted universal quantifier.
    Subset(SetTerm, SetTerm),
    /// Restricted existential quantifier, eliminated on sight by the engine.
    Exists(Box<Ris>),
    IsSet(Term),
    IsX(Term),
    Theory(TheoryLit),
}

impl Constraint {
    /// Builds the RUQ `foreach(ctrl in dom, filter)` as a subset constraint.
    pub fn foreach(ris: Ris) -> Self {
        Constraint::Subset(ris.dom.clone(), SetTerm::Ris(Box::new(ris)))
    }

    pub fn exists(ris: Ris) -> Self {
        Constraint::Exists(Box::new(ris))
    }

    /// The RIS of a RUQ-shaped subset constraint.
    pub fn ruq(&self) -> Option<&Ris> {
        match self {
            Constraint::Subset(_, SetTerm::Ris(r)) => Some(r),
            _ => None,
        }
    }

    pub fn is_set_constraint(&self) -> bool {
        matches!(
            self,
            Constraint::SetEq(..)
                | Constraint::In(..)
                | Constraint::NotIn(..)
                | Constraint::Subset(..)
                | Constraint::Exists(..)
        )
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>) {
        match self {
            Constraint::SetEq(a, b) | Constraint::Subset(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            Constraint::In(x, s) | Constraint::NotIn(x, s) => {
                x.collect_vars(out);
                s.collect_free(out);
            }
            Constraint::Exists(r) => r.collect_free(out),
            Constraint::IsSet(t) | Constraint::IsX(t) => match t {
                Term::X(x) => x.collect_vars(out),
                Term::Set(s) => s.collect_free(out),
            },
            Constraint::Theory(l) => l.args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn occurs(&self, v: &Var) -> bool {
        match self {
            Constraint::SetEq(a, b) | Constraint::Subset(a, b) => a.occurs(v) || b.occurs(v),
            Constraint::In(x, s) | Constraint::NotIn(x, s) => x.contains_var(v) || s.occurs(v),
            Constraint::Exists(r) => r.occurs_free(v),
            Constraint::IsSet(t) | Constraint::IsX(t) => match t {
                Term::X(x) => x.contains_var(v),
                Term::Set(s) => s.occurs(v),
            },
            Constraint::Theory(l) => l.args.iter().any(|a| a.contains_var(v)),
        }
    }
}

/// Negation-free formulas: conjunction/disjunction trees over constraints.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(Constraint),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

impl From<Constraint> for Formula {
    fn from(c: Constraint) -> Self {
        Formula::Atom(c)
    }
}

impl From<TheoryLit> for Formula {
    fn from(l: TheoryLit) -> Self {
        Formula::Atom(Constraint::Theory(l))
    }
}

impl Formula {
    pub fn and(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::True, f) | (f, Formula::True) => f,
            (Formula::False, _) | (_, Formula::False) => Formula::False,
            (a, b) => Formula::And(Box::new(a), Box::new(b)),
        }
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        match (a, b) {
            (Formula::False, f) | (f, Formula::False) => f,
            (Formula::True, _) | (_, Formula::True) => Formula::True,
            (a, b) => Formula::Or(Box::new(a), Box::new(b)),
        }
    }

    /// Right-nested conjunction; `True` when empty.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        let items: Vec<_> = items.into_iter().collect();
        items
            .into_iter()
            .rev()
            .fold(None, |acc: Option<Formula>, f| {
                Some(match acc {
                    None => f,
                    Some(rest) => Formula::and(f, rest),
                })
            })
            .unwrap_or(Formula::True)
    }

    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        let items: Vec<_> = items.into_iter().collect();
        items
            .into_iter()
            .rev()
            .fold(None, |acc: Option<Formula>, f| {
                Some(match acc {
                    None => f,
                    Some(rest) => Formula::or(f, rest),
                })
            })
            .unwrap_or(Formula::False)
    }

    /// Flattens nested conjunctions (disjunctions stay as single items).
    pub fn conjuncts(&self) -> Vec<&Formula> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(f) = stack.pop() {
            match f {
                Formula::And(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                Formula::True => {}
                other => out.push(other),
            }
        }
        out
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<Var>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(c) => c.collect_free(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
        }
    }

    pub fn occurs(&self, v: &Var) -> bool {
        match self {
            Formula::True | Formula::False => false,
            Formula::Atom(c) => c.occurs(v),
            Formula::And(a, b) | Formula::Or(a, b) => a.occurs(v) || b.occurs(v),
        }
    }

    /// All atom symbols occurring anywhere, including inside RIS bodies.
    pub fn atoms(&self) -> BTreeSet<Arc<str>> {
        let mut out = BTreeSet::new();
        self.visit_xterms(&mut |x| x.collect_atoms(&mut out));
        out
    }

    /// Visits every element term, descending into RIS bodies.
    pub fn visit_xterms(&self, f: &mut dyn FnMut(&XTerm)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(c) => visit_constraint_xterms(c, f),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.visit_xterms(f);
                b.visit_xterms(f);
            }
        }
    }
}

fn visit_set_xterms(s: &SetTerm, f: &mut dyn FnMut(&XTerm)) {
    match s {
        SetTerm::Empty | SetTerm::Var(_) => {}
        SetTerm::Cons(e, rest) => {
            f(e);
            visit_set_xterms(rest, f);
        }
        SetTerm::Ris(r) => visit_ris_xterms(r, f),
    }
}

fn visit_ris_xterms(r: &Ris, f: &mut dyn FnMut(&XTerm)) {
    visit_set_xterms(&r.dom, f);
    r.filter.visit_xterms(f);
    r.fpreds.visit_xterms(f);
}

fn visit_constraint_xterms(c: &Constraint, f: &mut dyn FnMut(&XTerm)) {
    match c {
        Constraint::SetEq(a, b) | Constraint::Subset(a, b) => {
            visit_set_xterms(a, f);
            visit_set_xterms(b, f);
        }
        Constraint::In(x, s) | Constraint::NotIn(x, s) => {
            f(x);
            visit_set_xterms(s, f);
        }
        Constraint::Exists(r) => visit_ris_xterms(r, f),
        Constraint::IsSet(t) | Constraint::IsX(t) => match t {
            Term::X(x) => f(x),
            Term::Set(s) => visit_set_xterms(s, f),
        },
        Constraint::Theory(l) => l.args.iter().for_each(f),
    }
}

/// A sort-respecting, idempotent substitution.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<Var, Term>,
    range_vars: BTreeSet<Var>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(v: Var, t: Term) -> Self {
        let mut s = Self::new();
        s.insert_raw(v, t);
        s
    }

    /// Bindings applied in parallel, without composing them with each other.
    /// Used to instantiate binders, where the range may mention the names
    /// being replaced.
    pub fn simultaneous(pairs: impl IntoIterator<Item = (Var, Term)>) -> Self {
        let mut s = Self::new();
        for (v, t) in pairs {
            s.insert_raw(v, t);
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, v: &Var) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.map.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Var> {
        self.map.keys()
    }

    fn insert_raw(&mut self, v: Var, t: Term) {
        debug_assert_eq!(v.sort, t.sort(), "substitution must respect sorts");
        match &t {
            Term::X(x) => x.collect_vars(&mut self.range_vars),
            Term::Set(s) => s.collect_free(&mut self.range_vars),
        }
        self.map.insert(v, t);
    }

    fn rebuild_range(&mut self) {
        self.range_vars.clear();
        for t in self.map.values() {
            match t {
                Term::X(x) => x.collect_vars(&mut self.range_vars),
                Term::Set(s) => s.collect_free(&mut self.range_vars),
            }
        }
    }

    /// Adds `v ↦ t`, composing with existing bindings so the result stays
    /// idempotent. `t` must not mention `v` or any variable already bound.
    pub fn bind(&mut self, v: Var, t: Term, supply: &VarSupply) {
        let t = self.apply_term(&t, supply);
        let single = Substitution::singleton(v.clone(), t.clone());
        let updated: Vec<(Var, Term)> = self
            .map
            .iter()
            .map(|(k, old)| (k.clone(), single.apply_term(old, supply)))
            .collect();
        self.map = updated.into_iter().collect();
        self.map.insert(v, t);
        self.rebuild_range();
    }

    pub fn apply_term(&self, t: &Term, supply: &VarSupply) -> Term {
        match t {
            Term::X(x) => Term::X(self.apply_x(x)),
            Term::Set(s) => Term::Set(self.apply_set(s, supply)),
        }
    }

    pub fn apply_x(&self, t: &XTerm) -> XTerm {
        if self.map.is_empty() {
            return t.clone();
        }
        match t {
            XTerm::Var(v) => match self.map.get(v) {
                Some(Term::X(x)) => x.clone(),
                _ => t.clone(),
            },
            XTerm::Atom(_) | XTerm::Int(_) => t.clone(),
            XTerm::Pair(a, b) => XTerm::pair(self.apply_x(a), self.apply_x(b)),
            XTerm::App(f, args) => {
                XTerm::App(f.clone(), args.iter().map(|a| self.apply_x(a)).collect())
            }
        }
    }

    pub fn apply_set(&self, t: &SetTerm, supply: &VarSupply) -> SetTerm {
        if self.map.is_empty() {
            return t.clone();
        }
        match t {
            SetTerm::Empty => SetTerm::Empty,
            SetTerm::Var(v) => match self.map.get(v) {
                Some(Term::Set(s)) => s.clone(),
                _ => t.clone(),
            },
            SetTerm::Cons(e, rest) => SetTerm::cons(self.apply_x(e), self.apply_set(rest, supply)),
            SetTerm::Ris(r) => SetTerm::Ris(Box::new(self.apply_ris(r, supply))),
        }
    }

    /// Applies under a binder. Bound variables are never substituted; if one
    /// of them would capture a variable from the range, it is renamed fresh.
    pub fn apply_ris(&self, r: &Ris, supply: &VarSupply) -> Ris {
        let dom = self.apply_set(&r.dom, supply);
        let bound = r.bound_vars();
        let mut inner = self.clone();
        let mut shadowed = false;
        for b in &bound {
            if inner.map.remove(b).is_some() {
                shadowed = true;
            }
        }
        if shadowed {
            inner.rebuild_range();
        }
        let captured: Vec<&Var> = bound.iter().filter(|b| inner.range_vars.contains(b)).collect();
        if captured.is_empty() {
            return Ris {
                ctrl: r.ctrl.clone(),
                dom,
                locals: r.locals.clone(),
                filter: inner.apply_formula(&r.filter, supply),
                fpreds: inner.apply_formula(&r.fpreds, supply),
            };
        }
        let renaming: BTreeMap<Var, Var> = captured
            .into_iter()
            .map(|b| (b.clone(), supply.fresh(b.sort)))
            .collect();
        for (old, new) in &renaming {
            let term = match new.sort {
                Sort::X => Term::X(XTerm::Var(new.clone())),
                Sort::Set => Term::Set(SetTerm::Var(new.clone())),
            };
            inner.insert_raw(old.clone(), term);
        }
        Ris {
            ctrl: r.ctrl.rename(&renaming),
            dom,
            locals: r
                .locals
                .iter()
                .map(|l| renaming.get(l).cloned().unwrap_or_else(|| l.clone()))
                .collect(),
            filter: inner.apply_formula(&r.filter, supply),
            fpreds: inner.apply_formula(&r.fpreds, supply),
        }
    }

    pub fn apply_lit(&self, l: &TheoryLit) -> TheoryLit {
        TheoryLit {
            pred: l.pred.clone(),
            args: l.args.iter().map(|a| self.apply_x(a)).collect(),
        }
    }

    pub fn apply_constraint(&self, c: &Constraint, supply: &VarSupply) -> Constraint {
        if self.map.is_empty() {
            return c.clone();
        }
        match c {
            Constraint::SetEq(a, b) => {
                Constraint::SetEq(self.apply_set(a, supply), self.apply_set(b, supply))
            }
            Constraint::Subset(a, b) => {
                Constraint::Subset(self.apply_set(a, supply), self.apply_set(b, supply))
            }
            Constraint::In(x, s) => Constraint::In(self.apply_x(x), self.apply_set(s, supply)),
            Constraint::NotIn(x, s) => {
                Constraint::NotIn(self.apply_x(x), self.apply_set(s, supply))
            }
            Constraint::Exists(r) => Constraint::Exists(Box::new(self.apply_ris(r, supply))),
            Constraint::IsSet(t) => Constraint::IsSet(self.apply_term(t, supply)),
            Constraint::IsX(t) => Constraint::IsX(self.apply_term(t, supply)),
            Constraint::Theory(l) => Constraint::Theory(self.apply_lit(l)),
        }
    }

    pub fn apply_formula(&self, f: &Formula, supply: &VarSupply) -> Formula {
        if self.map.is_empty() {
            return f.clone();
        }
        match f {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Atom(c) => Formula::Atom(self.apply_constraint(c, supply)),
            Formula::And(a, b) => Formula::And(
                Box::new(self.apply_formula(a, supply)),
                Box::new(self.apply_formula(b, supply)),
            ),
            Formula::Or(a, b) => Formula::Or(
                Box::new(self.apply_formula(a, supply)),
                Box::new(self.apply_formula(b, supply)),
            ),
        }
    }
}

// ---------------------------------------------------------------------------
// Display: surface-like concrete syntax.

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    for (i, it) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{it}")?;
    }
    Ok(())
}

impl fmt::Display for XTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XTerm::Var(v) => write!(f, "{v}"),
            XTerm::Atom(a) => f.write_str(a),
            XTerm::Int(i) => write!(f, "{i}"),
            XTerm::Pair(a, b) => write!(f, "[{a},{b}]"),
            XTerm::App(op, args) if args.len() == 2 && matches!(&**op, "+" | "-" | "*") => {
                write!(f, "({} {op} {})", args[0], args[1])
            }
            XTerm::App(op, args) => {
                write!(f, "{op}(")?;
                write_list(f, args)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for CtrlTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CtrlTerm::Var(v) => write!(f, "{v}"),
            CtrlTerm::Pair(a, b) => write!(f, "[{a},{b}]"),
        }
    }
}

impl fmt::Display for SetTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetTerm::Empty => f.write_str("{}"),
            SetTerm::Var(v) => write!(f, "{v}"),
            SetTerm::Ris(r) => {
                write!(f, "{{{} : {} | ", r.ctrl, r.dom)?;
                if r.is_extended() {
                    f.write_str("[")?;
                    write_list(f, &r.locals)?;
                    write!(f, "], {}, {}}}", r.filter, r.fpreds)
                } else {
                    write!(f, "{}}}", r.filter)
                }
            }
            SetTerm::Cons(..) => {
                let (elems, tail) = self.split_ext();
                f.write_str("{")?;
                write_list(f, &elems)?;
                match tail {
                    SetTerm::Empty => f.write_str("}"),
                    t => write!(f, " / {t}}}"),
                }
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::X(x) => write!(f, "{x}"),
            Term::Set(s) => write!(f, "{s}"),
        }
    }
}

impl fmt::Display for TheoryLit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_binary_rel() {
            write!(f, "{} {} {}", self.args[0], self.pred, self.args[1])
        } else {
            write!(f, "{}(", self.pred)?;
            write_list(f, &self.args)?;
            f.write_str(")")
        }
    }
}

fn write_quant(f: &mut fmt::Formatter<'_>, kw: &str, r: &Ris) -> fmt::Result {
    write!(f, "{kw}({} in {}, ", r.ctrl, r.dom)?;
    if r.is_extended() {
        f.write_str("[")?;
        write_list(f, &r.locals)?;
        write!(f, "], {}, {})", r.filter, r.fpreds)
    } else {
        write!(f, "{})", r.filter)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::SetEq(a, b) => write!(f, "{a} = {b}"),
            Constraint::In(x, s) => write!(f, "{x} in {s}"),
            Constraint::NotIn(x, s) => write!(f, "{x} nin {s}"),
            Constraint::Subset(a, b) => match b {
                SetTerm::Ris(r) if r.dom == *a => write_quant(f, "foreach", r),
                _ => write!(f, "subset({a}, {b})"),
            },
            Constraint::Exists(r) => write_quant(f, "exists", r),
            Constraint::IsSet(t) => write!(f, "set({t})"),
            Constraint::IsX(t) => write!(f, "isx({t})"),
            Constraint::Theory(l) => write!(f, "{l}"),
        }
    }
}

impl Formula {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(c) => write!(f, "{c}"),
            Formula::Or(a, b) => {
                if prec > 1 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 2)?;
                f.write_str(" or ")?;
                b.fmt_prec(f, 1)?;
                if prec > 1 {
                    f.write_str(")")?;
                }
                Ok(())
            }
            Formula::And(a, b) => {
                if prec > 2 {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 3)?;
                f.write_str(" & ")?;
                b.fmt_prec(f, 2)?;
                if prec > 2 {
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(n: &str) -> Var {
        Var::user(n, Sort::Set)
    }
    fn xv(n: &str) -> Var {
        Var::user(n, Sort::X)
    }

    #[test]
    fn fresh_vars_are_distinct_and_sorted() {
        let supply = VarSupply::new();
        let a = supply.fresh(Sort::Set);
        let b = supply.fresh(Sort::Set);
        assert_ne!(a, b);
        assert_eq!(supply.fresh(Sort::X).sort(), Sort::X);
        let many: BTreeSet<_> = (0..1000).map(|_| supply.fresh(Sort::X).key()).collect();
        assert_eq!(many.len(), 1000);
        assert!(!many.contains(&xv("N").key()));
    }

    #[test]
    fn clones_share_the_counter() {
        let s1 = VarSupply::new();
        let s2 = s1.clone();
        let a = s1.fresh(Sort::X);
        let b = s2.fresh(Sort::X);
        assert_ne!(a.key(), b.key());
    }

    #[test]
    fn substitutes_set_variable() {
        let supply = VarSupply::new();
        let s = Substitution::singleton(sv("A"), Term::Set(SetTerm::Empty));
        let c = Constraint::In(XTerm::Var(xv("x")), SetTerm::Var(sv("A")));
        assert_eq!(
            s.apply_constraint(&c, &supply),
            Constraint::In(XTerm::Var(xv("x")), SetTerm::Empty)
        );
    }

    #[test]
    fn substitutes_into_ruq_domain() {
        let supply = VarSupply::new();
        let x = xv("x");
        let filter: Formula = TheoryLit::new("=<", vec![XTerm::Var(xv("m")), XTerm::Var(x.clone())]).into();
        let ruq = Constraint::foreach(Ris::plain(CtrlTerm::Var(x), SetTerm::Var(sv("A")), filter));
        let dom = SetTerm::cons(XTerm::atom("b"), SetTerm::Var(sv("B")));
        let s = Substitution::singleton(sv("A"), Term::Set(dom.clone()));
        let out = s.apply_constraint(&ruq, &supply);
        let Constraint::Subset(lhs, rhs) = &out else { panic!() };
        assert_eq!(lhs, &dom);
        assert_eq!(rhs, &SetTerm::Ris(Box::new(out.ruq().unwrap().clone())));
        assert_eq!(out.ruq().unwrap().dom, dom);
    }

    #[test]
    fn bound_variables_are_opaque() {
        let supply = VarSupply::new();
        let x = xv("x");
        let filter: Formula = TheoryLit::eq(XTerm::Var(x.clone()), XTerm::atom("a")).into();
        let ris = SetTerm::Ris(Box::new(Ris::plain(CtrlTerm::Var(x.clone()), SetTerm::Var(sv("D")), filter)));
        let s = Substitution::singleton(x, Term::X(XTerm::Var(xv("y"))));
        assert_eq!(s.apply_set(&ris, &supply), ris);
    }

    #[test]
    fn capture_is_avoided_by_renaming() {
        let supply = VarSupply::new();
        let x = xv("x");
        let z = xv("z");
        // {x : D | x = z} with z ↦ x must not capture.
        let filter: Formula = TheoryLit::eq(XTerm::Var(x.clone()), XTerm::Var(z.clone())).into();
        let ris = Ris::plain(CtrlTerm::Var(x.clone()), SetTerm::Var(sv("D")), filter);
        let s = Substitution::singleton(z, Term::X(XTerm::Var(x.clone())));
        let out = s.apply_ris(&ris, &supply);
        let CtrlTerm::Var(new_ctrl) = &out.ctrl else { panic!() };
        assert!(new_ctrl.is_fresh());
        assert_eq!(
            out.filter,
            TheoryLit::eq(XTerm::Var(new_ctrl.clone()), XTerm::Var(x.clone())).into()
        );
        assert!(out.filter.free_vars().contains(&x));
    }

    #[test]
    fn bind_keeps_substitution_idempotent() {
        let supply = VarSupply::new();
        let mut s = Substitution::new();
        s.bind(sv("A"), Term::Set(SetTerm::cons(XTerm::atom("a"), SetTerm::Var(sv("B")))), &supply);
        s.bind(sv("B"), Term::Set(SetTerm::Var(sv("C"))), &supply);
        let t = SetTerm::Var(sv("A"));
        let once = s.apply_set(&t, &supply);
        assert_eq!(once, SetTerm::cons(XTerm::atom("a"), SetTerm::Var(sv("C"))));
        assert_eq!(s.apply_set(&once, &supply), once);
    }

    #[test]
    fn tail_occurrence() {
        let a = sv("A");
        let t = SetTerm::ext([XTerm::atom("a"), XTerm::atom("b")], SetTerm::Var(a.clone()));
        assert!(occurs_in_tail(&a, &t));
        assert!(!occurs_in_tail(&a, &SetTerm::cons(XTerm::atom("a"), SetTerm::Var(sv("B")))));
        assert!(!occurs_in_tail(&a, &SetTerm::Empty));
    }

    #[test]
    fn display_uses_concrete_syntax() {
        let t = SetTerm::ext([XTerm::Int(1), XTerm::Int(2)], SetTerm::Var(sv("A")));
        assert_eq!(t.to_string(), "{1,2 / A}");
        assert_eq!(SetTerm::Empty.to_string(), "{}");
        let f = Formula::and(
            Formula::or(
                TheoryLit::eq(XTerm::Int(1), XTerm::Int(2)).into(),
                TheoryLit::eq(XTerm::Int(1), XTerm::Int(1)).into(),
            ),
            Formula::True.clone(),
        );
        assert_eq!(f.to_string(), "1 = 2 or 1 = 1");
    }
}
