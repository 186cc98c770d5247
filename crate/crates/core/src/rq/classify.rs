use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::SortMap;
use crate::syntax::{QKind, Rel, SFormula, STerm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum QSym {
    Forall,
    Exists,
}

impl fmt::Display for QSym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QSym::Forall => "forall",
            QSym::Exists => "exists",
        })
    }
}

/// A quantifier with a variable domain: `((i,j),(Q,D))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    /// Index of the conjunct among the quantified conjuncts of its branch.
    pub i: usize,
    /// Pre-order position of the quantifier inside its conjunct.
    pub j: usize,
    pub kind: QSym,
    /// Domain variable as written.
    pub domain: String,
    /// `j` of the enclosing quantifiers.
    pub ancestors: Vec<usize>,
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(({},{}),({},{}))", self.i, self.j, self.kind, self.domain)
    }
}

/// Decidable fragments, from most to least specific.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FragmentVerdict {
    PhiForall,
    PhiExists,
    PhiExistsForall,
    /// Mixed nesting without any forall-exists loop.
    PhiForallExists,
    Outside,
}

impl FragmentVerdict {
    fn rank(self) -> u8 {
        match self {
            FragmentVerdict::PhiForall | FragmentVerdict::PhiExists => 1,
            FragmentVerdict::PhiExistsForall => 2,
            FragmentVerdict::PhiForallExists => 3,
            FragmentVerdict::Outside => 4,
        }
    }

    /// Fragment containing both arguments.
    pub fn join(self, other: FragmentVerdict) -> FragmentVerdict {
        use FragmentVerdict::*;
        match (self, other) {
            (PhiForall, PhiExists) | (PhiExists, PhiForall) => PhiExistsForall,
            _ if other.rank() > self.rank() => other,
            _ => self,
        }
    }

    pub fn is_decidable(self) -> bool {
        self != FragmentVerdict::Outside
    }

    pub fn name(self) -> &'static str {
        match self {
            FragmentVerdict::PhiForall => "PhiForall",
            FragmentVerdict::PhiExists => "PhiExists",
            FragmentVerdict::PhiExistsForall => "PhiExistsForall",
            FragmentVerdict::PhiForallExists => "PhiForallExists",
            FragmentVerdict::Outside => "Outside",
        }
    }
}

impl fmt::Display for FragmentVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Domain graph of one disjunctive branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchReport {
    pub verdict: FragmentVerdict,
    pub nodes: Vec<Node>,
    /// Indices into `nodes`.
    pub edges: Vec<(usize, usize)>,
    /// A forall-exists loop, as indices into `nodes`.
    pub witness: Option<Vec<usize>>,
}

impl BranchReport {
    pub fn witness_text(&self) -> Option<String> {
        self.witness.as_ref().map(|w| {
            w.iter()
                .map(|&n| self.nodes[n].to_string())
                .collect::<Vec<_>>()
                .join(" -> ")
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentReport {
    pub verdict: FragmentVerdict,
    pub branches: Vec<BranchReport>,
    pub warnings: Vec<String>,
}

impl FragmentReport {
    /// The first branch with the overall verdict.
    pub fn deciding_branch(&self) -> Option<&BranchReport> {
        self.branches.iter().find(|b| b.verdict == self.verdict)
    }

    pub fn witness_text(&self) -> Option<String> {
        self.branches.iter().find_map(BranchReport::witness_text)
    }
}

impl fmt::Display for FragmentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fragment: {}", self.verdict)?;
        let many = self.branches.len() > 1;
        for (k, b) in self.branches.iter().enumerate() {
            let pad = if many {
                writeln!(f, "branch {}: {}", k + 1, b.verdict)?;
                "  "
            } else {
                ""
            };
            writeln!(f, "{pad}domain function:")?;
            for n in &b.nodes {
                writeln!(f, "{pad}  {n}")?;
            }
            writeln!(f, "{pad}domain graph:")?;
            for &(a, c) in &b.edges {
                writeln!(f, "{pad}  {} -> {}", b.nodes[a], b.nodes[c])?;
            }
            if let Some(w) = b.witness_text() {
                writeln!(f, "{pad}loop: {w}")?;
            }
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

/// Classifies a negation-free surface formula. Each branch of the
/// disjunctive normal form of its top-level structure is classified on its
/// own and the weakest verdict is reported.
pub fn classify(f: &SFormula, sorts: &SortMap) -> FragmentReport {
    let mut warnings = Vec::new();
    let mut branches = Vec::new();
    for conj in dnf(f) {
        branches.push(branch(&conj, sorts, &mut warnings));
    }
    let verdict = branches
        .iter()
        .map(|b| b.verdict)
        .reduce(FragmentVerdict::join)
        .unwrap_or(FragmentVerdict::PhiForall);
    FragmentReport {
        verdict,
        branches,
        warnings,
    }
}

/// Top-level disjunctive normal form; quantifier filters are left intact.
fn dnf(f: &SFormula) -> Vec<Vec<&SFormula>> {
    match f {
        SFormula::Or(a, b) => {
            let mut out = dnf(a);
            out.extend(dnf(b));
            out
        }
        SFormula::And(a, b) => {
            let (l, r) = (dnf(a), dnf(b));
            let mut out = Vec::with_capacity(l.len() * r.len());
            for x in &l {
                for y in &r {
                    out.push(x.iter().chain(y).copied().collect());
                }
            }
            out
        }
        _ => vec![vec![f]],
    }
}

/// Union-find on set variable names, for equalities that alias domains.
#[derive(Default)]
struct Aliases(HashMap<String, String>);

impl Aliases {
    fn find(&self, v: &str) -> String {
        let mut cur = v.to_string();
        while let Some(p) = self.0.get(&cur) {
            cur = p.clone();
        }
        cur
    }

    fn union(&mut self, a: &str, b: &str) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0.insert(ra, rb);
        }
    }
}

fn domain_var(t: &STerm) -> Option<&str> {
    match t {
        STerm::Var(v, _) => Some(v),
        STerm::Set(_, Some(tail)) => domain_var(tail),
        _ => None,
    }
}

struct Walker<'a> {
    i: usize,
    next_j: usize,
    nodes: Vec<Node>,
    /// Every quantifier: (j, kind, enclosing j's).
    quants: Vec<(usize, QSym, Vec<usize>)>,
    warnings: &'a mut Vec<String>,
}

impl Walker<'_> {
    fn quant(&mut self, kind: QSym, dom: &STerm, scope: &mut Vec<(usize, Vec<String>)>, bound: Vec<String>) {
        self.next_j += 1;
        let j = self.next_j;
        let ancestors: Vec<usize> = scope.iter().map(|s| s.0).collect();
        if let Some(d) = domain_var(dom) {
            if scope.iter().any(|(_, vs)| vs.iter().any(|v| v == d)) {
                let msg = format!(
                    "domain `{d}` of quantifier ({},{}) is a quantified variable; termination is not guaranteed",
                    self.i, j
                );
                if !self.warnings.contains(&msg) {
                    self.warnings.push(msg);
                }
            }
            self.nodes.push(Node {
                i: self.i,
                j,
                kind,
                domain: d.to_string(),
                ancestors: ancestors.clone(),
            });
        }
        self.quants.push((j, kind, ancestors));
        scope.push((j, bound));
    }

    fn walk(&mut self, f: &SFormula, scope: &mut Vec<(usize, Vec<String>)>) {
        match f {
            SFormula::Subset(_, ris) => {
                self.quant(QSym::Forall, &ris.dom, scope, ris.ctrl.vars());
                self.walk(&ris.filter, scope);
                scope.pop();
            }
            SFormula::Quant(q) => {
                let kind = match q.kind {
                    QKind::Forall => QSym::Forall,
                    QKind::Exists => QSym::Exists,
                };
                for (c, d) in &q.binders {
                    self.quant(kind, d, scope, c.vars());
                }
                if let Some((locals, _)) = &q.ext {
                    scope.last_mut().unwrap().1.extend(locals.iter().cloned());
                }
                self.walk(&q.filter, scope);
                for _ in &q.binders {
                    scope.pop();
                }
            }
            SFormula::And(a, b) | SFormula::Or(a, b) | SFormula::Implies(a, b) => {
                self.walk(a, scope);
                self.walk(b, scope);
            }
            SFormula::Neg(a) => self.walk(a, scope),
            _ => {}
        }
    }
}

fn is_quantified(f: &SFormula) -> bool {
    match f {
        SFormula::Subset(..) | SFormula::Quant(_) => true,
        SFormula::And(a, b) | SFormula::Or(a, b) | SFormula::Implies(a, b) => is_quantified(a) || is_quantified(b),
        SFormula::Neg(a) => is_quantified(a),
        _ => false,
    }
}

fn branch(conjuncts: &[&SFormula], sorts: &SortMap, warnings: &mut Vec<String>) -> BranchReport {
    let mut aliases = Aliases::default();
    for c in conjuncts {
        if let SFormula::Rel(Rel::Eq, a, b) = c {
            if sorts.is_set_term(a) || sorts.is_set_term(b) {
                if let (Some(x), Some(y)) = (domain_var(a), domain_var(b)) {
                    aliases.union(x, y);
                }
            }
        }
    }

    let mut nodes = Vec::new();
    let mut has = BTreeSet::new();
    let mut nested_exists = false;
    for (k, c) in conjuncts.iter().filter(|c| is_quantified(c)).enumerate() {
        let i = k + 1;
        let mut w = Walker {
            i,
            next_j: 0,
            nodes: Vec::new(),
            quants: Vec::new(),
            warnings,
        };
        w.walk(c, &mut Vec::new());
        for (_, kind, anc) in &w.quants {
            has.insert(*kind);
            if *kind == QSym::Exists
                && anc
                    .iter()
                    .any(|a| w.quants.iter().any(|(j, k, _)| j == a && *k == QSym::Forall))
            {
                nested_exists = true;
            }
        }
        nodes.extend(w.nodes);
    }

    let dom: Vec<String> = nodes.iter().map(|n| aliases.find(&n.domain)).collect();
    let mut edges = Vec::new();
    for (a, x) in nodes.iter().enumerate() {
        for (b, y) in nodes.iter().enumerate() {
            let edge = match (x.kind, y.kind) {
                (QSym::Forall, QSym::Exists) => x.i == y.i && y.ancestors.contains(&x.j),
                (QSym::Exists, QSym::Forall) => x.i != y.i && dom[a] == dom[b],
                _ => false,
            };
            if edge {
                edges.push((a, b));
            }
        }
    }

    let witness = find_loop(&nodes, &edges, &dom);
    let verdict = if witness.is_some() {
        FragmentVerdict::Outside
    } else if nested_exists {
        FragmentVerdict::PhiForallExists
    } else if has.len() == 2 {
        FragmentVerdict::PhiExistsForall
    } else if has.contains(&QSym::Exists) {
        FragmentVerdict::PhiExists
    } else {
        FragmentVerdict::PhiForall
    };
    BranchReport {
        verdict,
        nodes,
        edges,
        witness,
    }
}

/// Searches for a path `forall(D) -> exists -> forall -> ... -> exists(D)`
/// alternating the two kinds of edges, with each forall/exists pair in a
/// different conjunct.
pub(crate) fn find_loop(nodes: &[Node], edges: &[(usize, usize)], dom: &[String]) -> Option<Vec<usize>> {
    fn extend(
        at: usize,
        start: usize,
        nodes: &[Node],
        edges: &[(usize, usize)],
        dom: &[String],
        path: &mut Vec<usize>,
        used: &mut Vec<usize>,
    ) -> bool {
        for &(_, e) in edges.iter().filter(|(a, _)| *a == at) {
            path.push(e);
            if dom[e] == dom[start] {
                return true;
            }
            for &(_, f) in edges.iter().filter(|(a, _)| *a == e) {
                if used.contains(&nodes[f].i) {
                    continue;
                }
                used.push(nodes[f].i);
                path.push(f);
                if extend(f, start, nodes, edges, dom, path, used) {
                    return true;
                }
                path.pop();
                used.pop();
            }
            path.pop();
        }
        false
    }
    for (s, n) in nodes.iter().enumerate() {
        if n.kind != QSym::Forall {
            continue;
        }
        let mut path = vec![s];
        let mut used = vec![n.i];
        if extend(s, s, nodes, edges, dom, &mut path, &mut used) {
            return Some(path);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rq::resolve_sorts;
    use crate::syntax::parse_formula;

    fn report(s: &str) -> FragmentReport {
        let f = parse_formula(s).unwrap();
        classify(&f, &resolve_sorts(&f).unwrap())
    }

    #[test]
    fn nested_foreach_is_phi_forall() {
        assert_eq!(report("foreach(X in A, foreach(Y in B, X = Y))").verdict, FragmentVerdict::PhiForall);
        assert_eq!(report("X in A & Y = 1").verdict, FragmentVerdict::PhiForall);
    }

    #[test]
    fn exists_over_foreach_is_exists_forall() {
        assert_eq!(report("exists(X in A, foreach(Y in B, X = Y))").verdict, FragmentVerdict::PhiExistsForall);
        assert_eq!(report("exists(X in A, X = 1)").verdict, FragmentVerdict::PhiExists);
        assert_eq!(
            report("exists(X in A, X = 1) or foreach(X in B, X = 1)").verdict,
            FragmentVerdict::PhiExistsForall
        );
    }

    #[test]
    fn single_conjunct_loop() {
        let r = report("foreach(X in {a / A}, exists(Y in {b / A}, X = Y))");
        assert_eq!(r.verdict, FragmentVerdict::Outside);
        assert_eq!(r.witness_text().unwrap(), "((1,1),(forall,A)) -> ((1,2),(exists,A))");
    }

    #[test]
    fn two_conjunct_loop() {
        let r = report("foreach(X in A, exists(Y in B, X = Y)) & foreach(X in B, exists(Y in A, X neq Y))");
        assert_eq!(r.verdict, FragmentVerdict::Outside);
        assert_eq!(
            r.witness_text().unwrap(),
            "((1,1),(forall,A)) -> ((1,2),(exists,B)) -> ((2,1),(forall,B)) -> ((2,2),(exists,A))"
        );
        assert_eq!(r.branches[0].nodes.len(), 4);
        assert_eq!(r.branches[0].edges.len(), 4);
    }

    #[test]
    fn loop_free_mixed_nesting() {
        let r = report("foreach(X in A, exists(Y in B, X = Y))");
        assert_eq!(r.verdict, FragmentVerdict::PhiForallExists);
        let r = report("foreach(X in {1,2}, exists(Y in {3}, X < Y))");
        assert_eq!(r.verdict, FragmentVerdict::PhiForallExists);
        assert!(r.branches[0].nodes.is_empty());
    }

    #[test]
    fn aliased_domains_close_loops() {
        let r = report("A = {Z / B} & foreach(X in A, exists(Y in B, X = Y))");
        assert_eq!(r.verdict, FragmentVerdict::Outside);
    }

    #[test]
    fn disjunct_with_loop_dominates() {
        let r = report("X in A or foreach(X in A, exists(Y in A, X = Y))");
        assert_eq!(r.verdict, FragmentVerdict::Outside);
        assert_eq!(r.branches.len(), 2);
    }

    #[test]
    fn quantified_domain_warns() {
        let r = report("foreach([X,S] in R, foreach(Y in S, Y neq X))");
        assert_eq!(r.verdict, FragmentVerdict::PhiForall);
        assert_eq!(r.warnings.len(), 1);
    }
}
