//! Integer feasibility of linear constraint systems (Pugh's Omega test), with
//! model reconstruction.
//!
//! A row `r` of length `n + 1` stands for `r[0] + r[1]*x1 + ... + r[n]*xn`.
//! Equalities mean `row = 0`, inequalities `row >= 0`, disequalities
//! `row != 0`.

use std::collections::BTreeMap;

pub type Row = Vec<i128>;

#[derive(Debug, Clone, Default)]
pub struct System {
    pub nvars: usize,
    pub eqs: Vec<Row>,
    pub geqs: Vec<Row>,
    pub neqs: Vec<Row>,
}

impl System {
    pub fn new(nvars: usize) -> Self {
        System {
            nvars,
            ..Default::default()
        }
    }

    /// An integer model, or `None` when the system has no integer solution.
    pub fn solve(&self) -> Option<Vec<i128>> {
        solve_with_neqs(self.nvars, self.eqs.clone(), self.geqs.clone(), &self.neqs)
    }
}

pub fn eval_row(r: &[i128], m: &[i128]) -> i128 {
    r[0] + r[1..].iter().zip(m).map(|(a, x)| a * x).sum::<i128>()
}

fn solve_with_neqs(n: usize, eqs: Vec<Row>, geqs: Vec<Row>, neqs: &[Row]) -> Option<Vec<i128>> {
    let m = feasible(Sys { n, eqs: eqs.clone(), geqs: geqs.clone() })?;
    let Some(pos) = neqs.iter().position(|r| eval_row(r, &m) == 0) else {
        return Some(m);
    };
    // Split the violated disequality into `row >= 1` or `row <= -1`.
    let r = &neqs[pos];
    let rest: Vec<Row> = neqs.iter().enumerate().filter(|(i, _)| *i != pos).map(|(_, r)| r.clone()).collect();
    let mut above = r.clone();
    above[0] -= 1;
    let mut below: Row = r.iter().map(|a| -a).collect();
    below[0] -= 1;
    for extra in [above, below] {
        let mut g = geqs.clone();
        g.push(extra);
        if let Some(m) = solve_with_neqs(n, eqs.clone(), g, &rest) {
            return Some(m);
        }
    }
    None
}

fn feasible(s: Sys) -> Option<Vec<i128>> {
    match difference(&s) {
        Some(result) => result,
        None => omega(s),
    }
}

/// Decides systems of difference constraints (every row has at most two
/// variables, with opposite unit coefficients) by shortest paths. Node 0 is
/// the constant zero; an edge `u -> v` of weight `w` encodes `x_v - x_u <= w`.
/// `None` when the system is not of this shape.
fn difference(s: &Sys) -> Option<Option<Vec<i128>>> {
    let n = s.n;
    let mut adj: Vec<Vec<(usize, i128)>> = vec![Vec::new(); n + 1];
    let negated: Vec<Row> = s.eqs.iter().map(|r| r.iter().map(|a| -a).collect()).collect();
    for r in s.geqs.iter().chain(&s.eqs).chain(&negated) {
        let mut nz = (1..=n).filter(|&k| r[k] != 0);
        let (a, b) = (nz.next(), nz.next());
        if nz.next().is_some() {
            return None;
        }
        match (a, b) {
            (None, _) => {
                if r[0] < 0 {
                    return Some(None);
                }
            }
            (Some(i), None) => match r[i] {
                1 => adj[i].push((0, r[0])),
                -1 => adj[0].push((i, r[0])),
                _ => return None,
            },
            (Some(i), Some(j)) => match (r[i], r[j]) {
                (1, -1) => adj[i].push((j, r[0])),
                (-1, 1) => adj[j].push((i, r[0])),
                _ => return None,
            },
        }
    }
    // Queue-based Bellman-Ford from a virtual source at distance 0 to all.
    let mut dist = vec![0i128; n + 1];
    let mut len = vec![0usize; n + 1];
    let mut queued = vec![true; n + 1];
    let mut queue: std::collections::VecDeque<usize> = (0..=n).collect();
    while let Some(u) = queue.pop_front() {
        queued[u] = false;
        for &(v, w) in &adj[u] {
            if dist[u] + w < dist[v] {
                dist[v] = dist[u] + w;
                len[v] = len[u] + 1;
                if len[v] > n + 1 {
                    return Some(None);
                }
                if !queued[v] {
                    queued[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    Some(Some((1..=n).map(|k| dist[k] - dist[0]).collect()))
}

#[derive(Debug, Clone)]
struct Sys {
    n: usize,
    eqs: Vec<Row>,
    geqs: Vec<Row>,
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn coef_gcd(r: &[i128]) -> i128 {
    r[1..].iter().fold(0, |g, &a| gcd(g, a))
}

fn floor_div(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -floor_div(-a, b)
}

/// Symmetric residue: `a - m * floor(a/m + 1/2)`.
fn mod_hat(a: i128, m: i128) -> i128 {
    a - m * floor_div(2 * a + m, 2 * m)
}

/// Normalizes rows in place. Returns false on a trivial contradiction.
fn normalize(s: &mut Sys) -> bool {
    let mut eqs = Vec::new();
    for mut r in std::mem::take(&mut s.eqs) {
        let g = coef_gcd(&r);
        if g == 0 {
            if r[0] != 0 {
                return false;
            }
            continue;
        }
        if r[0] % g != 0 {
            return false;
        }
        r.iter_mut().for_each(|a| *a /= g);
        // Canonical sign: first nonzero coefficient positive.
        if r[1..].iter().find(|a| **a != 0).is_some_and(|a| *a < 0) {
            r.iter_mut().for_each(|a| *a = -*a);
        }
        if !eqs.contains(&r) {
            eqs.push(r);
        }
    }
    // Tightest constant per coefficient vector.
    let mut best: BTreeMap<Vec<i128>, i128> = BTreeMap::new();
    for mut r in std::mem::take(&mut s.geqs) {
        let g = coef_gcd(&r);
        if g == 0 {
            if r[0] < 0 {
                return false;
            }
            continue;
        }
        r[0] = floor_div(r[0], g);
        for a in r[1..].iter_mut() {
            *a /= g;
        }
        let key = r[1..].to_vec();
        let e = best.entry(key).or_insert(r[0]);
        *e = (*e).min(r[0]);
    }
    let mut geqs = Vec::new();
    for (key, c) in &best {
        let neg: Vec<i128> = key.iter().map(|a| -a).collect();
        if let Some(&c2) = best.get(&neg) {
            // a.x + c >= 0 and -a.x + c2 >= 0, so -c <= a.x <= c2.
            if c + c2 < 0 {
                return false;
            }
            if c + c2 == 0 {
                if key < &neg {
                    let mut r = vec![*c];
                    r.extend(key);
                    eqs.push(r);
                }
                continue;
            }
        }
        let mut r = vec![*c];
        r.extend(key);
        geqs.push(r);
    }
    s.eqs = eqs;
    s.geqs = geqs;
    true
}

/// Substitutes `x_k := expr` (expr has a zero at index k) into `row`.
fn substitute(row: &mut Row, k: usize, expr: &Row) {
    let a = row[k];
    if a == 0 {
        return;
    }
    row[k] = 0;
    for (i, e) in expr.iter().enumerate() {
        row[i] += a * e;
    }
}

fn omega(mut s: Sys) -> Option<Vec<i128>> {
    if !normalize(&mut s) {
        return None;
    }
    if let Some(e) = s.eqs.first().cloned() {
        return eliminate_equality(s, e);
    }
    if s.geqs.is_empty() {
        return Some(vec![0; s.n]);
    }
    eliminate_inequalities(s)
}

fn eliminate_equality(mut s: Sys, e: Row) -> Option<Vec<i128>> {
    let k = (1..=s.n)
        .filter(|&i| e[i] != 0)
        .min_by_key(|&i| e[i].abs())
        .expect("normalized equality has a variable");
    let ak = e[k];
    let sign = ak.signum();
    if ak.abs() == 1 {
        // x_k = -sign * (e without x_k)
        let mut expr: Row = e.iter().map(|a| -sign * a).collect();
        expr[k] = 0;
        s.eqs.remove(0);
        for r in s.eqs.iter_mut().chain(s.geqs.iter_mut()) {
            substitute(r, k, &expr);
        }
        let mut m = omega(s)?;
        m[k - 1] = eval_row(&expr, &m);
        return Some(m);
    }
    // No unit coefficient: introduce sigma with m*sigma = sum mod_hat(a_i) x_i.
    let m = ak.abs() + 1;
    let n0 = s.n;
    s.n += 1;
    for r in s.eqs.iter_mut().chain(s.geqs.iter_mut()) {
        r.push(0);
    }
    let mut expr: Row = vec![0; s.n + 1];
    expr[0] = sign * mod_hat(e[0], m);
    for i in 1..=n0 {
        if i != k {
            expr[i] = sign * mod_hat(e[i], m);
        }
    }
    expr[s.n] = -sign * m;
    for r in s.eqs.iter_mut().chain(s.geqs.iter_mut()) {
        substitute(r, k, &expr);
    }
    let mut model = omega(s)?;
    model[k - 1] = eval_row(&expr, &model);
    model.truncate(n0);
    Some(model)
}

struct Bounds {
    lower: Vec<Row>,
    upper: Vec<Row>,
    rest: Vec<Row>,
}

fn split_on(geqs: &[Row], k: usize) -> Bounds {
    let mut b = Bounds {
        lower: Vec::new(),
        upper: Vec::new(),
        rest: Vec::new(),
    };
    for r in geqs {
        match r[k].signum() {
            1 => b.lower.push(r.clone()),
            -1 => b.upper.push(r.clone()),
            _ => b.rest.push(r.clone()),
        }
    }
    b
}

/// Picks the value of `x_k` given a model of the other variables.
fn pick_value(b: &Bounds, k: usize, m: &[i128]) -> Option<i128> {
    let part = |r: &Row| {
        let mut r = r.clone();
        r[k] = 0;
        eval_row(&r, m)
    };
    let lo = b.lower.iter().map(|r| ceil_div(-part(r), r[k])).max();
    let hi = b.upper.iter().map(|r| floor_div(part(r), -r[k])).min();
    match (lo, hi) {
        (Some(l), Some(h)) => (l <= h).then_some(l),
        (Some(l), None) => Some(l),
        (None, Some(h)) => Some(h),
        (None, None) => Some(0),
    }
}

/// Occurrences of a variable among the inequalities.
#[derive(Clone, Copy)]
struct Occ {
    lower: usize,
    upper: usize,
    unit_lower: bool,
    unit_upper: bool,
}

fn eliminate_inequalities(s: Sys) -> Option<Vec<i128>> {
    let mut occ = vec![
        Occ {
            lower: 0,
            upper: 0,
            unit_lower: true,
            unit_upper: true,
        };
        s.n + 1
    ];
    for r in &s.geqs {
        for (k, o) in occ.iter_mut().enumerate().skip(1) {
            match r[k].signum() {
                1 => {
                    o.lower += 1;
                    o.unit_lower &= r[k] == 1;
                }
                -1 => {
                    o.upper += 1;
                    o.unit_upper &= r[k] == -1;
                }
                _ => {}
            }
        }
    }
    let vars: Vec<usize> = (1..=s.n).filter(|&k| occ[k].lower + occ[k].upper > 0).collect();
    if vars.is_empty() {
        return Some(vec![0; s.n]);
    }
    // A variable bounded on one side only can always be satisfied.
    if let Some(&k) = vars.iter().find(|&&k| occ[k].lower == 0 || occ[k].upper == 0) {
        let b = split_on(&s.geqs, k);
        let sub = Sys {
            n: s.n,
            eqs: Vec::new(),
            geqs: b.rest.clone(),
        };
        let mut m = omega(sub)?;
        m[k - 1] = 0;
        m[k - 1] = pick_value(&b, k, &m).expect("one-sided bounds are satisfiable");
        return Some(m);
    }
    let exact = |b: &Bounds, k: usize| {
        b.lower.iter().all(|r| r[k] == 1) || b.upper.iter().all(|r| r[k] == -1)
    };
    let k = *vars
        .iter()
        .min_by_key(|&&k| {
            let o = occ[k];
            (!(o.unit_lower || o.unit_upper), o.lower * o.upper)
        })
        .unwrap();
    let b = split_on(&s.geqs, k);
    let shadow = |dark: bool| {
        let mut out = b.rest.clone();
        for l in &b.lower {
            for u in &b.upper {
                let (a, bb) = (l[k], -u[k]);
                let mut r: Row = l.iter().zip(u).map(|(x, y)| bb * x + a * y).collect();
                r[k] = 0;
                if dark {
                    r[0] -= (a - 1) * (bb - 1);
                }
                out.push(r);
            }
        }
        Sys {
            n: s.n,
            eqs: Vec::new(),
            geqs: out,
        }
    };
    let finish = |mut m: Vec<i128>| {
        m[k - 1] = 0;
        let v = pick_value(&b, k, &m)?;
        m[k - 1] = v;
        Some(m)
    };
    if exact(&b, k) {
        return finish(omega(shadow(false))?);
    }
    if let Some(m) = omega(shadow(true)) {
        if let Some(m) = finish(m) {
            return Some(m);
        }
    }
    omega(shadow(false))?;
    // Splinters: some lower bound is nearly tight.
    let bmax = b.upper.iter().map(|u| -u[k]).max().unwrap();
    for l in &b.lower {
        let a = l[k];
        let top = floor_div(a * bmax - a - bmax, bmax);
        for i in 0..=top.max(-1) {
            let mut e = l.clone();
            e[0] -= i;
            let sub = Sys {
                n: s.n,
                eqs: vec![e],
                geqs: s.geqs.clone(),
            };
            if let Some(m) = omega(sub) {
                return Some(m);
            }
        }
    }
    None
}
