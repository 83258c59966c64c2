//! Symbolic orbits in the horseshoe graph with prescribed rotation
//! behaviour, each carrying an exactly checkable error certificate.
//!
//! Time along a path is the sum of edge periods `n`; displacement is the
//! sum of abelianized edge words. Boundary corrections are trivial here,
//! so a prefix's rotation is displacement over time.

use std::collections::BTreeMap;

use num::bigint::{BigInt, BigUint};
use num::{Integer, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::lp::{maximize, LpOutcome};
use crate::exact::{format_rational, RatVector, Rational};
use crate::horseshoe_graph::HorseshoeGraph;
use crate::rotation_polytopes::{class_polytope, RotError};
use crate::surface_group::HomologyVector;

/// Cycles enumerated before giving up on finding more.
pub const CYCLE_BUDGET: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealizeError {
    #[error("empty path")]
    Empty,
    #[error("edges {0} and {1} are not composable")]
    NotComposable(usize, usize),
    #[error("unknown edge {0}")]
    UnknownEdge(usize),
    #[error("target dimension {found}, graph dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("no cycles in scope")]
    NoCycles,
    #[error("best cycle combination misses the target by {}", format_rational(.residual))]
    Infeasible { residual: Rational, truncated: bool },
    #[error("cycle classes {0} and {1} are not connected")]
    Disconnected(usize, usize),
    #[error("connector deviation cannot be absorbed at this tolerance")]
    Unattainable,
    #[error("emitted word misses its bound")]
    BoundViolated,
    #[error("no strongly connected class contains the target")]
    NoClass,
    #[error("net vertex {0} is not in the relative interior of a class polytope")]
    NotRelInterior(usize),
    #[error("net is empty")]
    EmptyNet,
    #[error("checkpoint does not match this stream")]
    BadCheckpoint,
    #[error(transparent)]
    Rot(#[from] RotError),
}

fn rat_of(n: &BigInt) -> Rational {
    Rational::from_integer(n.clone())
}

fn rat_u(n: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(n.clone()))
}

fn norm_inf(v: &[Rational]) -> Rational {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)
}

/// `‖D − N ρ‖∞` for integer totals.
fn deviation(d: &[BigInt], n: &BigUint, rho: &RatVector) -> Rational {
    let n = rat_u(n);
    let diff: Vec<Rational> = d.iter().zip(rho.iter()).map(|(x, r)| rat_of(x) - &n * r).collect();
    norm_inf(&diff)
}

fn check_edge(g: &HorseshoeGraph, e: usize) -> Result<(), RealizeError> {
    (e < g.edges().len()).then_some(()).ok_or(RealizeError::UnknownEdge(e))
}

/// `Σ [T(w_j)] / Σ n(w_j)` over a composable edge sequence.
pub fn empirical_rotation(g: &HorseshoeGraph, edges: &[usize]) -> Result<RatVector, RealizeError> {
    if edges.is_empty() {
        return Err(RealizeError::Empty);
    }
    let dim = 2 * g.genus();
    let mut d = vec![0i128; dim];
    let mut n: u128 = 0;
    for (j, &e) in edges.iter().enumerate() {
        check_edge(g, e)?;
        let edge = &g.edges()[e];
        if j > 0 && g.edges()[edges[j - 1]].to != edge.from {
            return Err(RealizeError::NotComposable(edges[j - 1], e));
        }
        for (acc, x) in d.iter_mut().zip(&edge.homology.0) {
            *acc += *x as i128;
        }
        n += edge.n as u128;
    }
    let n = Rational::from_integer(BigInt::from(n));
    Ok(RatVector(d.into_iter().map(|x| Rational::from_integer(BigInt::from(x)) / &n).collect()))
}

/// A simple cycle of edges starting and ending at `start`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cycle {
    pub start: usize,
    pub edges: Vec<usize>,
    pub displacement: HomologyVector,
    pub time: u64,
}

impl Cycle {
    pub fn rotation(&self) -> RatVector {
        self.displacement.to_rat().div_int(self.time as i64)
    }
}

fn in_scope(scope: &[usize], v: usize) -> bool {
    scope.binary_search(&v).is_ok()
}

fn normalize_scope(g: &HorseshoeGraph, scope: &[usize]) -> Vec<usize> {
    let mut s: Vec<usize> = scope.iter().copied().filter(|&v| v < g.len()).collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Simple cycles inside `scope`, each rooted at its smallest vertex,
/// in DFS order. The flag reports truncation at `budget`.
pub fn simple_cycles(g: &HorseshoeGraph, scope: &[usize], budget: usize) -> (Vec<Cycle>, bool) {
    let scope = normalize_scope(g, scope);
    let mut out = Vec::new();
    for &s in &scope {
        let mut path: Vec<usize> = Vec::new();
        let mut on_path = vec![false; g.len()];
        on_path[s] = true;
        // explicit stack of (vertex, next out-edge position)
        let mut stack = vec![(s, 0usize)];
        while let Some(&mut (v, ref mut k)) = stack.last_mut() {
            let outs = g.out_edges(v);
            if *k >= outs.len() {
                stack.pop();
                if let Some(e) = path.pop() {
                    on_path[g.edges()[e].to] = false;
                }
                continue;
            }
            let e = outs[*k];
            *k += 1;
            let w = g.edges()[e].to;
            if w == s {
                let mut edges = path.clone();
                edges.push(e);
                out.push(make_cycle(g, s, edges));
                if out.len() >= budget {
                    return (out, true);
                }
            } else if w > s && in_scope(&scope, w) && !on_path[w] {
                on_path[w] = true;
                path.push(e);
                stack.push((w, 0));
            }
        }
    }
    (out, false)
}

fn make_cycle(g: &HorseshoeGraph, start: usize, edges: Vec<usize>) -> Cycle {
    let mut d = HomologyVector::zeros(g.genus());
    let mut t = 0;
    for &e in &edges {
        d = &d + &g.edges()[e].homology;
        t += g.edges()[e].n;
    }
    Cycle {
        start,
        edges,
        displacement: d,
        time: t,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleApproximation {
    pub cycles: Vec<Cycle>,
    #[serde(serialize_with = "ser_rats")]
    pub weights: Vec<Rational>,
    /// `‖Σ σ_m ρ_m − ρ‖∞`, minimal over the enumerated cycles.
    #[serde(serialize_with = "ser_rat")]
    pub residual: Rational,
}

fn ser_rat<S: serde::Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

fn ser_rats<S: serde::Serializer>(r: &[Rational], s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<String> = r.iter().map(format_rational).collect();
    v.serialize(s)
}

/// Convex weights on simple cycles of `scope` whose combined rotation
/// is within `eps` of `rho` (minimizing the miss, so exact hits come
/// first).
pub fn approximate_by_cycles(
    g: &HorseshoeGraph,
    scope: &[usize],
    rho: &RatVector,
    eps: &Rational,
) -> Result<CycleApproximation, RealizeError> {
    let dim = 2 * g.genus();
    if rho.dim() != dim {
        return Err(RealizeError::Dimension { expected: dim, found: rho.dim() });
    }
    let (all, truncated) = simple_cycles(g, scope, CYCLE_BUDGET);
    // one column per distinct rotation vector
    let mut seen: BTreeMap<Vec<Rational>, usize> = BTreeMap::new();
    let mut cycles = Vec::new();
    for c in all {
        let key = c.rotation().0;
        if !seen.contains_key(&key) {
            seen.insert(key, cycles.len());
            cycles.push(c);
        }
    }
    if cycles.is_empty() {
        return Err(RealizeError::NoCycles);
    }
    let m = cycles.len();
    // columns: σ (m), u (dim), v (dim), t (dim), δ
    let cols = m + 3 * dim + 1;
    let zero = Rational::zero;
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut row = vec![zero(); cols];
    for x in row.iter_mut().take(m) {
        *x = Rational::one();
    }
    a.push(row);
    b.push(Rational::one());
    let rots: Vec<RatVector> = cycles.iter().map(Cycle::rotation).collect();
    for i in 0..dim {
        let mut row = vec![zero(); cols];
        for (k, r) in rots.iter().enumerate() {
            row[k] = r.0[i].clone();
        }
        row[m + i] = -Rational::one();
        row[m + dim + i] = Rational::one();
        a.push(row);
        b.push(rho.0[i].clone());
    }
    for i in 0..dim {
        let mut row = vec![zero(); cols];
        row[m + i] = Rational::one();
        row[m + dim + i] = Rational::one();
        row[m + 2 * dim + i] = Rational::one();
        row[cols - 1] = -Rational::one();
        a.push(row);
        b.push(zero());
    }
    let mut c = vec![zero(); cols];
    c[cols - 1] = -Rational::one();
    let x = match maximize(&c, &a, &b) {
        LpOutcome::Optimal { x, .. } => x,
        _ => unreachable!("the miss LP is always feasible and bounded"),
    };
    let residual = x[cols - 1].clone();
    if &residual > eps {
        return Err(RealizeError::Infeasible { residual, truncated });
    }
    let mut chosen = Vec::new();
    let mut weights = Vec::new();
    for (k, cyc) in cycles.into_iter().enumerate() {
        if x[k].is_positive() {
            chosen.push(cyc);
            weights.push(x[k].clone());
        }
    }
    Ok(CycleApproximation {
        cycles: chosen,
        weights,
        residual,
    })
}

/// Shortest path from `a` to `b` inside `scope` by total time, ties
/// broken by the lexicographically smallest edge sequence.
pub fn connector(g: &HorseshoeGraph, scope: &[usize], a: usize, b: usize) -> Option<Vec<usize>> {
    if a == b {
        return Some(Vec::new());
    }
    let scope = normalize_scope(g, scope);
    let mut best: Vec<Option<(u64, Vec<usize>)>> = vec![None; g.len()];
    best[a] = Some((0, Vec::new()));
    let mut changed = true;
    while changed {
        changed = false;
        for &v in &scope {
            let Some((cost, path)) = best[v].clone() else { continue };
            for &e in g.out_edges(v) {
                let edge = &g.edges()[e];
                if !in_scope(&scope, edge.to) || edge.to == a {
                    continue;
                }
                let mut p = path.clone();
                p.push(e);
                let cand = (cost + edge.n, p);
                if best[edge.to].as_ref().is_none_or(|cur| &cand < cur) {
                    best[edge.to] = Some(cand);
                    changed = true;
                }
            }
        }
    }
    best[b].take().map(|(_, p)| p)
}

/// A power of a fixed edge sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub edges: Vec<usize>,
    pub power: BigUint,
}

/// A finite word in compressed form with its exact totals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteWord {
    pub blocks: Vec<Block>,
    pub closed: bool,
    pub displacement: Vec<BigInt>,
    pub time: BigUint,
    pub edge_count: BigUint,
    /// Exact `‖ρ(W) − ρ‖∞`.
    #[serde(serialize_with = "ser_rat")]
    pub error: Rational,
    #[serde(serialize_with = "ser_rat")]
    pub bound: Rational,
    pub approximation: CycleApproximation,
}

impl FiniteWord {
    pub fn rotation(&self) -> RatVector {
        let t = rat_u(&self.time);
        RatVector(self.displacement.iter().map(|d| rat_of(d) / &t).collect())
    }

    /// Expanded edge sequence. Only sensible for short words.
    pub fn edges(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for b in &self.blocks {
            let p = b.power.to_usize().expect("power fits in memory");
            for _ in 0..p {
                out.extend_from_slice(&b.edges);
            }
        }
        out
    }

    fn start_cursor(&self) -> WordCursor {
        WordCursor {
            block: 0,
            rep: BigUint::zero(),
            idx: 0,
        }
    }

    /// Next edge at `cur`, advancing it; `None` at the end.
    fn step(&self, cur: &mut WordCursor) -> Option<usize> {
        loop {
            let b = self.blocks.get(cur.block)?;
            if cur.rep >= b.power || b.edges.is_empty() {
                cur.block += 1;
                cur.rep = BigUint::zero();
                cur.idx = 0;
                continue;
            }
            let e = b.edges[cur.idx];
            cur.idx += 1;
            if cur.idx == b.edges.len() {
                cur.idx = 0;
                cur.rep += 1u32;
            }
            return Some(e);
        }
    }
}

/// Position inside a [`FiniteWord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCursor {
    pub block: usize,
    pub rep: BigUint,
    pub idx: usize,
}

fn totals(g: &HorseshoeGraph, edges: &[usize]) -> (Vec<BigInt>, BigUint) {
    let mut d = vec![BigInt::zero(); 2 * g.genus()];
    let mut t = BigUint::zero();
    for &e in edges {
        let edge = &g.edges()[e];
        for (acc, x) in d.iter_mut().zip(&edge.homology.0) {
            *acc += *x;
        }
        t += edge.n;
    }
    (d, t)
}

fn big_lcm(a: &BigUint, b: &BigUint) -> BigUint {
    a.lcm(b)
}

fn ceil_div(num: &Rational) -> BigUint {
    let c = num.ceil().to_integer();
    if c.is_positive() {
        c.to_biguint().expect("positive")
    } else {
        BigUint::zero()
    }
}

/// A word through cycles approximating `rho` whose rotation is within
/// `2 eps` of `rho`, checked exactly. With `base` the word starts and
/// ends there (all cycles must share its strongly connected class);
/// otherwise it starts at the first cycle and ends at the last.
pub fn realize_finite(
    g: &HorseshoeGraph,
    scope: &[usize],
    rho: &RatVector,
    eps: &Rational,
    base: Option<usize>,
) -> Result<FiniteWord, RealizeError> {
    let approx = approximate_by_cycles(g, scope, rho, eps)?;
    let cond = g.condensation();
    let order = topo_rank(&cond);
    let mut idx: Vec<usize> = (0..approx.cycles.len()).collect();
    idx.sort_by_key(|&k| (order[cond.class_of[approx.cycles[k].start]], k));
    for w in idx.windows(2) {
        let (ca, cb) = (cond.class_of[approx.cycles[w[0]].start], cond.class_of[approx.cycles[w[1]].start]);
        if !cond.class_reach(ca, cb).unwrap_or(false) {
            return Err(RealizeError::Disconnected(ca, cb));
        }
    }
    if let Some(b) = base {
        let cb = cond.class_of[b];
        if let Some(&k) = idx.iter().find(|&&k| cond.class_of[approx.cycles[k].start] != cb) {
            return Err(RealizeError::Disconnected(cb, cond.class_of[approx.cycles[k].start]));
        }
    }
    // connectors: base -> c1, c_m -> c_{m+1}, c_last -> base
    let mut stops: Vec<usize> = idx.iter().map(|&k| approx.cycles[k].start).collect();
    if let Some(b) = base {
        stops.insert(0, b);
        stops.push(b);
    }
    let mut links = Vec::new();
    for w in stops.windows(2) {
        let p = connector(g, scope, w[0], w[1]).ok_or(RealizeError::Disconnected(cond.class_of[w[0]], cond.class_of[w[1]]))?;
        links.push(p);
    }
    let conn_edges: Vec<usize> = links.iter().flatten().copied().collect();
    let (cd, ct) = totals(g, &conn_edges);

    // p_m N_m = K Λ σ_m with Λ clearing all denominators
    let mut lambda = BigUint::one();
    for (c, s) in approx.cycles.iter().zip(&approx.weights) {
        let den = s.denom().to_biguint().expect("positive denominator");
        lambda = big_lcm(&lambda, &(den * BigUint::from(c.time)));
    }
    let lam = rat_u(&lambda);
    let mix: Vec<Rational> = (0..rho.dim())
        .map(|i| {
            approx
                .cycles
                .iter()
                .zip(&approx.weights)
                .map(|(c, s)| s * &c.rotation().0[i])
                .sum()
        })
        .collect();
    let miss = norm_inf(&mix.iter().zip(rho.iter()).map(|(a, b)| a - b).collect::<Vec<_>>());
    let conn_dev = {
        let t = rat_u(&ct);
        norm_inf(&cd.iter().zip(&mix).map(|(d, m)| rat_of(d) - &t * m).collect::<Vec<_>>())
    };
    let two_eps = eps * Rational::from_integer(2.into());
    let k = if conn_dev.is_zero() {
        BigUint::one()
    } else {
        let gap = &two_eps - &miss;
        if !gap.is_positive() {
            return Err(RealizeError::Unattainable);
        }
        ceil_div(&(&conn_dev / (&lam * &gap))).max(BigUint::one())
    };
    let mut blocks = Vec::new();
    let mut link_iter = links.into_iter();
    if base.is_some() {
        blocks.push(Block {
            edges: link_iter.next().expect("leading connector"),
            power: BigUint::one(),
        });
    }
    for (pos, &kk) in idx.iter().enumerate() {
        let c = &approx.cycles[kk];
        let s = &approx.weights[kk];
        let p = (Rational::from_integer(BigInt::from(k.clone())) * &lam * s) / Rational::from_integer(c.time.into());
        debug_assert!(p.is_integer());
        blocks.push(Block {
            edges: c.edges.clone(),
            power: p.to_integer().to_biguint().expect("positive"),
        });
        if pos + 1 < idx.len() || base.is_some() {
            blocks.push(Block {
                edges: link_iter.next().expect("connector"),
                power: BigUint::one(),
            });
        }
    }
    blocks.retain(|b| !b.edges.is_empty() && !b.power.is_zero());
    let (displacement, time, edge_count) = block_totals(g, &blocks);
    let t = rat_u(&time);
    let rot: Vec<Rational> = displacement.iter().map(|d| rat_of(d) / &t).collect();
    let error = norm_inf(&rot.iter().zip(rho.iter()).map(|(a, b)| a - b).collect::<Vec<_>>());
    if error > two_eps {
        return Err(RealizeError::BoundViolated);
    }
    Ok(FiniteWord {
        blocks,
        closed: base.is_some(),
        displacement,
        time,
        edge_count,
        error,
        bound: two_eps,
        approximation: approx,
    })
}

fn block_totals(g: &HorseshoeGraph, blocks: &[Block]) -> (Vec<BigInt>, BigUint, BigUint) {
    let mut d = vec![BigInt::zero(); 2 * g.genus()];
    let mut t = BigUint::zero();
    let mut count = BigUint::zero();
    for b in blocks {
        let (bd, bt) = totals(g, &b.edges);
        let p = BigInt::from(b.power.clone());
        for (acc, x) in d.iter_mut().zip(bd) {
            *acc += x * &p;
        }
        t += bt * &b.power;
        count += BigUint::from(b.edges.len()) * &b.power;
    }
    (d, t, count)
}

/// Rank of each class in the condensation's topological numbering.
fn topo_rank(cond: &crate::horseshoe_graph::Condensation) -> Vec<usize> {
    // classes are already numbered topologically
    (0..cond.num_classes()).collect()
}

/// The first class (in topological order) whose polytope contains `rho`.
pub fn class_for(g: &HorseshoeGraph, rho: &RatVector) -> Option<usize> {
    let cond = g.condensation();
    (0..cond.num_classes()).find(|&c| {
        let members = &cond.members[c];
        // a class only carries a rotation set when it has a cycle
        let has_cycle = members.iter().any(|&v| g.out_edges(v).iter().any(|&e| members.contains(&g.edges()[e].to)));
        has_cycle && class_polytope(g, &cond, c).contains(rho)
    })
}

/// Largest per-unit-time deviation `‖[T(e)]/n(e) − ρ‖∞` over edges in scope.
fn unit_deviation(g: &HorseshoeGraph, scope: &[usize], rho: &RatVector) -> Rational {
    g.edges()
        .iter()
        .filter(|e| in_scope(scope, e.from) && in_scope(scope, e.to))
        .map(|e| {
            let r = e.homology.to_rat().div_int(e.n as i64);
            r.dist_inf(rho)
        })
        .max()
        .unwrap_or_else(Rational::zero)
}

fn pow2(s: i64) -> Rational {
    if s >= 0 {
        Rational::from_integer(BigInt::one() << (s as usize))
    } else {
        Rational::new(BigInt::one(), BigInt::one() << ((-s) as usize))
    }
}

/// One stage of a stream: `(W^s)^{p_s}`.
#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub stage: usize,
    pub word: FiniteWord,
    pub power: BigUint,
    /// Time elapsed before this stage starts.
    pub offset: BigUint,
    /// Guaranteed `‖ρ'_k − ρ‖∞` for every prefix ending in this stage.
    #[serde(serialize_with = "ser_rat")]
    pub bound: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub stage: usize,
    pub rep: BigUint,
    pub word: WordCursor,
    pub emitted: BigUint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamSymbol {
    pub edge: usize,
    pub stage: usize,
    #[serde(serialize_with = "ser_rat")]
    pub bound: Rational,
}

/// `(W^{s0})^{p_{s0}} (W^{s0+1})^{p_{s0+1}} …` converging to `rho`.
///
/// Stage words satisfy `‖ρ(W^s) − ρ‖ ≤ 2^{-s}`. With `K` the largest
/// unit deviation of an edge, the first stage `s0` is the least `s` with
/// `2^{2-s} < K`; its prefixes are bounded by `K`, those of later stages
/// by `2^{3-s}`. Powers are
/// `p_s = max(1, ⌈K N_{s+1} 2^{s+1} / N_s⌉, ⌈3 S_s / N_s⌉)` where `N` is
/// word time and `S_s` the time before stage `s`.
#[derive(Debug, Clone)]
pub struct RealizationStream {
    g: HorseshoeGraph,
    scope: Vec<usize>,
    base: usize,
    rho: RatVector,
    k: Rational,
    s0: usize,
    stages: Vec<Stage>,
    next_word: Option<FiniteWord>,
    cursor: Checkpoint,
}

impl RealizationStream {
    pub fn new(g: &HorseshoeGraph, rho: &RatVector) -> Result<Self, RealizeError> {
        let dim = 2 * g.genus();
        if rho.dim() != dim {
            return Err(RealizeError::Dimension { expected: dim, found: rho.dim() });
        }
        let c = class_for(g, rho).ok_or(RealizeError::NoClass)?;
        let cond = g.condensation();
        let scope = cond.members[c].clone();
        let base = scope[0];
        let k = unit_deviation(g, &scope, rho);
        let s0 = if k.is_zero() {
            0
        } else {
            (0usize..).find(|&s| pow2(2 - s as i64) < k).expect("k > 0")
        };
        let mut st = RealizationStream {
            g: g.clone(),
            scope,
            base,
            rho: rho.clone(),
            k,
            s0,
            stages: Vec::new(),
            next_word: None,
            cursor: Checkpoint {
                stage: s0,
                rep: BigUint::zero(),
                word: WordCursor {
                    block: 0,
                    rep: BigUint::zero(),
                    idx: 0,
                },
                emitted: BigUint::zero(),
            },
        };
        st.ensure_stage(s0)?;
        Ok(st)
    }

    pub fn resume(g: &HorseshoeGraph, rho: &RatVector, at: &Checkpoint) -> Result<Self, RealizeError> {
        let mut st = RealizationStream::new(g, rho)?;
        if at.stage < st.s0 {
            return Err(RealizeError::BadCheckpoint);
        }
        st.ensure_stage(at.stage)?;
        st.cursor = at.clone();
        Ok(st)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        self.cursor.clone()
    }

    pub fn first_stage(&self) -> usize {
        self.s0
    }

    /// Largest unit deviation of an edge from the target.
    pub fn unit_deviation(&self) -> &Rational {
        &self.k
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn target(&self) -> &RatVector {
        &self.rho
    }

    /// When every stage word hits `rho` exactly, prefixes deviate from
    /// `n ρ` by at most the largest partial-word deviation.
    pub fn deviation_bound(&self) -> Option<Rational> {
        let w = &self.stages.first()?.word;
        if !w.error.is_zero() {
            return None;
        }
        let mut worst = Rational::zero();
        let mut d = vec![BigInt::zero(); self.rho.dim()];
        let mut t = BigUint::zero();
        let mut cur = w.start_cursor();
        let mut steps = 0usize;
        while let Some(e) = w.step(&mut cur) {
            let edge = &self.g.edges()[e];
            for (acc, x) in d.iter_mut().zip(&edge.homology.0) {
                *acc += *x;
            }
            t += edge.n;
            worst = worst.max(deviation(&d, &t, &self.rho));
            steps += 1;
            if steps > 1_000_000 {
                return None;
            }
        }
        Some(worst)
    }

    fn stage_word(&self, s: usize) -> Result<FiniteWord, RealizeError> {
        // an exact word serves every later stage
        if let Some(prev) = self.stages.last() {
            if prev.word.error.is_zero() {
                return Ok(prev.word.clone());
            }
        }
        let eps = pow2(-(s as i64) - 1);
        realize_finite(&self.g, &self.scope, &self.rho, &eps, Some(self.base))
    }

    fn bound_for(&self, s: usize) -> Rational {
        if s == self.s0 || self.k.is_zero() {
            self.k.clone()
        } else {
            pow2(3 - s as i64)
        }
    }

    /// Materializes stages up to and including `s`.
    fn ensure_stage(&mut self, s: usize) -> Result<(), RealizeError> {
        while self.s0 + self.stages.len() <= s {
            let cur = self.s0 + self.stages.len();
            let word = match self.next_word.take() {
                Some(w) => w,
                None => self.stage_word(cur)?,
            };
            let offset = self.stages.last().map(|p| &p.offset + &p.word.time * &p.power).unwrap_or_default();
            // p_s needs the next word's time
            let placeholder = Stage {
                stage: cur,
                word: word.clone(),
                power: BigUint::one(),
                offset: offset.clone(),
                bound: self.bound_for(cur),
            };
            self.stages.push(placeholder);
            let next = self.stage_word(cur + 1)?;
            let n_s = rat_u(&word.time);
            let a = &self.k * rat_u(&next.time) * pow2(cur as i64 + 1) / &n_s;
            let b = Rational::from_integer(3.into()) * rat_u(&offset) / &n_s;
            let p = ceil_div(&a).max(ceil_div(&b)).max(BigUint::one());
            self.stages.last_mut().expect("pushed").power = p;
            self.next_word = Some(next);
        }
        Ok(())
    }

    fn advance(&mut self) -> Result<StreamSymbol, RealizeError> {
        loop {
            let s = self.cursor.stage;
            self.ensure_stage(s)?;
            let st = &self.stages[s - self.s0];
            if self.cursor.rep < st.power {
                if let Some(e) = st.word.step(&mut self.cursor.word) {
                    let sym = StreamSymbol {
                        edge: e,
                        stage: s,
                        bound: st.bound.clone(),
                    };
                    self.cursor.emitted += 1u32;
                    return Ok(sym);
                }
                self.cursor.rep += 1u32;
                self.cursor.word = st.word.start_cursor();
                continue;
            }
            self.cursor.stage += 1;
            self.cursor.rep = BigUint::zero();
            self.cursor.word = WordCursor {
                block: 0,
                rep: BigUint::zero(),
                idx: 0,
            };
        }
    }

    /// The next `n` symbols.
    pub fn take_symbols(&mut self, n: usize) -> Result<Vec<StreamSymbol>, RealizeError> {
        (0..n).map(|_| self.advance()).collect()
    }
}

/// One dwell block of a set stream.
#[derive(Debug, Clone, Serialize)]
pub struct Dwell {
    pub block: usize,
    pub target: usize,
    pub power: BigUint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetSymbol {
    pub edge: usize,
    pub block: usize,
    pub target: usize,
}

/// Certificate for a set stream: after `burn_in` symbols every prefix
/// rotation lies within `eps` of the net polyline, and each dwell block
/// ends within `eps` of its net vertex.
#[derive(Debug, Clone, Serialize)]
pub struct SetCertificate {
    #[serde(serialize_with = "ser_rat")]
    pub eps: Rational,
    pub burn_in: BigUint,
    #[serde(serialize_with = "ser_rat")]
    pub growth: Rational,
    pub words: Vec<FiniteWord>,
}

/// Back-and-forth schedule over a closed net of rotation vectors.
///
/// Net vertex `i` gets a closed word `X_i` with `‖ρ(X_i) − v_i‖ ≤ ε/4`.
/// Block 0 repeats `X_0` until the elapsed time reaches `8 C N_max / ε`
/// (`C` the largest unit displacement), after which a partial word moves
/// the average by at most `ε/4`. Block `b` repeats `X_{b mod m}` for
/// `⌈2 Δ S_b / (ε N_i)⌉` copies, `Δ = diam + ε`, which brings the average
/// within `3ε/4` of `v_i`.
#[derive(Debug, Clone)]
pub struct SetStream {
    g: HorseshoeGraph,
    net: Vec<RatVector>,
    cert: SetCertificate,
    dwells: Vec<Dwell>,
    elapsed: Vec<BigUint>,
    growth: Rational,
    block: usize,
    rep: BigUint,
    cur: WordCursor,
}

pub fn realize_set(g: &HorseshoeGraph, net: &[RatVector], eps: &Rational) -> Result<SetStream, RealizeError> {
    if net.is_empty() {
        return Err(RealizeError::EmptyNet);
    }
    let dim = 2 * g.genus();
    if let Some(v) = net.iter().find(|v| v.dim() != dim) {
        return Err(RealizeError::Dimension { expected: dim, found: v.dim() });
    }
    let cond = g.condensation();
    let class = class_for(g, &net[0]).ok_or(RealizeError::NotRelInterior(0))?;
    let poly = class_polytope(g, &cond, class);
    for (i, v) in net.iter().enumerate() {
        if !poly.rel_interior(v) {
            return Err(RealizeError::NotRelInterior(i));
        }
    }
    let scope = cond.members[class].clone();
    let base = scope[0];
    let eighth = eps / Rational::from_integer(8.into());
    let words = net
        .iter()
        .map(|v| realize_finite(g, &scope, v, &eighth, Some(base)))
        .collect::<Result<Vec<_>, _>>()?;
    let c = g
        .edges()
        .iter()
        .filter(|e| in_scope(&scope, e.from) && in_scope(&scope, e.to))
        .map(|e| e.homology.to_rat().div_int(e.n as i64).norm_inf())
        .max()
        .unwrap_or_else(Rational::zero);
    let n_max = words.iter().map(|w| w.time.clone()).max().expect("nonempty");
    let diam = net
        .iter()
        .flat_map(|a| net.iter().map(move |b| a.dist_inf(b)))
        .max()
        .unwrap_or_else(Rational::zero);
    let delta = diam + eps;
    let growth = Rational::from_integer(2.into()) * &delta / eps;
    let burn_target = Rational::from_integer(8.into()) * &c * rat_u(&n_max) / eps;
    let p0 = ceil_div(&(&burn_target / rat_u(&words[0].time))).max(BigUint::one());
    let burn_in = &p0 * &words[0].edge_count;
    let mut s = SetStream {
        g: g.clone(),
        net: net.to_vec(),
        cert: SetCertificate {
            eps: eps.clone(),
            burn_in,
            growth: growth.clone(),
            words,
        },
        dwells: vec![Dwell {
            block: 0,
            target: 0,
            power: p0.clone(),
        }],
        elapsed: vec![BigUint::zero()],
        growth,
        block: 0,
        rep: BigUint::zero(),
        cur: WordCursor {
            block: 0,
            rep: BigUint::zero(),
            idx: 0,
        },
    };
    s.extend_to(0);
    Ok(s)
}

impl SetStream {
    pub fn certificate(&self) -> &SetCertificate {
        &self.cert
    }

    pub fn dwells(&self) -> &[Dwell] {
        &self.dwells
    }

    pub fn net(&self) -> &[RatVector] {
        &self.net
    }

    fn extend_to(&mut self, b: usize) {
        while self.dwells.len() <= b {
            let prev = self.dwells.last().expect("block 0");
            let w = &self.cert.words[prev.target];
            let elapsed = self.elapsed.last().expect("aligned") + &w.time * &prev.power;
            let target = self.dwells.len() % self.net.len();
            let n_i = rat_u(&self.cert.words[target].time);
            let p = ceil_div(&(&self.growth * rat_u(&elapsed) / n_i)).max(BigUint::one());
            self.dwells.push(Dwell {
                block: self.dwells.len(),
                target,
                power: p,
            });
            self.elapsed.push(elapsed);
        }
    }

    fn advance(&mut self) -> SetSymbol {
        loop {
            self.extend_to(self.block);
            let d = &self.dwells[self.block];
            let w = &self.cert.words[d.target];
            if self.rep < d.power {
                if let Some(e) = w.step(&mut self.cur) {
                    return SetSymbol {
                        edge: e,
                        block: self.block,
                        target: d.target,
                    };
                }
                self.rep += 1u32;
                self.cur = w.start_cursor();
                continue;
            }
            self.block += 1;
            self.rep = BigUint::zero();
            self.cur = WordCursor {
                block: 0,
                rep: BigUint::zero(),
                idx: 0,
            };
        }
    }

    pub fn take_symbols(&mut self, n: usize) -> Vec<SetSymbol> {
        (0..n).map(|_| self.advance()).collect()
    }

    pub fn graph(&self) -> &HorseshoeGraph {
        &self.g
    }
}

/// `max_k ‖Σ_{j<k} [T(w_j)] − (Σ_{j<k} n(w_j)) ρ‖∞ ≤ L` over the given prefix.
pub fn bounded_deviation_check(
    g: &HorseshoeGraph,
    edges: impl IntoIterator<Item = usize>,
    rho: &RatVector,
    l: &Rational,
) -> bool {
    let mut d = vec![BigInt::zero(); 2 * g.genus()];
    let mut t = BigUint::zero();
    for e in edges {
        let Some(edge) = g.edges().get(e) else { return false };
        for (acc, x) in d.iter_mut().zip(&edge.homology.0) {
            *acc += *x;
        }
        t += edge.n;
        if &deviation(&d, &t, rho) > l {
            return false;
        }
    }
    true
}

/// `‖p − s‖∞` minimized over the segment `s ∈ [a, b]`.
pub fn dist_to_segment(p: &RatVector, a: &RatVector, b: &RatVector) -> Rational {
    let d: Vec<Rational> = b.iter().zip(a.iter()).map(|(x, y)| x - y).collect();
    let r: Vec<Rational> = p.iter().zip(a.iter()).map(|(x, y)| x - y).collect();
    let at = |t: &Rational| norm_inf(&r.iter().zip(&d).map(|(ri, di)| ri - t * di).collect::<Vec<_>>());
    // the max of |r_i − t d_i| is piecewise linear; its minimum sits at a
    // breakpoint where two of the lines ±(r_i − t d_i) meet
    let mut ts = vec![Rational::zero(), Rational::one()];
    let n = d.len();
    for i in 0..n {
        for j in i..n {
            for sign in [1i64, -1] {
                let s = Rational::from_integer(sign.into());
                let den = &d[i] - &s * &d[j];
                if !den.is_zero() {
                    ts.push((&r[i] - &s * &r[j]) / den);
                }
            }
        }
    }
    ts.into_iter()
        .filter(|t| !t.is_negative() && t <= &Rational::one())
        .map(|t| at(&t))
        .min()
        .expect("endpoints")
}

/// Distance to a closed polyline through `net`.
pub fn dist_to_net(p: &RatVector, net: &[RatVector]) -> Rational {
    if net.len() == 1 {
        return p.dist_inf(&net[0]);
    }
    (0..net.len())
        .map(|i| dist_to_segment(p, &net[i], &net[(i + 1) % net.len()]))
        .min()
        .expect("nonempty")
}
