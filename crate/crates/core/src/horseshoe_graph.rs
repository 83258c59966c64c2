//! The labelled multigraph of horseshoes and Markovian connections.
//!
//! Vertices are horseshoes. Every horseshoe of period `r` with deck words
//! `T_1..T_k` contributes self-loops `(r, T_j)`; these are materialized as
//! ordinary edges when the graph is built, ahead of the connection edges.
//! Classes are strongly connected components, numbered in a deterministic
//! topological order of the condensation.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;
use thiserror::Error;

use crate::class_partition::{limit_hull, partition, separates_hulls, LimitHull, OrbitProxy, Separation};
use crate::hyperbolic::{for_each_conjugator, FuchsianRep, GeomError, Isometry};
use crate::surface_group::{GroupWord, HomologyVector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("duplicate horseshoe id `{0}`")]
    DuplicateId(String),
    #[error("horseshoe `{0}` has period 0")]
    ZeroPeriod(String),
    #[error("horseshoe `{0}` has no deck transformations")]
    NoDecks(String),
    #[error("edge {index} refers to unknown horseshoe `{id}`")]
    UnknownVertex { index: usize, id: String },
    #[error("edge {0} has label n = 0")]
    ZeroLabel(usize),
    #[error("word genus {found} does not match graph genus {expected}")]
    Genus { expected: usize, found: usize },
    #[error("unknown class id {0}")]
    UnknownClass(usize),
    #[error(transparent)]
    Geometry(#[from] GeomError),
}

/// A rotational horseshoe: period and deck transformations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Horseshoe {
    pub id: String,
    pub period: u64,
    pub decks: Vec<GroupWord>,
}

impl Horseshoe {
    /// Rotation speed proxy per deck word: translation length over period.
    pub fn speeds(&self, rep: &FuchsianRep) -> Vec<Result<f64, GeomError>> {
        self.decks
            .iter()
            .map(|w| rep.translation_length_of(w).map(|l| l / self.period as f64))
            .collect()
    }
}

/// A Markovian connection `from -> to` labelled `(n, T)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub n: u64,
    pub word: GroupWord,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeKind {
    /// Self-loop from deck word `deck` of the source horseshoe.
    Loop { deck: usize },
    /// Connection edge, indexed in input order.
    Connection { input: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphEdge {
    pub id: usize,
    pub from: usize,
    pub to: usize,
    pub n: u64,
    pub word: GroupWord,
    pub homology: HomologyVector,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone)]
pub struct HorseshoeGraph {
    genus: usize,
    vertices: Vec<Horseshoe>,
    edges: Vec<GraphEdge>,
    out: Vec<Vec<usize>>,
    index: BTreeMap<String, usize>,
}

impl HorseshoeGraph {
    pub fn new(genus: usize, horseshoes: Vec<Horseshoe>, connections: Vec<Edge>) -> Result<Self, GraphError> {
        let mut index = BTreeMap::new();
        for (i, h) in horseshoes.iter().enumerate() {
            if index.insert(h.id.clone(), i).is_some() {
                return Err(GraphError::DuplicateId(h.id.clone()));
            }
            if h.period == 0 {
                return Err(GraphError::ZeroPeriod(h.id.clone()));
            }
            if h.decks.is_empty() {
                return Err(GraphError::NoDecks(h.id.clone()));
            }
            for w in &h.decks {
                if w.genus() != genus {
                    return Err(GraphError::Genus {
                        expected: genus,
                        found: w.genus(),
                    });
                }
            }
        }
        let mut edges = Vec::new();
        for (i, h) in horseshoes.iter().enumerate() {
            for (j, w) in h.decks.iter().enumerate() {
                edges.push(GraphEdge {
                    id: edges.len(),
                    from: i,
                    to: i,
                    n: h.period,
                    word: w.clone(),
                    homology: w.abelianize(),
                    kind: EdgeKind::Loop { deck: j },
                });
            }
        }
        for (k, e) in connections.iter().enumerate() {
            let look = |id: &str| {
                index.get(id).copied().ok_or_else(|| GraphError::UnknownVertex {
                    index: k,
                    id: id.to_string(),
                })
            };
            let (from, to) = (look(&e.from)?, look(&e.to)?);
            if e.n == 0 {
                return Err(GraphError::ZeroLabel(k));
            }
            if e.word.genus() != genus {
                return Err(GraphError::Genus {
                    expected: genus,
                    found: e.word.genus(),
                });
            }
            edges.push(GraphEdge {
                id: edges.len(),
                from,
                to,
                n: e.n,
                word: e.word.clone(),
                homology: e.word.abelianize(),
                kind: EdgeKind::Connection { input: k },
            });
        }
        let mut out = vec![Vec::new(); horseshoes.len()];
        for e in &edges {
            out[e.from].push(e.id);
        }
        Ok(HorseshoeGraph {
            genus,
            vertices: horseshoes,
            edges,
            out,
            index,
        })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn vertices(&self) -> &[Horseshoe] {
        &self.vertices
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn out_edges(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Induced subgraph on `keep` (vertex indices, any order). Edge ids are
    /// renumbered.
    pub fn subgraph(&self, keep: &[usize]) -> HorseshoeGraph {
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let horseshoes: Vec<Horseshoe> = keep.iter().map(|&v| self.vertices[v].clone()).collect();
        let inside = |v: usize| keep.binary_search(&v).is_ok();
        let connections: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| matches!(e.kind, EdgeKind::Connection { .. }) && inside(e.from) && inside(e.to))
            .map(|e| Edge {
                from: self.vertices[e.from].id.clone(),
                to: self.vertices[e.to].id.clone(),
                n: e.n,
                word: e.word.clone(),
            })
            .collect();
        HorseshoeGraph::new(self.genus, horseshoes, connections).expect("subgraph of a valid graph")
    }

    /// Strongly connected components and their condensation.
    pub fn condensation(&self) -> Condensation {
        Condensation::new(self)
    }
}

/// Tarjan's algorithm, iterative. Returns a component label per vertex.
fn tarjan(n: usize, succ: &[Vec<usize>]) -> (Vec<usize>, usize) {
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSEEN; n];
    let mut ncomp = 0;
    let mut counter = 0;
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < succ[v].len() {
                let w = succ[v][*pos];
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    (comp, ncomp)
}

/// Components of `G` numbered topologically, with reachability closure.
#[derive(Debug, Clone, Serialize)]
pub struct Condensation {
    /// Class id of each vertex.
    pub class_of: Vec<usize>,
    /// Vertex indices of each class, ascending.
    pub members: Vec<Vec<usize>>,
    /// DAG successors of each class, ascending, without self-loops.
    pub dag: Vec<Vec<usize>>,
    #[serde(skip)]
    reach: Vec<Vec<bool>>,
}

impl Condensation {
    fn new(g: &HorseshoeGraph) -> Self {
        let n = g.len();
        let succ: Vec<Vec<usize>> = (0..n)
            .map(|v| g.out_edges(v).iter().map(|&e| g.edges()[e].to).collect())
            .collect();
        let (raw, ncomp) = tarjan(n, &succ);
        let mut raw_members = vec![Vec::new(); ncomp];
        for v in 0..n {
            raw_members[raw[v]].push(v);
        }
        let mut raw_dag = vec![Vec::new(); ncomp];
        let mut indeg = vec![0usize; ncomp];
        for v in 0..n {
            for &w in &succ[v] {
                let (a, b) = (raw[v], raw[w]);
                if a != b && !raw_dag[a].contains(&b) {
                    raw_dag[a].push(b);
                    indeg[b] += 1;
                }
            }
        }
        // Kahn's algorithm, smallest member vertex first.
        let key = |c: usize| raw_members[c][0];
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..ncomp)
            .filter(|&c| indeg[c] == 0)
            .map(|c| Reverse((key(c), c)))
            .collect();
        let mut order = Vec::with_capacity(ncomp);
        while let Some(Reverse((_, c))) = heap.pop() {
            order.push(c);
            for &d in &raw_dag[c] {
                indeg[d] -= 1;
                if indeg[d] == 0 {
                    heap.push(Reverse((key(d), d)));
                }
            }
        }
        let mut renum = vec![0; ncomp];
        for (i, &c) in order.iter().enumerate() {
            renum[c] = i;
        }
        let class_of: Vec<usize> = raw.iter().map(|&c| renum[c]).collect();
        let mut members = vec![Vec::new(); ncomp];
        for v in 0..n {
            members[class_of[v]].push(v);
        }
        let mut dag = vec![Vec::new(); ncomp];
        for (c, ds) in raw_dag.iter().enumerate() {
            dag[renum[c]] = ds.iter().map(|&d| renum[d]).collect();
            dag[renum[c]].sort_unstable();
        }
        // Reachability in reverse topological order.
        let mut reach = vec![vec![false; ncomp]; ncomp];
        for c in (0..ncomp).rev() {
            reach[c][c] = true;
            for &d in &dag[c].clone() {
                for k in 0..ncomp {
                    if reach[d][k] {
                        reach[c][k] = true;
                    }
                }
            }
        }
        Condensation {
            class_of,
            members,
            dag,
            reach,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.members.len()
    }

    /// Is there a path in `G` from class `i` to class `j`? Reflexive.
    pub fn class_reach(&self, i: usize, j: usize) -> Result<bool, GraphError> {
        let n = self.num_classes();
        if i >= n {
            return Err(GraphError::UnknownClass(i));
        }
        if j >= n {
            return Err(GraphError::UnknownClass(j));
        }
        Ok(self.reach[i][j])
    }

    pub fn reach_matrix(&self) -> &[Vec<bool>] {
        &self.reach
    }

    /// Up-set (reachable classes) and down-set (co-reachable classes) of
    /// every class.
    pub fn filtration(&self) -> Vec<ClassFiltration> {
        let n = self.num_classes();
        (0..n)
            .map(|i| ClassFiltration {
                class: i,
                up: (0..n).filter(|&j| self.reach[i][j]).collect(),
                down: (0..n).filter(|&j| self.reach[j][i]).collect(),
            })
            .collect()
    }

    /// Distinct classes that reach each other; always empty for a valid
    /// condensation.
    pub fn mutual_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.num_classes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.reach[i][j] && self.reach[j][i] {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassFiltration {
    pub class: usize,
    pub up: Vec<usize>,
    pub down: Vec<usize>,
}

/// Disagreement between the class partition of the graph and the
/// partition of its deck words by geodesic transversality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrderMismatch {
    /// Horseshoes in different classes whose deck geodesics are
    /// transversally linked.
    GeodesicMergesSccSplits { a: String, b: String },
    /// Horseshoes in one class whose deck geodesics are not linked.
    SccMergesGeodesicSplits { a: String, b: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderReport {
    /// Pairs of distinct classes reaching each other (must be empty).
    pub antisymmetry_violations: Vec<(usize, usize)>,
    pub mismatches: Vec<OrderMismatch>,
}

impl OrderReport {
    pub fn is_clean(&self) -> bool {
        self.antisymmetry_violations.is_empty() && self.mismatches.is_empty()
    }
}

/// Checks the class relation for antisymmetry and compares the class
/// partition with the geodesic partition of the deck words.
pub fn order_check(g: &HorseshoeGraph, rep: &FuchsianRep, depth: usize, tol: f64) -> Result<OrderReport, GraphError> {
    let cond = g.condensation();
    let mut proxies = Vec::new();
    let mut owner = Vec::new();
    for (v, h) in g.vertices().iter().enumerate() {
        for w in &h.decks {
            if w.is_identity() {
                continue;
            }
            proxies.push(OrbitProxy {
                word: w.clone(),
                period: h.period,
            });
            owner.push(v);
        }
    }
    let mut mismatches = Vec::new();
    if !proxies.is_empty() {
        let part = partition(&proxies, rep, depth, tol)?;
        // geodesic class of each vertex (set of class ids of its decks)
        let mut vclasses: Vec<Vec<usize>> = vec![Vec::new(); g.len()];
        for (p, &v) in owner.iter().enumerate() {
            let c = part.class_of[p];
            if !vclasses[v].contains(&c) {
                vclasses[v].push(c);
            }
        }
        let linked = |a: usize, b: usize| vclasses[a].iter().any(|c| vclasses[b].contains(c));
        for a in 0..g.len() {
            for b in a + 1..g.len() {
                if vclasses[a].is_empty() || vclasses[b].is_empty() {
                    continue;
                }
                let same_scc = cond.class_of[a] == cond.class_of[b];
                let ids = (g.vertices()[a].id.clone(), g.vertices()[b].id.clone());
                if !same_scc && linked(a, b) {
                    mismatches.push(OrderMismatch::GeodesicMergesSccSplits { a: ids.0, b: ids.1 });
                } else if same_scc && !linked(a, b) {
                    mismatches.push(OrderMismatch::SccMergesGeodesicSplits { a: ids.0, b: ids.1 });
                }
            }
        }
    }
    Ok(OrderReport {
        antisymmetry_violations: cond.mutual_pairs(),
        mismatches,
    })
}

/// Tri-state separation oracle: does class `j` separate class `i` from
/// class `k`?
pub trait SeparationOracle {
    fn separates(&self, i: usize, j: usize, k: usize) -> Separation;
}

/// Explicit table keyed by `(i, j, k)`; missing entries answer `No`.
#[derive(Debug, Clone, Default)]
pub struct TableOracle {
    pub table: BTreeMap<(usize, usize, usize), Separation>,
}

impl SeparationOracle for TableOracle {
    fn separates(&self, i: usize, j: usize, k: usize) -> Separation {
        self.table.get(&(i, j, k)).copied().unwrap_or(Separation::No)
    }
}

/// Separation judged from anchored limit hulls of the deck words of each
/// class. Classes without hyperbolic deck words answer `Unknown`.
#[derive(Debug, Clone)]
pub struct GeodesicOracle {
    pub hulls: Vec<Option<LimitHull>>,
    translates: Vec<Isometry>,
    tol: f64,
}

impl GeodesicOracle {
    pub fn new(g: &HorseshoeGraph, cond: &Condensation, rep: &FuchsianRep, depth: usize, tol: f64) -> Self {
        let hulls = cond
            .members
            .iter()
            .map(|ms| {
                let words: Vec<GroupWord> = ms
                    .iter()
                    .flat_map(|&v| g.vertices()[v].decks.iter())
                    .filter(|w| rep.axis_of(w).is_ok())
                    .cloned()
                    .collect();
                limit_hull(&words, rep, depth, tol).ok()
            })
            .collect();
        let mut translates = Vec::new();
        if depth > 0 {
            for_each_conjugator(rep, depth, |_, m| {
                translates.push(*m);
                false
            });
        }
        GeodesicOracle { hulls, translates, tol }
    }
}

impl SeparationOracle for GeodesicOracle {
    fn separates(&self, i: usize, j: usize, k: usize) -> Separation {
        match (&self.hulls[i], &self.hulls[j], &self.hulls[k]) {
            (Some(hi), Some(hj), Some(hk)) => separates_hulls(hi, hj, hk, &self.translates, self.tol),
            _ => Separation::Unknown,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TEdge {
    pub from: usize,
    pub to: usize,
    /// Some separator answered `unknown` and none answered `yes`.
    pub dashed: bool,
}

/// Edges of the graph of classes: `i -> j` when `i` reaches `j`, `i != j`,
/// and no third class separates them.
pub fn graph_t(cond: &Condensation, oracle: &dyn SeparationOracle) -> Vec<TEdge> {
    let n = cond.num_classes();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || !cond.reach[i][j] {
                continue;
            }
            let mut dashed = false;
            let mut blocked = false;
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                match oracle.separates(i, k, j) {
                    Separation::Yes => {
                        blocked = true;
                        break;
                    }
                    Separation::Unknown => dashed = true,
                    Separation::No => {}
                }
            }
            if !blocked {
                out.push(TEdge { from: i, to: j, dashed });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(id: &str, decks: &[&str]) -> Horseshoe {
        Horseshoe {
            id: id.into(),
            period: 1,
            decks: decks.iter().map(|d| GroupWord::parse(2, d).unwrap()).collect(),
        }
    }

    fn edge(a: &str, b: &str) -> Edge {
        Edge {
            from: a.into(),
            to: b.into(),
            n: 1,
            word: GroupWord::identity(2),
        }
    }

    #[test]
    fn loops_are_materialized() {
        let g = HorseshoeGraph::new(2, vec![hs("x", &["a1", "b1"])], vec![]).unwrap();
        assert_eq!(g.edges().len(), 2);
        let c = g.condensation();
        assert_eq!(c.num_classes(), 1);
        assert!(c.class_reach(0, 0).unwrap());
        assert!(c.class_reach(0, 1).is_err());
    }

    #[test]
    fn one_way_edge() {
        let g = HorseshoeGraph::new(2, vec![hs("x", &["a1"]), hs("y", &["b1"])], vec![edge("y", "x")]).unwrap();
        let c = g.condensation();
        assert_eq!(c.num_classes(), 2);
        // y reaches x, so y's class comes first
        assert_eq!(c.class_of, vec![1, 0]);
        assert_eq!(c.dag, vec![vec![1], vec![]]);
        assert!(c.class_reach(0, 1).unwrap());
        assert!(!c.class_reach(1, 0).unwrap());
    }

    #[test]
    fn validation_errors() {
        let bad = HorseshoeGraph::new(2, vec![hs("x", &["a1"])], vec![edge("x", "nope")]);
        assert!(matches!(bad, Err(GraphError::UnknownVertex { ref id, .. }) if id == "nope"));
        let dup = HorseshoeGraph::new(2, vec![hs("x", &["a1"]), hs("x", &["a1"])], vec![]);
        assert!(matches!(dup, Err(GraphError::DuplicateId(_))));
    }

    #[test]
    fn filtration_of_chain() {
        let g = HorseshoeGraph::new(
            2,
            vec![hs("1", &["a1"]), hs("2", &["a1"]), hs("3", &["a1"])],
            vec![edge("1", "2"), edge("2", "3")],
        )
        .unwrap();
        let f = g.condensation().filtration();
        assert_eq!(f[0].up, vec![0, 1, 2]);
        assert_eq!(f[2].down, vec![0, 1, 2]);
        assert_eq!(f[1].up, vec![1, 2]);
    }

    #[test]
    fn graph_t_with_table() {
        let g = HorseshoeGraph::new(
            2,
            vec![hs("1", &["a1"]), hs("2", &["a1"]), hs("3", &["a1"])],
            vec![edge("1", "2"), edge("2", "3"), edge("1", "3")],
        )
        .unwrap();
        let c = g.condensation();
        let mut t = TableOracle::default();
        t.table.insert((0, 1, 2), Separation::Yes);
        let e = graph_t(&c, &t);
        let pairs: Vec<(usize, usize)> = e.iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        let all_unknown = AllUnknown;
        assert!(graph_t(&c, &all_unknown).iter().all(|e| e.dashed));
    }

    struct AllUnknown;
    impl SeparationOracle for AllUnknown {
        fn separates(&self, _: usize, _: usize, _: usize) -> Separation {
            Separation::Unknown
        }
    }

    #[test]
    fn order_check_flags_unlinked_transverse_decks() {
        let rep = FuchsianRep::new(2).unwrap();
        let g = HorseshoeGraph::new(2, vec![hs("x", &["a1"]), hs("y", &["b1"])], vec![]).unwrap();
        let r = order_check(&g, &rep, 2, 1e-9).unwrap();
        assert_eq!(r.mismatches.len(), 1);
        let single = HorseshoeGraph::new(2, vec![hs("x", &["a1"])], vec![]).unwrap();
        assert!(order_check(&single, &rep, 2, 1e-9).unwrap().is_clean());
    }
}
