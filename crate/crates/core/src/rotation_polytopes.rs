//! Exact rotation sets in `H_1(S, Q) = Q^{2g}`.
//!
//! A polytope is kept as its minimal vertex list; redundant points are
//! dropped with an exact LP. The rotation set of a graph is a union of
//! polytopes, one per maximal chain of classes in the condensation.

use num::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::lp::{feasible, maximize, LpOutcome};
use crate::exact::{row_basis, RatVector, Rational};
use crate::horseshoe_graph::{Condensation, Horseshoe, HorseshoeGraph};

pub const MAX_CLASSES: usize = 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RotError {
    #[error("{0} classes exceed the chain-enumeration limit of {MAX_CLASSES}")]
    TooManyClasses(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("empty point set")]
    Empty,
    #[error("axis {0} out of range")]
    Axis(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RatPolytope {
    pub vertices: Vec<RatVector>,
    /// Integer basis of the direction space of the affine hull.
    pub span: Vec<RatVector>,
}

fn hull_system(vertices: &[RatVector], rho: &RatVector) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let dim = rho.dim();
    let mut a: Vec<Vec<Rational>> = (0..dim)
        .map(|k| vertices.iter().map(|v| v[k].clone()).collect())
        .collect();
    a.push(vec![Rational::one(); vertices.len()]);
    let mut b = rho.0.clone();
    b.push(Rational::one());
    (a, b)
}

fn in_hull(vertices: &[RatVector], rho: &RatVector) -> bool {
    if vertices.is_empty() {
        return false;
    }
    for k in 0..rho.dim() {
        let lo = vertices.iter().map(|v| &v[k]).min().expect("nonempty");
        let hi = vertices.iter().map(|v| &v[k]).max().expect("nonempty");
        if &rho[k] < lo || &rho[k] > hi {
            return false;
        }
    }
    if vertices.iter().any(|v| v == rho) {
        return true;
    }
    let (a, b) = hull_system(vertices, rho);
    feasible(&a, &b).is_some()
}

impl RatPolytope {
    /// Convex hull of `points`, reduced to its vertices.
    pub fn from_points(points: &[RatVector]) -> Result<Self, RotError> {
        let first = points.first().ok_or(RotError::Empty)?;
        let dim = first.dim();
        if let Some(p) = points.iter().find(|p| p.dim() != dim) {
            return Err(RotError::Dimension(dim, p.dim()));
        }
        let mut pts: Vec<RatVector> = Vec::new();
        for p in points {
            if !pts.contains(p) {
                pts.push(p.clone());
            }
        }
        let mut i = 0;
        while i < pts.len() {
            let others: Vec<RatVector> = pts.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| p.clone()).collect();
            if in_hull(&others, &pts[i]) {
                pts.remove(i);
            } else {
                i += 1;
            }
        }
        let diffs: Vec<RatVector> = pts[1..].iter().map(|p| p - &pts[0]).collect();
        Ok(RatPolytope {
            span: row_basis(&diffs),
            vertices: pts,
        })
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].dim()
    }

    /// Dimension of the affine hull.
    pub fn affine_dim(&self) -> usize {
        self.span.len()
    }

    pub fn contains(&self, rho: &RatVector) -> bool {
        rho.dim() == self.dim() && in_hull(&self.vertices, rho)
    }

    /// Relative-interior test: `rho` is a convex combination with every
    /// weight strictly positive.
    pub fn rel_interior(&self, rho: &RatVector) -> bool {
        if !self.contains(rho) {
            return false;
        }
        let n = self.vertices.len();
        if n == 1 {
            return true;
        }
        // weights mu_i + t, mu >= 0, t >= 0; maximize t
        let (mut a, b) = hull_system(&self.vertices, rho);
        for row in a.iter_mut() {
            let s: Rational = row.iter().sum();
            row.push(s);
        }
        let mut c = vec![Rational::zero(); n];
        c.push(Rational::one());
        match maximize(&c, &a, &b) {
            LpOutcome::Optimal { value, .. } => value.is_positive(),
            _ => false,
        }
    }

    pub fn contains_polytope(&self, other: &RatPolytope) -> bool {
        other.vertices.iter().all(|v| self.contains(v))
    }

    pub fn same_set(&self, other: &RatPolytope) -> bool {
        self.contains_polytope(other) && other.contains_polytope(self)
    }

    /// Exact 2D convex hull of the projection onto coordinates `axes`,
    /// counter-clockwise from the lexicographically smallest point.
    pub fn project2d(&self, axes: (usize, usize)) -> Result<Vec<[Rational; 2]>, RotError> {
        for a in [axes.0, axes.1] {
            if a >= self.dim() {
                return Err(RotError::Axis(a));
            }
        }
        let pts: Vec<[Rational; 2]> = self
            .vertices
            .iter()
            .map(|v| [v[axes.0].clone(), v[axes.1].clone()])
            .collect();
        Ok(monotone_chain(pts))
    }
}

fn cross(o: &[Rational; 2], a: &[Rational; 2], b: &[Rational; 2]) -> Rational {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

fn monotone_chain(mut pts: Vec<[Rational; 2]>) -> Vec<[Rational; 2]> {
    pts.sort();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[Rational; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p).is_positive() {
            lower.pop();
        }
        lower.push(p.clone());
    }
    let mut upper: Vec<[Rational; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p).is_positive() {
            upper.pop();
        }
        upper.push(p.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Points `[T_j] / r`, one per deck word.
pub fn vertex_points(h: &Horseshoe) -> Vec<RatVector> {
    h.decks
        .iter()
        .map(|w| w.abelianize().to_rat().div_int(h.period as i64))
        .collect()
}

pub fn rot_vertex(h: &Horseshoe) -> RatPolytope {
    RatPolytope::from_points(&vertex_points(h)).expect("horseshoes have at least one deck word")
}

fn class_points(g: &HorseshoeGraph, cond: &Condensation, c: usize) -> Vec<RatVector> {
    cond.members[c]
        .iter()
        .flat_map(|&v| vertex_points(&g.vertices()[v]))
        .collect()
}

/// Hull of the rotation sets of the members of one class.
pub fn class_polytope(g: &HorseshoeGraph, cond: &Condensation, c: usize) -> RatPolytope {
    RatPolytope::from_points(&class_points(g, cond, c)).expect("classes are nonempty")
}

/// Maximal source-to-sink chains of the condensation DAG, in DFS order.
pub fn maximal_chains(cond: &Condensation) -> Vec<Vec<usize>> {
    let n = cond.num_classes();
    let mut indeg = vec![0; n];
    for ds in &cond.dag {
        for &d in ds {
            indeg[d] += 1;
        }
    }
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, usize)> = (0..n).rev().filter(|&c| indeg[c] == 0).map(|c| (vec![c], c)).collect();
    while let Some((chain, c)) = stack.pop() {
        if cond.dag[c].is_empty() {
            out.push(chain);
            continue;
        }
        for &d in cond.dag[c].iter().rev() {
            let mut next = chain.clone();
            next.push(d);
            stack.push((next, d));
        }
    }
    out
}

/// Rotation set of the graph as a list of polytopes, none contained in
/// another.
pub fn rot_graph(g: &HorseshoeGraph) -> Result<Vec<RatPolytope>, RotError> {
    let cond = g.condensation();
    if cond.num_classes() > MAX_CLASSES {
        return Err(RotError::TooManyClasses(cond.num_classes()));
    }
    if g.is_empty() {
        return Ok(Vec::new());
    }
    let per_class: Vec<Vec<RatVector>> = (0..cond.num_classes()).map(|c| class_points(g, &cond, c)).collect();
    let mut polys: Vec<RatPolytope> = Vec::new();
    for chain in maximal_chains(&cond) {
        let pts: Vec<RatVector> = chain.iter().flat_map(|&c| per_class[c].iter().cloned()).collect();
        let p = RatPolytope::from_points(&pts)?;
        if polys.iter().any(|q| q.contains_polytope(&p)) {
            continue;
        }
        polys.retain(|q| !p.contains_polytope(q));
        polys.push(p);
    }
    Ok(polys)
}

pub fn in_union(polys: &[RatPolytope], rho: &RatVector) -> bool {
    polys.iter().any(|p| p.contains(rho))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeWarning {
    TooManyChaoticClasses { count: usize, bound: usize },
    ZeroNotInClassSet { class: usize },
}

/// Advisory checks: at most `2g - 2` chaotic classes, and each chaotic
/// class rotation set contains 0.
pub fn shape_diagnostics(genus: usize, chaotic: &[(usize, &RatPolytope)]) -> Vec<ShapeWarning> {
    let mut out = Vec::new();
    let bound = (2 * genus).saturating_sub(2);
    if chaotic.len() > bound {
        out.push(ShapeWarning::TooManyChaoticClasses {
            count: chaotic.len(),
            bound,
        });
    }
    for (c, p) in chaotic {
        debug_assert!(p.span.iter().all(|v| v.iter().all(|x| x.is_integer())));
        if !p.contains(&RatVector::zeros(p.dim())) {
            out.push(ShapeWarning::ZeroNotInClassSet { class: *c });
        }
    }
    out
}
