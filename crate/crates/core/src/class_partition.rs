//! Classes of periodic-orbit proxies.
//!
//! An orbit proxy is a deck word with a period. Two proxies are linked when
//! the axis of one crosses a translate of the axis of the other; classes
//! are the connected components of that relation, merged further when two
//! proxies have conjugate primitive roots (the same closed geodesic, up to
//! orientation). Everything geometric is evaluated in one fixed Fuchsian
//! representation and only up to a conjugator depth, so a missing link is
//! "not found", never "absent".

use std::f64::consts::TAU;

use serde::Serialize;

use crate::hyperbolic::{is_simple_closed_geodesic, Simplicity};
use crate::hyperbolic::{
    angle_dist, for_each_conjugator, geodesics_cross_tol, norm_angle, translates_cross, FuchsianRep, GeomError,
    Isometry, OrientedGeodesic, TranslateCrossing,
};
use crate::surface_group::GroupWord;

/// Conjugator depth used for limit hulls, whatever the requested depth.
pub const HULL_DEPTH_CAP: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitProxy {
    pub word: GroupWord,
    pub period: u64,
}

impl OrbitProxy {
    pub fn new(word: GroupWord, period: u64, rep: &FuchsianRep) -> Result<Self, GeomError> {
        if period == 0 {
            return Err(GeomError::Identity);
        }
        rep.axis_of(&word)?;
        Ok(OrbitProxy { word, period })
    }

    /// Translation length of the deck word divided by the period.
    pub fn speed(&self, rep: &FuchsianRep) -> Result<f64, GeomError> {
        Ok(rep.translation_length_of(&self.word)? / self.period as f64)
    }
}

pub fn dynamically_transverse(
    o1: &OrbitProxy,
    o2: &OrbitProxy,
    rep: &FuchsianRep,
    depth: usize,
    tol: f64,
) -> Result<TranslateCrossing, GeomError> {
    translates_cross(&o1.word, &o2.word, rep, depth, tol)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitClass {
    /// Orbit indices, ascending.
    pub members: Vec<usize>,
    pub chaotic: bool,
    /// Pairs `(i, j)`, `i <= j`, found dynamically transverse.
    pub transverse_pairs: Vec<(usize, usize)>,
    /// Members that joined only through a conjugate primitive root.
    pub conjugacy_merged: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassPartition {
    pub depth: usize,
    pub class_of: Vec<usize>,
    pub classes: Vec<OrbitClass>,
    pub simplicity: Vec<Simplicity>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.0[hi] = lo;
        true
    }
}

fn root_key(w: &GroupWord) -> Option<(GroupWord, GroupWord)> {
    let (root, _) = w.primitive_root().ok()?;
    Some((root.cyclic_normal_form(), root.invert().cyclic_normal_form()))
}

/// Connected components of the transversality relation, numbered by their
/// smallest member.
pub fn partition(orbits: &[OrbitProxy], rep: &FuchsianRep, depth: usize, tol: f64) -> Result<ClassPartition, GeomError> {
    let n = orbits.len();
    let mut uf = UnionFind((0..n).collect());
    let mut transverse = Vec::new();
    for i in 0..n {
        for j in i..n {
            if dynamically_transverse(&orbits[i], &orbits[j], rep, depth, tol)?.is_yes() {
                transverse.push((i, j));
                uf.union(i, j);
            }
        }
    }
    let keys: Vec<_> = orbits.iter().map(|o| root_key(&o.word)).collect();
    let mut by_conjugacy = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if let (Some(a), Some(b)) = (&keys[i], &keys[j]) {
                if (a.0 == b.0 || a.0 == b.1) && uf.union(i, j) {
                    by_conjugacy.push(j);
                }
            }
        }
    }
    let simplicity = orbits
        .iter()
        .map(|o| is_simple_closed_geodesic(&o.word, rep, depth, tol).map(|r| r.verdict))
        .collect::<Result<Vec<_>, _>>()?;
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<OrbitClass> = Vec::new();
    for i in 0..n {
        let r = uf.find(i);
        if class_of[r] == usize::MAX {
            class_of[r] = classes.len();
            classes.push(OrbitClass {
                members: Vec::new(),
                chaotic: false,
                transverse_pairs: Vec::new(),
                conjugacy_merged: Vec::new(),
            });
        }
        class_of[i] = class_of[r];
        let c = &mut classes[class_of[i]];
        c.members.push(i);
        if simplicity[i] == Simplicity::NonSimple {
            c.chaotic = true;
        }
    }
    for (i, j) in transverse {
        let c = &mut classes[class_of[i]];
        c.chaotic = true;
        c.transverse_pairs.push((i, j));
    }
    for j in by_conjugacy {
        classes[class_of[j]].conjugacy_merged.push(j);
    }
    Ok(ClassPartition {
        depth,
        class_of,
        classes,
        simplicity,
    })
}

/// Boundary points of a finite approximation of the limit set of one
/// class, anchored at the axis of its first word.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitHull {
    /// Word whose axis (untranslated) anchors the hull.
    pub anchor: String,
    /// Sorted angles in `[0, 2 pi)`.
    pub points: Vec<f64>,
}

impl LimitHull {
    /// Complementary arcs `(from, to)`, counter-clockwise from `from`.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        let n = self.points.len();
        (0..n).map(|t| (self.points[t], self.points[(t + 1) % n])).collect()
    }

    /// Index of the gap containing `theta`, or `None` if `theta` is within
    /// `tol` of a hull point.
    pub fn gap_of(&self, theta: f64, tol: f64) -> Option<usize> {
        if self.points.iter().any(|&p| angle_dist(p, theta) < tol) {
            return None;
        }
        let t = norm_angle(theta);
        match self.points.partition_point(|&p| p < t) {
            0 => Some(self.points.len() - 1),
            k => Some(k - 1),
        }
    }

    pub fn apply(&self, m: &Isometry) -> LimitHull {
        let mut points: Vec<f64> = self.points.iter().map(|&p| m.act_boundary(p)).collect();
        points.sort_by(f64::total_cmp);
        LimitHull {
            anchor: self.anchor.clone(),
            points,
        }
    }
}

/// Endpoints of the crossing-connected component of `anchor` among
/// `axes`.
pub fn hull_from_axes(anchor: &OrientedGeodesic, axes: &[OrientedGeodesic], tol: f64) -> Vec<f64> {
    let mut all: Vec<OrientedGeodesic> = vec![*anchor];
    for a in axes {
        if !all.iter().any(|b| b.same_set(a, tol)) {
            all.push(*a);
        }
    }
    let mut seen = vec![false; all.len()];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        for j in 0..all.len() {
            if !seen[j] && geodesics_cross_tol(&all[i], &all[j], tol).crosses {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    let mut pts: Vec<f64> = Vec::new();
    for (g, _) in all.iter().zip(&seen).filter(|(_, &s)| s) {
        for p in [g.repelling, g.attracting] {
            if !pts.iter().any(|&q| angle_dist(p, q) < tol) {
                pts.push(norm_angle(p));
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts
}

/// Approximate limit hull of the class spanned by `words`: axes of the
/// words and their conjugates by words of length at most
/// `min(depth, HULL_DEPTH_CAP)`, restricted to the component of the first
/// axis.
pub fn limit_hull(words: &[GroupWord], rep: &FuchsianRep, depth: usize, tol: f64) -> Result<LimitHull, GeomError> {
    let first = words.first().ok_or(GeomError::Identity)?;
    let anchor = rep.axis_of(first)?;
    let base: Vec<OrientedGeodesic> = words.iter().map(|w| rep.axis_of(w)).collect::<Result<_, _>>()?;
    let mut axes = Vec::new();
    for_each_conjugator(rep, depth.min(HULL_DEPTH_CAP), |_, m| {
        axes.extend(base.iter().map(|a| a.apply(m)));
        false
    });
    Ok(LimitHull {
        anchor: first.to_string(),
        points: hull_from_axes(&anchor, &axes, tol),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Separation {
    Yes,
    No,
    Unknown,
}

/// Does one translate `c . hj` separate `hi` from `hk`? With `translates`
/// empty the answer is `Unknown`.
///
/// `Yes` when some translate has all of `hi` in one complementary gap and
/// no point of `hk` in it; `No` when no chord from `hi` to `hk` has its
/// endpoints in different gaps of any translate; `Unknown` otherwise.
pub fn separates_hulls(hi: &LimitHull, hj: &LimitHull, hk: &LimitHull, translates: &[Isometry], tol: f64) -> Separation {
    if translates.is_empty() || hj.points.len() < 2 {
        return Separation::Unknown;
    }
    let mut any_chord_cut = false;
    for m in translates {
        let h = hj.apply(m);
        let gi: Vec<Option<usize>> = hi.points.iter().map(|&p| h.gap_of(p, tol)).collect();
        let gk: Vec<Option<usize>> = hk.points.iter().map(|&p| h.gap_of(p, tol)).collect();
        if gi.iter().chain(&gk).any(Option::is_none) {
            any_chord_cut = true;
            continue;
        }
        let first = gi[0];
        if gi.iter().all(|&g| g == first) && gk.iter().all(|&g| g != first) {
            return Separation::Yes;
        }
        if gi.iter().any(|a| gk.iter().any(|b| a != b)) {
            any_chord_cut = true;
        }
    }
    if any_chord_cut {
        Separation::Unknown
    } else {
        Separation::No
    }
}

/// Separation of anchored class hulls, testing translates of the middle
/// hull by conjugators of length at most `depth`.
pub fn separates(hi: &LimitHull, hj: &LimitHull, hk: &LimitHull, rep: &FuchsianRep, depth: usize, tol: f64) -> Separation {
    if depth == 0 {
        return Separation::Unknown;
    }
    let mut translates = Vec::new();
    for_each_conjugator(rep, depth, |_, m| {
        translates.push(*m);
        false
    });
    separates_hulls(hi, hj, hk, &translates, tol)
}

/// Angle helper for tests and callers building hulls by hand.
pub fn hull_of_points(anchor: &str, pts: &[f64]) -> LimitHull {
    let mut points: Vec<f64> = pts.iter().map(|&p| p.rem_euclid(TAU)).collect();
    points.sort_by(f64::total_cmp);
    LimitHull {
        anchor: anchor.to_string(),
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::GEOM_TOL;

    fn rep() -> FuchsianRep {
        FuchsianRep::new(2).unwrap()
    }

    fn orbit(s: &str) -> OrbitProxy {
        OrbitProxy::new(GroupWord::parse(2, s).unwrap(), 1, &rep()).unwrap()
    }

    #[test]
    fn simple_orbit_is_not_self_transverse() {
        let a = orbit("a1");
        let r = dynamically_transverse(&a, &a, &rep(), 4, GEOM_TOL).unwrap();
        assert!(!r.is_yes());
    }

    #[test]
    fn a_and_b_are_transverse_both_ways() {
        let (a, b) = (orbit("a1"), orbit("b1"));
        assert!(dynamically_transverse(&a, &b, &rep(), 2, GEOM_TOL).unwrap().is_yes());
        assert!(dynamically_transverse(&b, &a, &rep(), 2, GEOM_TOL).unwrap().is_yes());
    }

    #[test]
    fn disjoint_simple_orbits_form_two_classes() {
        let p = partition(&[orbit("a1"), orbit("a2")], &rep(), 3, GEOM_TOL).unwrap();
        assert_eq!(p.classes.len(), 2);
        assert!(p.classes.iter().all(|c| !c.chaotic));
    }

    #[test]
    fn figure_eight_alone_is_chaotic() {
        let p = partition(&[orbit("a1 b1 a1 B1")], &rep(), 3, GEOM_TOL).unwrap();
        assert_eq!(p.classes.len(), 1);
        assert!(p.classes[0].chaotic);
    }

    #[test]
    fn transverse_partner_merges() {
        let p = partition(&[orbit("a1"), orbit("a2"), orbit("b1")], &rep(), 3, GEOM_TOL).unwrap();
        assert_eq!(p.class_of, vec![0, 1, 0]);
        assert!(p.classes[0].chaotic);
        assert!(!p.classes[1].chaotic);
    }

    #[test]
    fn conjugate_roots_merge_with_flag() {
        let p = partition(&[orbit("a1"), orbit("b2 A1 B2")], &rep(), 1, GEOM_TOL).unwrap();
        assert_eq!(p.classes.len(), 1);
        assert_eq!(p.classes[0].conjugacy_merged, vec![1]);
    }

    #[test]
    fn partition_refines_as_depth_drops() {
        let orbits = [orbit("a1"), orbit("b1"), orbit("a2"), orbit("a1 a2")];
        let coarse = partition(&orbits, &rep(), 3, GEOM_TOL).unwrap();
        for l in 0..3 {
            let fine = partition(&orbits, &rep(), l, GEOM_TOL).unwrap();
            for i in 0..orbits.len() {
                for j in 0..orbits.len() {
                    if fine.class_of[i] == fine.class_of[j] {
                        assert_eq!(coarse.class_of[i], coarse.class_of[j]);
                    }
                }
            }
        }
    }

    #[test]
    fn simple_geodesic_hull_has_two_points() {
        let w = [GroupWord::parse(2, "a1").unwrap()];
        let h = limit_hull(&w, &rep(), 4, GEOM_TOL).unwrap();
        assert_eq!(h.points.len(), 2);
    }

    #[test]
    fn crossing_axes_give_quadrilateral() {
        let a = OrientedGeodesic::new(0.0, 3.0).unwrap();
        let b = OrientedGeodesic::new(1.5, 4.5).unwrap();
        let far = OrientedGeodesic::new(5.0, 5.5).unwrap();
        let pts = hull_from_axes(&a, &[b, far], GEOM_TOL);
        assert_eq!(pts.len(), 4);
    }

    #[test]
    fn hull_grows_with_depth() {
        let w = [GroupWord::parse(2, "a1").unwrap(), GroupWord::parse(2, "b1").unwrap()];
        let mut prev: Vec<f64> = Vec::new();
        for l in 0..=3 {
            let h = limit_hull(&w, &rep(), l, GEOM_TOL).unwrap();
            for p in &prev {
                assert!(h.points.iter().any(|q| angle_dist(*p, *q) < 1e-9));
            }
            prev = h.points;
        }
    }

    #[test]
    fn separation_on_hand_hulls() {
        let hi = hull_of_points("i", &[0.1, 0.3]);
        let hj = hull_of_points("j", &[1.0, 4.0]);
        let hk = hull_of_points("k", &[2.0, 2.5]);
        let id = [Isometry::identity()];
        assert_eq!(separates_hulls(&hi, &hj, &hk, &id, GEOM_TOL), Separation::Yes);
        let hj_far = hull_of_points("j", &[5.0, 5.5]);
        assert_eq!(separates_hulls(&hi, &hj_far, &hk, &id, GEOM_TOL), Separation::No);
        assert_eq!(separates_hulls(&hi, &hj, &hk, &[], GEOM_TOL), Separation::Unknown);
        assert_eq!(separates(&hi, &hj, &hk, &rep(), 0, GEOM_TOL), Separation::Unknown);
    }
}
