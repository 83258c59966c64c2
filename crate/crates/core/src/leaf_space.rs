//! Chord model of a lifted foliation.
//!
//! A leaf is an oriented chord of the unit disk, stored as a pair of
//! boundary angles (tail, head). Its left side `L` is the region to the left
//! when travelling from tail to head; on the circle that is the
//! counter-clockwise arc from head to tail. A transverse path is a sequence
//! of leaves whose left sides strictly increase.
//!
//! "Above relative to a leaf" is read off the boundary: two leaves lying on
//! the same side of a pivot cut off disjoint arcs of that side, and the one
//! whose arc is closer to the pivot's head is above. The chord model lives in
//! a single universal cover; no quotient foliation is represented.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::horseshoe_graph::{Edge, Horseshoe};
use crate::hyperbolic::{angle_dist, classify, norm_angle, Isometry, IsometryKind};
use crate::surface_group::GroupWord;

/// Angular tolerance for leaf equality.
pub const LEAF_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LeafError {
    #[error("leaf endpoints coincide")]
    DegenerateLeaf,
    #[error("leaves {0} and {1} cross")]
    Crossing(usize, usize),
    #[error("leaves are not on the same side of the reference leaf")]
    WrongSide,
    #[error("leaves are nested, not side by side")]
    Nested,
    #[error("path leaves {0} and {1} are not strictly nested")]
    NotNested(usize, usize),
    #[error("pivot leaves differ")]
    PivotMismatch,
    #[error("pivot index out of range")]
    BadIndex,
    #[error("no transverse intersection at the given pivots")]
    NoIntersection,
    #[error("isometry is not hyperbolic")]
    NotHyperbolic,
    #[error("admissible path order must be at least 1")]
    ZeroOrder,
    #[error("invalid witness: {0}")]
    BadWitness(String),
    #[error("k must be at least {0}")]
    SmallPower(usize),
}

/// An oriented chord.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Leaf {
    pub tail: f64,
    pub head: f64,
}

/// Counter-clockwise length of the arc from `a` to `b`.
fn ccw(a: f64, b: f64) -> f64 {
    (b - a).rem_euclid(TAU)
}

/// An arc of the circle, counter-clockwise from `start`, of length `len`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Arc {
    start: f64,
    len: f64,
}

impl Arc {
    fn offset(&self, t: f64) -> f64 {
        ccw(self.start, t)
    }

    /// `t` lies in the closed arc, with tolerance.
    fn contains(&self, t: f64, tol: f64) -> bool {
        let o = self.offset(t);
        o <= self.len + tol || o >= TAU - tol
    }

    fn contains_arc(&self, o: &Arc, tol: f64) -> bool {
        self.contains(o.start, tol)
            && self.contains(o.start + o.len, tol)
            && {
                // the start must come before the end inside self
                let a = self.offset(o.start);
                let a = if a >= TAU - tol { 0.0 } else { a };
                a + o.len <= self.len + tol
            }
    }
}

impl Leaf {
    pub fn new(tail: f64, head: f64) -> Result<Self, LeafError> {
        let (t, h) = (norm_angle(tail), norm_angle(head));
        if angle_dist(t, h) < LEAF_TOL {
            return Err(LeafError::DegenerateLeaf);
        }
        Ok(Leaf { tail: t, head: h })
    }

    /// Leaf whose left arc runs counter-clockwise from `from` to `to`.
    pub fn with_left_arc(from: f64, to: f64) -> Result<Self, LeafError> {
        Leaf::new(to, from)
    }

    /// Leaf whose right arc runs counter-clockwise from `from` to `to`.
    pub fn with_right_arc(from: f64, to: f64) -> Result<Self, LeafError> {
        Leaf::new(from, to)
    }

    fn left_arc(&self) -> Arc {
        Arc {
            start: self.head,
            len: ccw(self.head, self.tail),
        }
    }

    fn right_arc(&self) -> Arc {
        Arc {
            start: self.tail,
            len: ccw(self.tail, self.head),
        }
    }

    pub fn approx_eq(&self, o: &Leaf) -> bool {
        angle_dist(self.tail, o.tail) < LEAF_TOL && angle_dist(self.head, o.head) < LEAF_TOL
    }

    pub fn apply(&self, m: &Isometry) -> Leaf {
        Leaf {
            tail: m.act_boundary(self.tail),
            head: m.act_boundary(self.head),
        }
    }

    /// Transverse crossing of the chords (strict interleaving).
    pub fn crosses(&self, o: &Leaf) -> bool {
        let a = self.right_arc();
        let strictly_in = |t: f64| {
            let x = a.offset(t);
            x > LEAF_TOL && x < a.len - LEAF_TOL
        };
        let shared = [o.tail, o.head]
            .iter()
            .any(|&t| angle_dist(t, self.tail) < LEAF_TOL || angle_dist(t, self.head) < LEAF_TOL);
        !shared && strictly_in(o.tail) != strictly_in(o.head)
    }

    /// `L(self)` is a subset of `L(o)`, tolerance included.
    fn left_within(&self, o: &Leaf) -> bool {
        !self.crosses(o) && o.left_arc().contains_arc(&self.left_arc(), LEAF_TOL)
    }

    /// Strict inclusion `L(self) ⊊ L(o)`.
    pub fn strictly_left_of(&self, o: &Leaf) -> bool {
        self.left_within(o) && !self.approx_eq(o)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Left,
    Right,
}

/// Side of `pivot` containing the chord `leaf`, if it lies on one side.
fn side_of(leaf: &Leaf, pivot: &Leaf) -> Option<Side> {
    if leaf.crosses(pivot) {
        return None;
    }
    let l = pivot.left_arc();
    let r = pivot.right_arc();
    let strict = |a: &Arc, t: f64| {
        let o = a.offset(t);
        o > LEAF_TOL && o < a.len - LEAF_TOL
    };
    let ends = [leaf.tail, leaf.head];
    if ends.iter().any(|&t| strict(&l, t)) {
        Some(Side::Left)
    } else if ends.iter().any(|&t| strict(&r, t)) {
        Some(Side::Right)
    } else {
        None
    }
}

/// Position of `t` along the side arc of `pivot`, normalized so that the
/// pivot's tail is 0 and its head is 1.
fn position(pivot: &Leaf, side: Side, t: f64) -> f64 {
    match side {
        Side::Left => {
            let a = pivot.left_arc();
            1.0 - a.offset(t) / a.len
        }
        Side::Right => {
            let a = pivot.right_arc();
            a.offset(t) / a.len
        }
    }
}

/// Is `l1` above `l2` relative to `pivot`?
///
/// Both leaves must be disjoint from each other and from the pivot and must
/// sit side by side on the same side of it.
pub fn is_above(l1: &Leaf, l2: &Leaf, pivot: &Leaf) -> Result<bool, LeafError> {
    if l1.crosses(l2) {
        return Err(LeafError::Crossing(1, 2));
    }
    if l1.crosses(pivot) {
        return Err(LeafError::Crossing(1, 3));
    }
    if l2.crosses(pivot) {
        return Err(LeafError::Crossing(2, 3));
    }
    let s1 = side_of(l1, pivot).ok_or(LeafError::WrongSide)?;
    let s2 = side_of(l2, pivot).ok_or(LeafError::WrongSide)?;
    if s1 != s2 {
        return Err(LeafError::WrongSide);
    }
    let span = |l: &Leaf| {
        let (a, b) = (position(pivot, s1, l.tail), position(pivot, s1, l.head));
        (a.min(b), a.max(b))
    };
    let (lo1, hi1) = span(l1);
    let (lo2, hi2) = span(l2);
    if lo1 >= hi2 - 1e-12 {
        Ok(true)
    } else if lo2 >= hi1 - 1e-12 {
        Ok(false)
    } else {
        Err(LeafError::Nested)
    }
}

/// A positively transverse path: left sides strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversePath {
    leaves: Vec<Leaf>,
}

impl TransversePath {
    pub fn new(leaves: Vec<Leaf>) -> Result<Self, LeafError> {
        for i in 0..leaves.len() {
            for j in i + 1..leaves.len() {
                if !leaves[i].strictly_left_of(&leaves[j]) {
                    return Err(LeafError::NotNested(i, j));
                }
            }
        }
        Ok(TransversePath { leaves })
    }

    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    pub fn len(&self) -> usize {
        self.leaves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn apply(&self, m: &Isometry) -> TransversePath {
        TransversePath {
            leaves: self.leaves.iter().map(|l| l.apply(m)).collect(),
        }
    }

    fn contains_leaf(&self, l: &Leaf) -> bool {
        self.leaves.iter().any(|x| x.approx_eq(l))
    }
}

/// Do the two paths meet the same leaves?
pub fn path_equivalent(p1: &TransversePath, p2: &TransversePath) -> bool {
    p1.leaves.iter().all(|l| p2.contains_leaf(l)) && p2.leaves.iter().all(|l| p1.contains_leaf(l))
}

fn one_sided(p1: &TransversePath, t1: usize, p2: &TransversePath, t2: usize) -> bool {
    let pivot = &p2.leaves[t2];
    let above = |x: &Leaf, y: &Leaf| is_above(x, y, pivot) == Ok(true);
    let before = (0..t1).any(|a1| (0..t2).any(|a2| above(&p1.leaves[a1], &p2.leaves[a2])));
    let after = (t1 + 1..p1.len())
        .any(|b1| (t2 + 1..p2.len()).any(|b2| above(&p2.leaves[b2], &p1.leaves[b1])));
    before && after
}

/// Do `p1` and `p2` intersect transversally in the leaf space at the
/// shared leaf `p1[t1] = p2[t2]`?
///
/// One path must enter the pivot above the other and leave it below. The
/// scan is exhaustive over index pairs on both sides of the pivot and is
/// run in both directions, so the predicate is symmetric.
pub fn f_transverse_intersection(
    p1: &TransversePath,
    t1: usize,
    p2: &TransversePath,
    t2: usize,
) -> Result<bool, LeafError> {
    if t1 >= p1.len() || t2 >= p2.len() {
        return Err(LeafError::BadIndex);
    }
    if !p1.leaves[t1].approx_eq(&p2.leaves[t2]) {
        return Err(LeafError::PivotMismatch);
    }
    Ok(one_sided(p1, t1, p2, t2) || one_sided(p2, t2, p1, t1))
}

/// First index pair `(t1, t2)` at which `p` and `T p` intersect
/// transversally, with `p[t1] = T p[t2]`.
pub fn self_transverse_with_deck(
    p: &TransversePath,
    t: &Isometry,
) -> Result<Option<(usize, usize)>, LeafError> {
    if classify(t) != IsometryKind::Hyperbolic {
        return Err(LeafError::NotHyperbolic);
    }
    let tp = p.apply(t);
    for t1 in 0..p.len() {
        for t2 in 0..tp.len() {
            if p.leaves[t1].approx_eq(&tp.leaves[t2]) && f_transverse_intersection(p, t1, &tp, t2)? {
                return Ok(Some((t1, t2)));
            }
        }
    }
    Ok(None)
}

/// A transverse path together with its (trusted) admissibility order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissiblePath {
    pub path: TransversePath,
    pub order: u64,
}

impl AdmissiblePath {
    pub fn new(path: TransversePath, order: u64) -> Result<Self, LeafError> {
        if order == 0 {
            return Err(LeafError::ZeroOrder);
        }
        Ok(AdmissiblePath { path, order })
    }
}

/// Concatenates `a1` up to its leaf `t` with `a2` from its leaf `s` on.
/// The orders add.
pub fn force_concatenate(
    a1: &AdmissiblePath,
    t: usize,
    a2: &AdmissiblePath,
    s: usize,
) -> Result<AdmissiblePath, LeafError> {
    if !f_transverse_intersection(&a1.path, t, &a2.path, s)? {
        return Err(LeafError::NoIntersection);
    }
    let mut leaves = a1.path.leaves[..=t].to_vec();
    leaves.extend_from_slice(&a2.path.leaves[s + 1..]);
    let path = TransversePath::new(leaves)?;
    AdmissiblePath::new(path, a1.order + a2.order)
}

/// Horseshoe produced by an admissible path that meets a deck translate of
/// itself transversally: period `k r`, deck words `T, T^2, ..., T^k`.
pub fn extract_horseshoe(
    id: &str,
    a: &AdmissiblePath,
    word: &GroupWord,
    deck: &Isometry,
    k: usize,
    witness: (usize, usize),
) -> Result<Horseshoe, LeafError> {
    if k < 1 {
        return Err(LeafError::SmallPower(1));
    }
    check_witness(a, deck, witness)?;
    let decks = (1..=k as i64).map(|j| word.pow(j)).collect();
    Ok(Horseshoe {
        id: id.to_string(),
        period: k as u64 * a.order,
        decks,
    })
}

fn check_witness(a: &AdmissiblePath, deck: &Isometry, (t, s): (usize, usize)) -> Result<(), LeafError> {
    if classify(deck) != IsometryKind::Hyperbolic {
        return Err(LeafError::NotHyperbolic);
    }
    if s >= t {
        return Err(LeafError::BadWitness(format!("need s < t, got ({t}, {s})")));
    }
    let tp = a.path.apply(deck);
    if t >= a.path.len() || s >= tp.len() || !a.path.leaves[t].approx_eq(&tp.leaves[s]) {
        return Err(LeafError::BadWitness(format!("leaves ({t}, {s}) do not match")));
    }
    if !f_transverse_intersection(&a.path, t, &tp, s)? {
        return Err(LeafError::BadWitness(format!("no transverse intersection at ({t}, {s})")));
    }
    Ok(())
}

/// Inputs describing one half of a connection.
pub struct ConnectionHalf<'a> {
    pub path: &'a AdmissiblePath,
    pub deck: &'a Isometry,
    pub k: usize,
    pub witness: (usize, usize),
}

/// Edge from the `k1`-horseshoe of the first half to the `k2`-horseshoe of
/// the second, labelled `n = k1 r1 + r1 + r2` with the identity word.
pub fn extract_connection(
    genus: usize,
    from: &str,
    to: &str,
    first: &ConnectionHalf<'_>,
    second: &ConnectionHalf<'_>,
) -> Result<Edge, LeafError> {
    if first.k < 2 || second.k < 2 {
        return Err(LeafError::SmallPower(2));
    }
    let last = first.path.path.leaves.last().ok_or(LeafError::BadIndex)?;
    let head = second.path.path.leaves.first().ok_or(LeafError::BadIndex)?;
    if !last.approx_eq(head) {
        return Err(LeafError::BadWitness("halves do not share the split leaf".into()));
    }
    check_witness(first.path, first.deck, first.witness)?;
    check_witness(second.path, second.deck, second.witness)?;
    let (r1, r2) = (first.path.order, second.path.order);
    Ok(Edge {
        from: from.to_string(),
        to: to.to_string(),
        n: first.k as u64 * r1 + r1 + r2,
        word: GroupWord::identity(genus),
    })
}

/// Parses the chord-path text format: one leaf per line as `tail head`
/// (radians), paths separated by blank lines, `#` comments, and optional
/// `deck <word>` lines.
pub fn parse_chord_file(text: &str) -> Result<(Vec<Vec<Leaf>>, Vec<String>), String> {
    let mut paths = Vec::new();
    let mut decks = Vec::new();
    let mut cur = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if !cur.is_empty() {
                paths.push(std::mem::take(&mut cur));
            }
            continue;
        }
        if let Some(w) = line.strip_prefix("deck") {
            decks.push(w.trim().to_string());
            continue;
        }
        let nums: Vec<f64> = line
            .split_whitespace()
            .map(|x| x.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| format!("line {}: {e}", ln + 1))?;
        if nums.len() != 2 {
            return Err(format!("line {}: expected two angles", ln + 1));
        }
        cur.push(Leaf::new(nums[0], nums[1]).map_err(|e| format!("line {}: {e}", ln + 1))?);
    }
    if !cur.is_empty() {
        paths.push(cur);
    }
    Ok((paths, decks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn la(a: f64, b: f64) -> Leaf {
        Leaf::with_left_arc(a * PI, b * PI).unwrap()
    }
    fn ra(a: f64, b: f64) -> Leaf {
        Leaf::with_right_arc(a * PI, b * PI).unwrap()
    }

    fn pivot() -> Leaf {
        Leaf::new(1.5 * PI, 0.5 * PI).unwrap()
    }

    #[test]
    fn above_on_left_side() {
        let p = pivot();
        // left side of the pivot is the arc from pi/2 to 3pi/2
        let near_head = la(0.6, 0.8);
        let near_tail = la(1.2, 1.4);
        assert_eq!(is_above(&near_head, &near_tail, &p), Ok(true));
        assert_eq!(is_above(&near_tail, &near_head, &p), Ok(false));
        let crossing = Leaf::new(0.0, PI).unwrap();
        assert!(matches!(is_above(&crossing, &near_tail, &p), Err(LeafError::Crossing(1, 3))));
        let nested = la(0.55, 0.9);
        assert_eq!(is_above(&near_head, &nested, &p), Err(LeafError::Nested));
        assert_eq!(is_above(&near_head, &ra(1.6, 1.8), &p), Err(LeafError::WrongSide));
    }

    #[test]
    fn nesting_invariant() {
        let ok = TransversePath::new(vec![la(0.6, 0.9), la(0.55, 1.0), pivot(), ra(1.6, 1.8)]);
        assert!(ok.is_ok());
        let bad = TransversePath::new(vec![la(0.55, 1.0), la(0.6, 0.9)]);
        assert_eq!(bad, Err(LeafError::NotNested(0, 1)));
    }

    fn crossing_pair() -> (TransversePath, TransversePath) {
        let p1 = TransversePath::new(vec![la(0.6, 0.9), la(0.55, 1.0), pivot(), ra(1.55, 1.85), ra(1.6, 1.8)])
            .unwrap();
        let p2 = TransversePath::new(vec![la(1.1, 1.4), la(1.05, 1.45), pivot(), ra(0.15, 0.45), ra(0.2, 0.4)])
            .unwrap();
        (p1, p2)
    }

    #[test]
    fn transverse_configuration() {
        let (p1, p2) = crossing_pair();
        assert_eq!(f_transverse_intersection(&p1, 2, &p2, 2), Ok(true));
        assert_eq!(f_transverse_intersection(&p2, 2, &p1, 2), Ok(true));
        assert_eq!(f_transverse_intersection(&p1, 2, &p1, 2), Ok(false));
        assert_eq!(f_transverse_intersection(&p1, 0, &p2, 2), Err(LeafError::PivotMismatch));
    }

    #[test]
    fn equivalence() {
        let (p1, p2) = crossing_pair();
        assert!(path_equivalent(&p1, &p1.clone()));
        assert!(!path_equivalent(&p1, &p2));
        let shorter = TransversePath::new(p1.leaves()[1..].to_vec()).unwrap();
        assert!(!path_equivalent(&p1, &shorter));
    }

    #[test]
    fn concatenation_adds_orders() {
        let (p1, p2) = crossing_pair();
        let a1 = AdmissiblePath::new(p1, 2).unwrap();
        let a2 = AdmissiblePath::new(p2, 3).unwrap();
        let c = force_concatenate(&a1, 2, &a2, 2).unwrap();
        assert_eq!(c.order, 5);
        assert_eq!(c.path.len(), 5);
        for l in c.path.leaves() {
            assert!(a1.path.contains_leaf(l) || a2.path.contains_leaf(l));
        }
        let same = force_concatenate(&a1, 2, &a1, 2);
        assert_eq!(same, Err(LeafError::NoIntersection));
    }

    #[test]
    fn chord_file_parsing() {
        let text = "# two paths\ndeck a1\n0.1 0.2\n0.3 0.4\n\n1 2\n";
        let (paths, decks) = parse_chord_file(text).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(paths[0].len(), 2);
        assert_eq!(decks, vec!["a1".to_string()]);
        assert!(parse_chord_file("0.1\n").is_err());
    }
}
