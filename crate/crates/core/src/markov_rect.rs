//! Planar Markov rectangles and itinerary points of piecewise-linear maps.
//!
//! Everything here is exact rational geometry. A rectangle is a simple
//! polygon with four marked boundary arcs in cyclic order: bottom,
//! vertical `A`, top, vertical `B`. Intersections are only decided in the
//! normal form where the second rectangle is the unit square.

use std::cmp::Ordering;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{format_rational, parse_rational, to_f64, ParseRationalError, Rational};

pub type Pt = [Rational; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkovError {
    #[error("polygon needs at least 4 vertices")]
    TooFewVertices,
    #[error("corner indices must be strictly increasing and in range")]
    BadCorners,
    #[error("polygon is not simple (edges {0} and {1})")]
    NotSimple(usize, usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("second rectangle is not the unit square in standard position")]
    NotUnitSquare,
    #[error("rectangle is not an axis-aligned box with standard marks")]
    NotAxisAligned,
    #[error("intersection is not Markovian")]
    NotMarkovian,
    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),
    #[error("triangles {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("images of triangles {0} and {1} overlap")]
    NotInjective(usize, usize),
    #[error("triangles {0} and {1} disagree on a shared vertex")]
    Discontinuous(usize, usize),
    #[error("vertex of triangle {0} lies inside an edge of triangle {1}")]
    NonConforming(usize, usize),
    #[error("map mixes orientation-preserving and reversing pieces")]
    MixedOrientation,
    #[error("point outside the map domain")]
    OutsideDomain,
    #[error("chain needs one more rectangle than maps")]
    ChainShape,
    #[error("step {0}: image of the previous rectangle does not cross Markovianly")]
    Precondition(usize),
    #[error("no itinerary survives step {0}")]
    PruneExhausted(usize),
    #[error("subdivision did not reach the tolerance")]
    Subdivision,
    #[error(transparent)]
    Parse(#[from] ParseRationalError),
}

fn sub(a: &Pt, b: &Pt) -> Pt {
    [&a[0] - &b[0], &a[1] - &b[1]]
}

fn cross(o: &Pt, a: &Pt, b: &Pt) -> Rational {
    let (u, v) = (sub(a, o), sub(b, o));
    &u[0] * &v[1] - &u[1] * &v[0]
}

fn twice_area(poly: &[Pt]) -> Rational {
    let n = poly.len();
    let mut s = Rational::zero();
    for i in 0..n {
        let (p, q) = (&poly[i], &poly[(i + 1) % n]);
        s += &p[0] * &q[1] - &q[0] * &p[1];
    }
    s
}

/// Point on the closed segment `[a, b]`, assuming collinearity.
fn on_segment(p: &Pt, a: &Pt, b: &Pt) -> bool {
    let within = |k: usize| {
        let (lo, hi) = if a[k] <= b[k] { (&a[k], &b[k]) } else { (&b[k], &a[k]) };
        &p[k] >= lo && &p[k] <= hi
    };
    within(0) && within(1)
}

fn segments_touch(a: &Pt, b: &Pt, c: &Pt, d: &Pt) -> bool {
    let d1 = cross(c, d, a).signum();
    let d2 = cross(c, d, b).signum();
    let d3 = cross(a, b, c).signum();
    let d4 = cross(a, b, d).signum();
    if d1 != d2 && d3 != d4 && !d1.is_zero() && !d2.is_zero() && !d3.is_zero() && !d4.is_zero() {
        return true;
    }
    (d1.is_zero() && on_segment(a, c, d))
        || (d2.is_zero() && on_segment(b, c, d))
        || (d3.is_zero() && on_segment(c, a, b))
        || (d4.is_zero() && on_segment(d, a, b))
}

/// Parameter `t` in `(0, 1)` where `[a, b]` properly crosses the line
/// through `[c, d]` inside that segment.
fn crossing_param(a: &Pt, b: &Pt, c: &Pt, d: &Pt) -> Option<Rational> {
    let r = sub(b, a);
    let s = sub(d, c);
    let denom = &r[0] * &s[1] - &r[1] * &s[0];
    if denom.is_zero() {
        return None;
    }
    let ca = sub(c, a);
    let t = (&ca[0] * &s[1] - &ca[1] * &s[0]) / &denom;
    let u = (&ca[0] * &r[1] - &ca[1] * &r[0]) / &denom;
    let zero = Rational::zero();
    let one = Rational::one();
    (t > zero && t < one && u >= zero && u <= one).then_some(t)
}

fn lerp(a: &Pt, b: &Pt, t: &Rational) -> Pt {
    [&a[0] + (&b[0] - &a[0]) * t, &a[1] + (&b[1] - &a[1]) * t]
}

/// A simple polygon with marked sides. Corners `c0 < c1 < c2 < c3` split
/// the boundary into bottom `c0..c1`, `A` `c1..c2`, top `c2..c3` and `B`
/// `c3..c0` (wrapping).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLRectangle {
    vertices: Vec<Pt>,
    corners: [usize; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Arc {
    Bottom,
    A,
    Top,
    B,
}

impl PLRectangle {
    pub fn new(vertices: Vec<Pt>, corners: [usize; 4]) -> Result<Self, MarkovError> {
        let n = vertices.len();
        if n < 4 {
            return Err(MarkovError::TooFewVertices);
        }
        if !(corners[0] < corners[1] && corners[1] < corners[2] && corners[2] < corners[3] && corners[3] < n) {
            return Err(MarkovError::BadCorners);
        }
        for i in 0..n {
            let (a, b) = (&vertices[i], &vertices[(i + 1) % n]);
            if a == b {
                return Err(MarkovError::NotSimple(i, i));
            }
            for j in i + 1..n {
                let (c, d) = (&vertices[j], &vertices[(j + 1) % n]);
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // shared endpoint only: no backtracking along a line
                    let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                    if cross(shared, p, q).is_zero() {
                        let u = sub(p, shared);
                        let v = sub(q, shared);
                        if (&u[0] * &v[0] + &u[1] * &v[1]).is_positive() {
                            return Err(MarkovError::NotSimple(i, j));
                        }
                    }
                } else if segments_touch(a, b, c, d) {
                    return Err(MarkovError::NotSimple(i, j));
                }
            }
        }
        if twice_area(&vertices).is_zero() {
            return Err(MarkovError::ZeroArea);
        }
        Ok(PLRectangle { vertices, corners })
    }

    /// `[x0, x1] x [y0, y1]` with bottom at `y0`.
    pub fn axis_box(x0: Rational, x1: Rational, y0: Rational, y1: Rational) -> Result<Self, MarkovError> {
        PLRectangle::new(
            vec![
                [x0.clone(), y0.clone()],
                [x1.clone(), y0],
                [x1, y1.clone()],
                [x0, y1],
            ],
            [0, 1, 2, 3],
        )
    }

    pub fn unit_square() -> Self {
        PLRectangle::axis_box(Rational::zero(), Rational::one(), Rational::zero(), Rational::one()).expect("unit square")
    }

    pub fn vertices(&self) -> &[Pt] {
        &self.vertices
    }

    pub fn corners(&self) -> [usize; 4] {
        self.corners
    }

    fn arc_of_edge(&self, e: usize) -> Arc {
        let [c0, c1, c2, c3] = self.corners;
        let in_range = |from: usize, to: usize| if from <= to { e >= from && e < to } else { e >= from || e < to };
        if in_range(c0, c1) {
            Arc::Bottom
        } else if in_range(c1, c2) {
            Arc::A
        } else if in_range(c2, c3) {
            Arc::Top
        } else {
            Arc::B
        }
    }

    /// Vertices of an arc, corners included, in boundary order.
    fn arc(&self, which: Arc) -> Vec<Pt> {
        let n = self.vertices.len();
        let [c0, c1, c2, c3] = self.corners;
        let (from, to) = match which {
            Arc::Bottom => (c0, c1),
            Arc::A => (c1, c2),
            Arc::Top => (c2, c3),
            Arc::B => (c3, c0 + n),
        };
        (from..=to).map(|i| self.vertices[i % n].clone()).collect()
    }

    pub fn bottom(&self) -> Vec<Pt> {
        self.arc(Arc::Bottom)
    }

    pub fn top(&self) -> Vec<Pt> {
        self.arc(Arc::Top)
    }

    pub fn side_a(&self) -> Vec<Pt> {
        self.arc(Arc::A)
    }

    pub fn side_b(&self) -> Vec<Pt> {
        self.arc(Arc::B)
    }

    /// `Some((x0, x1, y0, y1))` for a four-vertex axis-aligned box with
    /// bottom at the lower `y`.
    pub fn as_box(&self) -> Option<(Rational, Rational, Rational, Rational)> {
        if self.vertices.len() != 4 {
            return None;
        }
        let v = &self.vertices;
        let b = [self.bottom(), self.top()];
        let horizontal = |s: &[Pt]| s.len() == 2 && s[0][1] == s[1][1];
        if !horizontal(&b[0]) || !horizontal(&b[1]) || b[0][0][1] >= b[1][0][1] {
            return None;
        }
        let xs: Vec<&Rational> = v.iter().map(|p| &p[0]).collect();
        let x0 = (*xs.iter().min()?).clone();
        let x1 = (*xs.iter().max()?).clone();
        let (y0, y1) = (b[0][0][1].clone(), b[1][0][1].clone());
        let is_box = v.iter().all(|p| (p[0] == x0 || p[0] == x1) && (p[1] == y0 || p[1] == y1)) && x0 < x1;
        is_box.then_some((x0, x1, y0, y1))
    }

    pub fn map_points(&self, f: impl Fn(&Pt) -> Pt) -> Result<PLRectangle, MarkovError> {
        PLRectangle::new(self.vertices.iter().map(f).collect(), self.corners)
    }

    fn is_unit_square(&self) -> bool {
        self.as_box() == Some((Rational::zero(), Rational::one(), Rational::zero(), Rational::one()))
    }

    /// Strict interior test (exact, even-odd with boundary excluded).
    pub fn contains_interior(&self, p: &Pt) -> bool {
        let n = self.vertices.len();
        let mut inside = false;
        for i in 0..n {
            let (a, b) = (&self.vertices[i], &self.vertices[(i + 1) % n]);
            if cross(a, b, p).is_zero() && on_segment(p, a, b) {
                return false;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                // x of the edge at height p.y
                let x = &a[0] + (&b[0] - &a[0]) * (&p[1] - &a[1]) / (&b[1] - &a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

/// Rescales `r1` and `r2` so that the axis-aligned `r2` becomes the unit
/// square.
pub fn normalize(r1: &PLRectangle, r2: &PLRectangle) -> Result<(PLRectangle, PLRectangle), MarkovError> {
    let (x0, x1, y0, y1) = r2.as_box().ok_or(MarkovError::NotAxisAligned)?;
    let (w, h) = (&x1 - &x0, &y1 - &y0);
    let f = |p: &Pt| [(&p[0] - &x0) / &w, (&p[1] - &y0) / &h];
    Ok((r1.map_points(f)?, r2.map_points(f)?))
}

/// Points whose `x` values bound `r ∩ {lo <= y <= hi}`: vertices in the
/// band and crossings of edges with the band's boundary lines.
fn band_points(r: &PLRectangle, lo: &Rational, hi: &Rational) -> Vec<Pt> {
    let n = r.vertices.len();
    let mut out: Vec<Pt> = r
        .vertices
        .iter()
        .filter(|p| &p[1] >= lo && &p[1] <= hi)
        .cloned()
        .collect();
    for i in 0..n {
        let (a, b) = (&r.vertices[i], &r.vertices[(i + 1) % n]);
        for level in [lo, hi] {
            if (&a[1] < level && &b[1] > level) || (&a[1] > level && &b[1] < level) {
                let t = (level - &a[1]) / (&b[1] - &a[1]);
                out.push(lerp(a, b, &t));
            }
        }
    }
    out
}

fn check_unit(r2: &PLRectangle) -> Result<(), MarkovError> {
    if r2.is_unit_square() {
        Ok(())
    } else {
        Err(MarkovError::NotUnitSquare)
    }
}

/// Horizontal sides strictly on opposite sides of the band and the band
/// part of `r1` inside the square. `r2` must be the unit square.
pub fn is_pre_markovian(r1: &PLRectangle, r2: &PLRectangle) -> Result<bool, MarkovError> {
    check_unit(r2)?;
    let (zero, one) = (Rational::zero(), Rational::one());
    let above = |s: &[Pt]| s.iter().all(|p| p[1] > one);
    let below = |s: &[Pt]| s.iter().all(|p| p[1] < zero);
    let (b, t) = (r1.bottom(), r1.top());
    if !((above(&t) && below(&b)) || (above(&b) && below(&t))) {
        return Ok(false);
    }
    Ok(band_points(r1, &zero, &one).iter().all(|p| p[0] >= zero && p[0] <= one))
}

/// A cross-cut of `r1` from a point of `B` to a point of `A`.
#[derive(Debug, Clone)]
struct Cut {
    /// Position along `A` (edge offset from `c1`, parameter).
    a_pos: (usize, Rational),
    /// Position along `B` (edge offset from `c3`, parameter).
    b_pos: (usize, Rational),
    /// From the `B` end to the `A` end.
    path: Vec<Pt>,
}

fn pos_cmp(x: &(usize, Rational), y: &(usize, Rational)) -> Ordering {
    x.0.cmp(&y.0).then_with(|| x.1.cmp(&y.1))
}

fn arc_offset(r: &PLRectangle, e: usize, arc: Arc) -> usize {
    let n = r.vertices.len();
    let start = match arc {
        Arc::A => r.corners[1],
        Arc::B => r.corners[3],
        Arc::Bottom => r.corners[0],
        Arc::Top => r.corners[2],
    };
    (e + n - start) % n
}

fn horizontal_cuts(r: &PLRectangle, level: &Rational) -> Vec<Cut> {
    let n = r.vertices.len();
    let mut hits: Vec<(Rational, usize, Rational)> = Vec::new();
    for e in 0..n {
        let (a, b) = (&r.vertices[e], &r.vertices[(e + 1) % n]);
        if (&a[1] < level && &b[1] > level) || (&a[1] > level && &b[1] < level) {
            let t = (level - &a[1]) / (&b[1] - &a[1]);
            let x = &a[0] + (&b[0] - &a[0]) * &t;
            hits.push((x, e, t));
        }
    }
    hits.sort_by(|p, q| p.0.cmp(&q.0));
    let mut cuts = Vec::new();
    for pair in hits.chunks(2) {
        let [(x1, e1, t1), (x2, e2, t2)] = pair else { continue };
        let (s1, s2) = (r.arc_of_edge(*e1), r.arc_of_edge(*e2));
        let (p_a, p_b) = match (s1, s2) {
            (Arc::A, Arc::B) => (((*e1, t1.clone()), x1), ((*e2, t2.clone()), x2)),
            (Arc::B, Arc::A) => (((*e2, t2.clone()), x2), ((*e1, t1.clone()), x1)),
            _ => continue,
        };
        cuts.push(Cut {
            a_pos: (arc_offset(r, p_a.0 .0, Arc::A), p_a.0 .1),
            b_pos: (arc_offset(r, p_b.0 .0, Arc::B), p_b.0 .1),
            path: vec![[p_b.1.clone(), level.clone()], [p_a.1.clone(), level.clone()]],
        });
    }
    cuts
}

/// Sub-rectangle of `r` between two disjoint cuts, `lower` first along `A`.
fn between(r: &PLRectangle, lower: &Cut, upper: &Cut) -> Result<PLRectangle, MarkovError> {
    let a = r.side_a();
    let b = r.side_b();
    let mut v: Vec<Pt> = lower.path.clone();
    let c1 = v.len() - 1;
    for (k, p) in a.iter().enumerate() {
        let pos = (k, Rational::zero());
        if pos_cmp(&pos, &lower.a_pos) == Ordering::Greater && pos_cmp(&pos, &upper.a_pos) == Ordering::Less {
            v.push(p.clone());
        }
    }
    let c2 = v.len();
    v.extend(upper.path.iter().rev().cloned());
    let c3 = v.len() - 1;
    for (k, p) in b.iter().enumerate() {
        let pos = (k, Rational::zero());
        if pos_cmp(&pos, &upper.b_pos) == Ordering::Greater && pos_cmp(&pos, &lower.b_pos) == Ordering::Less {
            v.push(p.clone());
        }
    }
    PLRectangle::new(v, [0, c1, c2, c3])
}

/// A horizontal sub-rectangle of `r1` whose intersection with the unit
/// square `r2` is pre-Markovian, if one is found among sub-rectangles cut
/// at horizontal levels outside the band.
pub fn is_markovian(r1: &PLRectangle, r2: &PLRectangle) -> Result<Option<PLRectangle>, MarkovError> {
    if is_pre_markovian(r1, r2)? {
        return Ok(Some(r1.clone()));
    }
    let (zero, one) = (Rational::zero(), Rational::one());
    let mut ys: Vec<Rational> = r1.vertices.iter().map(|p| p[1].clone()).collect();
    ys.push(zero.clone());
    ys.push(one.clone());
    ys.sort();
    ys.dedup();
    let two = Rational::from_integer(2.into());
    let levels: Vec<Rational> = ys
        .windows(2)
        .map(|w| (&w[0] + &w[1]) / &two)
        .filter(|c| c < &zero || c > &one)
        .collect();
    let a_len = r1.side_a().len() - 1;
    let b_len = r1.side_b().len() - 1;
    let bottom = Cut {
        a_pos: (0, Rational::zero()),
        b_pos: (b_len, Rational::zero()),
        path: r1.bottom(),
    };
    let top = Cut {
        a_pos: (a_len, Rational::zero()),
        b_pos: (0, Rational::zero()),
        path: r1.top().into_iter().rev().collect(),
    };
    let mut cuts = vec![bottom];
    for c in &levels {
        cuts.extend(horizontal_cuts(r1, c));
    }
    cuts.push(top);
    cuts.sort_by(|x, y| pos_cmp(&x.a_pos, &y.a_pos));
    for i in 0..cuts.len() {
        for j in i + 1..cuts.len() {
            if pos_cmp(&cuts[i].b_pos, &cuts[j].b_pos) != Ordering::Greater {
                continue;
            }
            if let Ok(sub) = between(r1, &cuts[i], &cuts[j]) {
                if is_pre_markovian(&sub, r2)? {
                    return Ok(Some(sub));
                }
            }
        }
    }
    Ok(None)
}

fn band_margin(r: &PLRectangle, e: &Rational) -> Rational {
    let lo = -e.clone();
    let hi = Rational::one() + e;
    band_points(r, &lo, &hi)
        .iter()
        .map(|p| p[0].clone().min(Rational::one() - &p[0]))
        .min()
        .unwrap_or_else(Rational::zero)
}

/// Largest `eps` such that moving every point of the witness sub-rectangle
/// by less than `eps` keeps it pre-Markovian.
pub fn perturbation_margin(r1: &PLRectangle, r2: &PLRectangle) -> Result<Rational, MarkovError> {
    let w = is_markovian(r1, r2)?.ok_or(MarkovError::NotMarkovian)?;
    let one = Rational::one();
    let (b, t) = (w.bottom(), w.top());
    let (hi_arc, lo_arc) = if t.iter().all(|p| p[1] > one) { (t, b) } else { (b, t) };
    let eps_plus = hi_arc.iter().map(|p| &p[1] - &one).min().expect("arc");
    let eps_minus = lo_arc.iter().map(|p| -p[1].clone()).min().expect("arc");
    let e0 = eps_plus.min(eps_minus).min(band_margin(&w, &Rational::zero()));
    let e = e0.clone().min(band_margin(&w, &e0));
    Ok(e.max(Rational::zero()))
}

/// An affine map `x -> L x + b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Affine {
    pub l: [[Rational; 2]; 2],
    pub b: Pt,
}

impl Affine {
    pub fn identity() -> Self {
        Affine {
            l: [[Rational::one(), Rational::zero()], [Rational::zero(), Rational::one()]],
            b: [Rational::zero(), Rational::zero()],
        }
    }

    /// The affine map taking `src[k]` to `dst[k]`.
    pub fn from_triangles(src: &[Pt; 3], dst: &[Pt; 3]) -> Option<Affine> {
        let (s1, s2) = (sub(&src[1], &src[0]), sub(&src[2], &src[0]));
        let (d1, d2) = (sub(&dst[1], &dst[0]), sub(&dst[2], &dst[0]));
        let det = &s1[0] * &s2[1] - &s2[0] * &s1[1];
        if det.is_zero() {
            return None;
        }
        // S^-1 = [[s2y, -s2x], [-s1y, s1x]] / det; L = D S^-1
        let inv = [
            [&s2[1] / &det, -(&s2[0] / &det)],
            [-(&s1[1] / &det), &s1[0] / &det],
        ];
        let l = [
            [
                &d1[0] * &inv[0][0] + &d2[0] * &inv[1][0],
                &d1[0] * &inv[0][1] + &d2[0] * &inv[1][1],
            ],
            [
                &d1[1] * &inv[0][0] + &d2[1] * &inv[1][0],
                &d1[1] * &inv[0][1] + &d2[1] * &inv[1][1],
            ],
        ];
        let a = Affine { l, b: [Rational::zero(), Rational::zero()] };
        let img = a.apply(&src[0]);
        Some(Affine {
            b: sub(&dst[0], &img),
            ..a
        })
    }

    pub fn apply(&self, p: &Pt) -> Pt {
        [
            &self.l[0][0] * &p[0] + &self.l[0][1] * &p[1] + &self.b[0],
            &self.l[1][0] * &p[0] + &self.l[1][1] * &p[1] + &self.b[1],
        ]
    }

    pub fn det(&self) -> Rational {
        &self.l[0][0] * &self.l[1][1] - &self.l[0][1] * &self.l[1][0]
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Affine) -> Affine {
        let m = &self.l;
        let n = &inner.l;
        let l = [
            [
                &m[0][0] * &n[0][0] + &m[0][1] * &n[1][0],
                &m[0][0] * &n[0][1] + &m[0][1] * &n[1][1],
            ],
            [
                &m[1][0] * &n[0][0] + &m[1][1] * &n[1][0],
                &m[1][0] * &n[0][1] + &m[1][1] * &n[1][1],
            ],
        ];
        let lb = [
            &m[0][0] * &inner.b[0] + &m[0][1] * &inner.b[1],
            &m[1][0] * &inner.b[0] + &m[1][1] * &inner.b[1],
        ];
        Affine {
            l,
            b: [&lb[0] + &self.b[0], &lb[1] + &self.b[1]],
        }
    }

    pub fn inverse(&self) -> Option<Affine> {
        let d = self.det();
        if d.is_zero() {
            return None;
        }
        let m = &self.l;
        let l = [
            [&m[1][1] / &d, -(&m[0][1] / &d)],
            [-(&m[1][0] / &d), &m[0][0] / &d],
        ];
        let a = Affine { l, b: [Rational::zero(), Rational::zero()] };
        let nb = a.apply(&self.b);
        Some(Affine {
            b: [-nb[0].clone(), -nb[1].clone()],
            ..a
        })
    }

    /// Solution of `L x + b = x`, if `I - L` is invertible.
    pub fn fixed_point(&self) -> Option<Pt> {
        let one = Rational::one();
        let a = [[&one - &self.l[0][0], -self.l[0][1].clone()], [-self.l[1][0].clone(), &one - &self.l[1][1]]];
        let det = &a[0][0] * &a[1][1] - &a[0][1] * &a[1][0];
        if det.is_zero() {
            return None;
        }
        let b = &self.b;
        Some([
            (&a[1][1] * &b[0] - &a[0][1] * &b[1]) / &det,
            (&a[0][0] * &b[1] - &a[1][0] * &b[0]) / &det,
        ])
    }
}

/// A piecewise-affine map on a conforming triangulation.
#[derive(Debug, Clone)]
pub struct PLMap {
    triangles: Vec<[Pt; 3]>,
    images: Vec<[Pt; 3]>,
    pieces: Vec<Affine>,
}

fn ccw_triangle(t: &[Pt; 3]) -> [Pt; 3] {
    if cross(&t[0], &t[1], &t[2]).is_negative() {
        [t[0].clone(), t[2].clone(), t[1].clone()]
    } else {
        t.clone()
    }
}

fn interiors_overlap(t1: &[Pt; 3], t2: &[Pt; 3]) -> bool {
    let (a, b) = (ccw_triangle(t1), ccw_triangle(t2));
    let separated = |s: &[Pt; 3], o: &[Pt; 3]| {
        (0..3).any(|k| {
            let (u, v) = (&s[k], &s[(k + 1) % 3]);
            o.iter().all(|w| !cross(u, v, w).is_positive())
        })
    };
    !(separated(&a, &b) || separated(&b, &a))
}

fn in_closed_triangle(t: &[Pt; 3], p: &Pt) -> bool {
    let t = ccw_triangle(t);
    (0..3).all(|k| !cross(&t[k], &t[(k + 1) % 3], p).is_negative())
}

impl PLMap {
    pub fn new(triangles: Vec<[Pt; 3]>, images: Vec<[Pt; 3]>) -> Result<Self, MarkovError> {
        assert_eq!(triangles.len(), images.len(), "one image per triangle");
        let mut pieces = Vec::with_capacity(triangles.len());
        let mut sign = None;
        for (i, (t, im)) in triangles.iter().zip(&images).enumerate() {
            let a = Affine::from_triangles(t, im).ok_or(MarkovError::DegenerateTriangle(i))?;
            let d = a.det();
            if d.is_zero() {
                return Err(MarkovError::DegenerateTriangle(i));
            }
            let s = d.is_positive();
            if *sign.get_or_insert(s) != s {
                return Err(MarkovError::MixedOrientation);
            }
            pieces.push(a);
        }
        for i in 0..triangles.len() {
            for j in 0..triangles.len() {
                if i == j {
                    continue;
                }
                for (k, v) in triangles[i].iter().enumerate() {
                    for m in 0..3 {
                        let (p, q) = (&triangles[j][m], &triangles[j][(m + 1) % 3]);
                        if v != p && v != q && cross(p, q, v).is_zero() && on_segment(v, p, q) {
                            return Err(MarkovError::NonConforming(i, j));
                        }
                    }
                    if let Some(m) = triangles[j].iter().position(|w| w == v) {
                        if images[i][k] != images[j][m] {
                            return Err(MarkovError::Discontinuous(i, j));
                        }
                    }
                }
                if i < j {
                    if interiors_overlap(&triangles[i], &triangles[j]) {
                        return Err(MarkovError::Overlap(i, j));
                    }
                    if interiors_overlap(&images[i], &images[j]) {
                        return Err(MarkovError::NotInjective(i, j));
                    }
                }
            }
        }
        Ok(PLMap { triangles, images, pieces })
    }

    pub fn triangles(&self) -> &[[Pt; 3]] {
        &self.triangles
    }

    pub fn images(&self) -> &[[Pt; 3]] {
        &self.images
    }

    pub fn apply(&self, p: &Pt) -> Option<Pt> {
        self.triangles
            .iter()
            .position(|t| in_closed_triangle(t, p))
            .map(|k| self.pieces[k].apply(p))
    }

    /// Image of a rectangle: boundary refined at triangle edges, then
    /// mapped vertex by vertex. Marks follow the corners.
    pub fn image_rectangle(&self, r: &PLRectangle) -> Result<PLRectangle, MarkovError> {
        let n = r.vertices.len();
        let mut pts = Vec::new();
        let mut corners = [0; 4];
        for e in 0..n {
            if let Some(c) = r.corners.iter().position(|&c| c == e) {
                corners[c] = pts.len();
            }
            let (a, b) = (&r.vertices[e], &r.vertices[(e + 1) % n]);
            let mut ts: Vec<Rational> = Vec::new();
            for t in &self.triangles {
                for m in 0..3 {
                    if let Some(s) = crossing_param(a, b, &t[m], &t[(m + 1) % 3]) {
                        ts.push(s);
                    }
                }
            }
            ts.sort();
            ts.dedup();
            pts.push(self.apply(a).ok_or(MarkovError::OutsideDomain)?);
            for t in ts {
                pts.push(self.apply(&lerp(a, b, &t)).ok_or(MarkovError::OutsideDomain)?);
            }
        }
        PLRectangle::new(pts, corners)
    }
}

fn clip_left(poly: &[Pt], u: &Pt, v: &Pt) -> Vec<Pt> {
    let n = poly.len();
    let mut out: Vec<Pt> = Vec::new();
    for i in 0..n {
        let (p, q) = (&poly[i], &poly[(i + 1) % n]);
        let (sp, sq) = (cross(u, v, p), cross(u, v, q));
        if !sp.is_negative() {
            out.push(p.clone());
        }
        if (sp.is_positive() && sq.is_negative()) || (sp.is_negative() && sq.is_positive()) {
            let t = &sp / (&sp - &sq);
            out.push(lerp(p, q, &t));
        }
    }
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

fn clip_convex(poly: &[Pt], window: &[Pt]) -> Vec<Pt> {
    let mut w = window.to_vec();
    if twice_area(&w).is_negative() {
        w.reverse();
    }
    let mut out = poly.to_vec();
    for k in 0..w.len() {
        if out.is_empty() {
            break;
        }
        out = clip_left(&out, &w[k], &w[(k + 1) % w.len()]);
    }
    out
}

fn ccw(mut poly: Vec<Pt>) -> Vec<Pt> {
    if twice_area(&poly).is_negative() {
        poly.reverse();
    }
    poly
}

#[derive(Debug, Clone)]
struct Piece {
    poly: Vec<Pt>,
    map: Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainMethod {
    ExactFixedPoint,
    Centroid,
    Subdivision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainPoint {
    #[serde(serialize_with = "ser_pt")]
    pub x: Pt,
    #[serde(serialize_with = "ser_pts")]
    pub orbit: Vec<Pt>,
    /// Max-norm of `f_n ... f_1 (x) - x` for a closed chain.
    pub residual: Option<f64>,
    pub method: ChainMethod,
}

fn ser_pt<S: serde::Serializer>(p: &Pt, s: S) -> Result<S::Ok, S::Error> {
    [format_rational(&p[0]), format_rational(&p[1])].serialize(s)
}

fn ser_pts<S: serde::Serializer>(ps: &[Pt], s: S) -> Result<S::Ok, S::Error> {
    let v: Vec<[String; 2]> = ps.iter().map(|p| [format_rational(&p[0]), format_rational(&p[1])]).collect();
    v.serialize(s)
}

#[derive(Debug, Clone, Copy)]
pub struct ChainOptions {
    /// Try the exact fixed point of each surviving affine branch first.
    pub exact_fixed_point: bool,
    pub max_depth: usize,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            exact_fixed_point: true,
            max_depth: 60,
        }
    }
}

/// Exact orbit of `x` through the chain if every point lands in the
/// interior of its rectangle.
fn verified_orbit(x: &Pt, rects: &[PLRectangle], maps: &[PLMap]) -> Option<Vec<Pt>> {
    if !rects[0].contains_interior(x) {
        return None;
    }
    let mut orbit = vec![x.clone()];
    for (i, f) in maps.iter().enumerate() {
        let y = f.apply(orbit.last().expect("nonempty"))?;
        if !rects[i + 1].contains_interior(&y) {
            return None;
        }
        orbit.push(y);
    }
    Some(orbit)
}

fn residual(orbit: &[Pt]) -> f64 {
    let (x, y) = (&orbit[0], orbit.last().expect("nonempty"));
    to_f64(&(&y[0] - &x[0]).abs()).max(to_f64(&(&y[1] - &x[1]).abs()))
}

pub fn chain_point(rects: &[PLRectangle], maps: &[PLMap], tol: f64) -> Result<ChainPoint, MarkovError> {
    chain_point_with(rects, maps, tol, ChainOptions::default())
}

/// A point whose orbit under `maps` visits the interiors of `rects` in
/// order. When the chain closes up (`rects[0] == rects[n]`) the point is
/// also periodic up to `tol`.
pub fn chain_point_with(
    rects: &[PLRectangle],
    maps: &[PLMap],
    tol: f64,
    opts: ChainOptions,
) -> Result<ChainPoint, MarkovError> {
    if rects.len() != maps.len() + 1 {
        return Err(MarkovError::ChainShape);
    }
    let boxes: Vec<_> = rects.iter().map(|r| r.as_box().ok_or(MarkovError::NotAxisAligned)).collect::<Result<_, _>>()?;
    for (i, f) in maps.iter().enumerate() {
        let img = f.image_rectangle(&rects[i]).map_err(|_| MarkovError::Precondition(i + 1))?;
        let (a, b) = normalize(&img, &rects[i + 1])?;
        if is_markovian(&a, &b)?.is_none() {
            return Err(MarkovError::Precondition(i + 1));
        }
    }
    let box_poly = |k: usize| {
        let (x0, x1, y0, y1) = boxes[k].clone();
        vec![[x0.clone(), y0.clone()], [x1.clone(), y0], [x1, y1.clone()], [x0, y1]]
    };
    let mut pieces = vec![Piece {
        poly: box_poly(0),
        map: Affine::identity(),
    }];
    for (i, f) in maps.iter().enumerate() {
        let target = box_poly(i + 1);
        let mut next = Vec::new();
        for p in &pieces {
            for (t, a) in f.triangles.iter().zip(&f.pieces) {
                let part = clip_convex(&p.poly, &t[..]);
                if part.len() < 3 || twice_area(&part).is_zero() {
                    continue;
                }
                let img = ccw(part.iter().map(|q| a.apply(q)).collect());
                let kept = clip_convex(&img, &target);
                if kept.len() < 3 || twice_area(&kept).is_zero() {
                    continue;
                }
                next.push(Piece {
                    poly: kept,
                    map: a.compose(&p.map),
                });
            }
        }
        if next.is_empty() {
            return Err(MarkovError::PruneExhausted(i + 1));
        }
        pieces = next;
    }
    let periodic = rects[0] == rects[rects.len() - 1];
    if !periodic {
        let p = &pieces[0];
        let k = Rational::from_integer((p.poly.len() as i64).into());
        let c = p.poly.iter().fold([Rational::zero(), Rational::zero()], |s, q| [&s[0] + &q[0], &s[1] + &q[1]]);
        let c = [&c[0] / &k, &c[1] / &k];
        let x = p.map.inverse().ok_or(MarkovError::PruneExhausted(maps.len()))?.apply(&c);
        let orbit = verified_orbit(&x, rects, maps).ok_or(MarkovError::PruneExhausted(maps.len()))?;
        return Ok(ChainPoint {
            x,
            orbit,
            residual: None,
            method: ChainMethod::Centroid,
        });
    }
    if opts.exact_fixed_point {
        for p in &pieces {
            if let Some(x) = p.map.fixed_point() {
                if let Some(orbit) = verified_orbit(&x, rects, maps) {
                    if orbit.last() == Some(&x) {
                        return Ok(ChainPoint {
                            x,
                            orbit,
                            residual: Some(0.0),
                            method: ChainMethod::ExactFixedPoint,
                        });
                    }
                }
            }
        }
    }
    subdivide(rects, maps, &pieces, tol, opts.max_depth)
}

/// Depth-first box refinement, lower-left quadrant first. A box survives
/// when some branch maps part of it back onto it.
fn subdivide(rects: &[PLRectangle], maps: &[PLMap], pieces: &[Piece], tol: f64, max_depth: usize) -> Result<ChainPoint, MarkovError> {
    let domains: Vec<(Vec<Pt>, &Affine)> = pieces
        .iter()
        .filter_map(|p| {
            let inv = p.map.inverse()?;
            Some((ccw(p.poly.iter().map(|q| inv.apply(q)).collect()), &p.map))
        })
        .collect();
    let (x0, x1, y0, y1) = rects[0].as_box().ok_or(MarkovError::NotAxisAligned)?;
    let two = Rational::from_integer(2.into());
    let mut stack = vec![(x0, x1, y0, y1, 0usize)];
    while let Some((a, b, c, d, depth)) = stack.pop() {
        let bx = vec![[a.clone(), c.clone()], [b.clone(), c.clone()], [b.clone(), d.clone()], [a.clone(), d.clone()]];
        let alive = domains.iter().any(|(dom, m)| {
            let part = clip_convex(dom, &bx);
            if part.len() < 3 {
                return false;
            }
            let img = ccw(part.iter().map(|q| m.apply(q)).collect());
            !clip_convex(&img, &bx).is_empty()
        });
        if !alive {
            continue;
        }
        let centre = [(&a + &b) / &two, (&c + &d) / &two];
        if let Some(orbit) = verified_orbit(&centre, rects, maps) {
            let r = residual(&orbit);
            if r <= tol {
                return Ok(ChainPoint {
                    x: centre,
                    orbit,
                    residual: Some(r),
                    method: ChainMethod::Subdivision,
                });
            }
        }
        if depth >= max_depth {
            continue;
        }
        let (mx, my) = (centre[0].clone(), centre[1].clone());
        // pushed in reverse so the lower-left quadrant is explored first
        stack.push((mx.clone(), b.clone(), my.clone(), d.clone(), depth + 1));
        stack.push((mx.clone(), b, c.clone(), my.clone(), depth + 1));
        stack.push((a.clone(), mx.clone(), my.clone(), d, depth + 1));
        stack.push((a, mx, c, my, depth + 1));
    }
    Err(MarkovError::Subdivision)
}

/// File form of a rectangle: rational coordinates as strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RectangleSpec {
    pub vertices: Vec<[String; 2]>,
    pub corners: [usize; 4],
}

/// File form of a map: one entry per triangle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangleSpec {
    pub domain: [[String; 2]; 3],
    pub image: [[String; 2]; 3],
}

fn parse_pt(p: &[String; 2]) -> Result<Pt, MarkovError> {
    Ok([parse_rational(&p[0])?, parse_rational(&p[1])?])
}

impl RectangleSpec {
    pub fn build(&self) -> Result<PLRectangle, MarkovError> {
        let v = self.vertices.iter().map(parse_pt).collect::<Result<_, _>>()?;
        PLRectangle::new(v, self.corners)
    }

    pub fn from_rectangle(r: &PLRectangle) -> Self {
        RectangleSpec {
            vertices: r.vertices.iter().map(|p| [format_rational(&p[0]), format_rational(&p[1])]).collect(),
            corners: r.corners,
        }
    }
}

pub fn build_map(spec: &[TriangleSpec]) -> Result<PLMap, MarkovError> {
    let mut tris = Vec::new();
    let mut imgs = Vec::new();
    for t in spec {
        let d = [parse_pt(&t.domain[0])?, parse_pt(&t.domain[1])?, parse_pt(&t.domain[2])?];
        let i = [parse_pt(&t.image[0])?, parse_pt(&t.image[1])?, parse_pt(&t.image[2])?];
        tris.push(d);
        imgs.push(i);
    }
    PLMap::new(tris, imgs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn q(p: i64, d: i64) -> Rational {
        ratio(p, d)
    }

    fn pt(a: (i64, i64), b: (i64, i64)) -> Pt {
        [q(a.0, a.1), q(b.0, b.1)]
    }

    fn strip() -> PLRectangle {
        PLRectangle::axis_box(q(1, 4), q(1, 2), q(-1, 2), q(3, 2)).unwrap()
    }

    #[test]
    fn strip_is_pre_markovian() {
        let sq = PLRectangle::unit_square();
        assert!(is_pre_markovian(&strip(), &sq).unwrap());
        let inside = PLRectangle::axis_box(q(1, 4), q(1, 2), q(1, 4), q(1, 2)).unwrap();
        assert!(!is_pre_markovian(&inside, &sq).unwrap());
        assert_eq!(is_pre_markovian(&sq, &strip()), Err(MarkovError::NotUnitSquare));
        assert_eq!(is_markovian(&strip(), &sq).unwrap(), Some(strip()));
        let far = PLRectangle::axis_box(q(3, 1), q(4, 1), q(-1, 2), q(3, 2)).unwrap();
        assert_eq!(is_markovian(&far, &sq).unwrap(), None);
    }

    #[test]
    fn margins() {
        let sq = PLRectangle::unit_square();
        assert_eq!(perturbation_margin(&strip(), &sq).unwrap(), q(1, 4));
        let short = PLRectangle::axis_box(q(1, 4), q(1, 2), q(-1, 10), q(11, 10)).unwrap();
        assert_eq!(perturbation_margin(&short, &sq).unwrap(), q(1, 10));
        let e = perturbation_margin(&short, &sq).unwrap() / q(2, 1);
        let moved = short.map_points(|p| [p[0].clone(), &p[1] + &e]).unwrap();
        assert!(is_pre_markovian(&moved, &sq).unwrap());
    }

    #[test]
    fn non_simple_polygon_rejected() {
        let bow = vec![pt((0, 1), (0, 1)), pt((1, 1), (1, 1)), pt((1, 1), (0, 1)), pt((0, 1), (1, 1))];
        assert!(matches!(PLRectangle::new(bow, [0, 1, 2, 3]), Err(MarkovError::NotSimple(_, _))));
    }

    #[test]
    fn u_shape_has_inner_branch_witness() {
        // both ends above the square; the right branch leaves through x = 1
        let v = vec![
            pt((1, 5), (3, 2)),
            pt((2, 5), (3, 2)),
            pt((2, 5), (-1, 5)),
            pt((6, 5), (-1, 5)),
            pt((6, 5), (3, 2)),
            pt((7, 5), (3, 2)),
            pt((7, 5), (-1, 2)),
            pt((1, 5), (-1, 2)),
        ];
        let u = PLRectangle::new(v, [0, 1, 4, 5]).unwrap();
        let sq = PLRectangle::unit_square();
        assert!(!is_pre_markovian(&u, &sq).unwrap());
        let w = is_markovian(&u, &sq).unwrap().expect("witness");
        assert!(is_pre_markovian(&w, &sq).unwrap());
        assert!(w.vertices().iter().all(|p| p[0] <= q(2, 5)));
    }

    #[test]
    fn affine_helpers() {
        let src = [pt((0, 1), (0, 1)), pt((1, 1), (0, 1)), pt((0, 1), (1, 1))];
        let dst = [pt((1, 1), (2, 1)), pt((3, 1), (2, 1)), pt((1, 1), (5, 1))];
        let a = Affine::from_triangles(&src, &dst).unwrap();
        assert_eq!(a.apply(&pt((1, 2), (1, 2))), pt((2, 1), (7, 2)));
        let id = a.inverse().unwrap().compose(&a);
        assert_eq!(id, Affine::identity());
        let fp = a.fixed_point().unwrap();
        assert_eq!(a.apply(&fp), fp);
    }

    #[test]
    fn map_validation() {
        let t1 = [pt((0, 1), (0, 1)), pt((1, 1), (0, 1)), pt((0, 1), (1, 1))];
        let t2 = [pt((1, 1), (0, 1)), pt((1, 1), (1, 1)), pt((0, 1), (1, 1))];
        let shift = |t: &[Pt; 3]| t.clone().map(|p| [&p[0] + q(1, 1), p[1].clone()]);
        assert!(PLMap::new(vec![t1.clone(), t2.clone()], vec![shift(&t1), shift(&t2)]).is_ok());
        let mut bad = shift(&t2);
        bad[0] = pt((5, 1), (0, 1));
        assert!(matches!(PLMap::new(vec![t1.clone(), t2.clone()], vec![shift(&t1), bad]), Err(MarkovError::Discontinuous(_, _))));
        assert!(matches!(PLMap::new(vec![t1.clone(), t2], vec![shift(&t1), shift(&t1)]), Err(_)));
    }
}
