//! Simplicity of closed geodesics.
//!
//! Two independent passes. First a conjugate search: the geodesic is not
//! simple as soon as its axis crosses a translate `c . axis`. If that finds
//! nothing, the axis is followed through the fundamental polygon (Klein
//! model, where geodesics are straight chords) for one full period and the
//! resulting segments are checked for crossings and for repeated passages
//! through the same boundary point.

use num::complex::Complex64;
use serde::Serialize;

use super::{
    translates_cross, FuchsianRep, GeomError, Isometry, OrientedGeodesic,
    TranslateCrossing,
};
use crate::surface_group::GroupWord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Simplicity {
    Simple,
    NonSimple,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplicityReport {
    pub verdict: Simplicity,
    /// Primitive root the test ran on.
    pub root: String,
    /// Conjugator of a crossing translate, when one was found.
    pub conjugator: Option<String>,
    /// Number of polygon segments in one period, when the trace closed.
    pub segments: Option<usize>,
}

const MAX_STEPS: usize = 20_000;
const CLOSE_TOL: f64 = 1e-7;
const VERTEX_TOL: f64 = 1e-9;
const STEP: f64 = 1e-6;

type P2 = [f64; 2];

fn to_klein(z: Complex64) -> P2 {
    let s = 2.0 / (1.0 + z.norm_sqr());
    [z.re * s, z.im * s]
}

fn to_poincare(k: P2) -> Complex64 {
    let k = Complex64::new(k[0], k[1]);
    k / (1.0 + (1.0 - k.norm_sqr()).max(0.0).sqrt())
}

fn on_circle(t: f64) -> P2 {
    [t.cos(), t.sin()]
}

struct Polygon<'a> {
    rep: &'a FuchsianRep,
    normals: Vec<(P2, f64)>,
}

struct Clip {
    t_in: f64,
    t_out: f64,
    side: usize,
    at_vertex: bool,
}

impl<'a> Polygon<'a> {
    fn new(rep: &'a FuchsianRep) -> Self {
        let normals = (0..rep.sides()).map(|j| rep.klein_side(j)).collect();
        Polygon { rep, normals }
    }

    /// Parameter range of the chord `p + t (q - p)` inside the polygon.
    fn clip(&self, g: &OrientedGeodesic) -> Option<Clip> {
        let p = on_circle(g.repelling);
        let q = on_circle(g.attracting);
        let d = [q[0] - p[0], q[1] - p[1]];
        let mut t_in = 0.0f64;
        let mut uppers: Vec<(f64, usize)> = Vec::new();
        for (j, (n, h)) in self.normals.iter().enumerate() {
            let np = n[0] * p[0] + n[1] * p[1];
            let nd = n[0] * d[0] + n[1] * d[1];
            if nd.abs() < 1e-15 {
                if np > *h {
                    return None;
                }
                continue;
            }
            let t = (h - np) / nd;
            if nd > 0.0 {
                uppers.push((t, j));
            } else {
                t_in = t_in.max(t);
            }
        }
        uppers.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (t_out, side) = *uppers.first()?;
        if t_out <= t_in {
            return None;
        }
        let at_vertex = uppers.get(1).is_some_and(|u| u.0 - t_out < VERTEX_TOL);
        Some(Clip {
            t_in,
            t_out,
            side,
            at_vertex,
        })
    }

    /// Maps a Klein point into the polygon by repeated side pairings and
    /// returns the accumulated isometry.
    fn reduce_point(&self, k: P2) -> Option<Isometry> {
        let mut g = Isometry::identity();
        let mut z = to_poincare(k);
        for _ in 0..10_000 {
            let kk = to_klein(z);
            let worst = self
                .normals
                .iter()
                .enumerate()
                .map(|(j, (n, h))| (n[0] * kk[0] + n[1] * kk[1] - h, j))
                .max_by(|a, b| a.0.total_cmp(&b.0))?;
            if worst.0 <= 1e-12 {
                return Some(g);
            }
            let s = self.rep.side_pairing(worst.1);
            z = s.act_disk(z);
            g = s.mul(&g).normalized();
        }
        None
    }
}

fn point_at(g: &OrientedGeodesic, t: f64) -> P2 {
    let p = on_circle(g.repelling);
    let q = on_circle(g.attracting);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn segments_cross(s: &(P2, P2), t: &(P2, P2)) -> bool {
    let eps = 1e-12;
    let d1 = cross(t.0, t.1, s.0);
    let d2 = cross(t.0, t.1, s.1);
    let d3 = cross(s.0, s.1, t.0);
    let d4 = cross(s.0, s.1, t.1);
    ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps))
        && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Passage {
    Vertex,
    Side(usize, f64),
}

impl Passage {
    fn matches(&self, o: &Passage) -> bool {
        match (self, o) {
            (Passage::Vertex, Passage::Vertex) => true,
            (Passage::Side(a, s), Passage::Side(b, t)) => a == b && (s - t).abs() < VERTEX_TOL,
            _ => false,
        }
    }
}

enum Trace {
    Closed { segments: Vec<(P2, P2)>, repeated: bool },
    Budget,
}

fn trace(rep: &FuchsianRep, axis: OrientedGeodesic) -> Trace {
    let poly = Polygon::new(rep);
    let p = on_circle(axis.repelling);
    let q = on_circle(axis.attracting);
    let d = [q[0] - p[0], q[1] - p[1]];
    let t_foot = -(p[0] * d[0] + p[1] * d[1]) / (d[0] * d[0] + d[1] * d[1]);
    let Some(g0) = poly.reduce_point(point_at(&axis, t_foot)) else {
        return Trace::Budget;
    };
    let start = axis.apply(&g0);
    let mut chord = start;
    let mut segments = Vec::new();
    let mut passages: Vec<Passage> = Vec::new();
    let mut repeated = false;
    for _ in 0..MAX_STEPS {
        let Some(c) = poly.clip(&chord) else {
            return Trace::Budget;
        };
        let exit = point_at(&chord, c.t_out);
        let grazing = c.t_out - c.t_in < VERTEX_TOL;
        let mut vertex_pass = c.at_vertex;
        if !grazing {
            segments.push((point_at(&chord, c.t_in), exit));
            let pass = if c.at_vertex {
                Passage::Vertex
            } else {
                let v0 = rep.klein_vertex(c.side);
                let v1 = rep.klein_vertex(c.side + 1);
                let len = ((v1[0] - v0[0]).powi(2) + (v1[1] - v0[1]).powi(2)).sqrt();
                let s = ((exit[0] - v0[0]).powi(2) + (exit[1] - v0[1]).powi(2)).sqrt() / len;
                if s < VERTEX_TOL || s > 1.0 - VERTEX_TOL {
                    Passage::Vertex
                } else {
                    let pj = rep.paired_side(c.side);
                    if c.side < pj {
                        Passage::Side(c.side, s)
                    } else {
                        Passage::Side(pj, 1.0 - s)
                    }
                }
            };
            vertex_pass |= pass == Passage::Vertex;
            if passages.iter().any(|x| x.matches(&pass)) {
                repeated = true;
            }
            passages.push(pass);
        }
        let step = if grazing || vertex_pass {
            let (a, b) = (on_circle(chord.repelling), on_circle(chord.attracting));
            let chord_len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let Some(g) = poly.reduce_point(point_at(&chord, c.t_out + STEP / chord_len)) else {
                return Trace::Budget;
            };
            g
        } else {
            *rep.side_pairing(c.side)
        };
        chord = chord.apply(&step);
        if chord.approx_eq(&start, CLOSE_TOL) {
            return Trace::Closed { segments, repeated };
        }
    }
    Trace::Budget
}

/// Tests whether the closed geodesic of `w` is simple.
///
/// Non-primitive words are tested on their primitive root. The answer is
/// `NonSimple` when a crossing translate is found within `depth` or the
/// polygon trace self-intersects, `Simple` when the trace closes cleanly,
/// and `Unknown` when the trace exceeds its step budget.
pub fn is_simple_closed_geodesic(
    w: &GroupWord,
    rep: &FuchsianRep,
    depth: usize,
    tol: f64,
) -> Result<SimplicityReport, GeomError> {
    let (root, _) = w.primitive_root().map_err(|_| GeomError::Identity)?;
    let axis = rep.axis_of(&root)?;
    let mut report = SimplicityReport {
        verdict: Simplicity::Unknown,
        root: root.to_string(),
        conjugator: None,
        segments: None,
    };
    if let TranslateCrossing::Yes { conjugator } = translates_cross(&root, &root, rep, depth, tol)? {
        report.verdict = Simplicity::NonSimple;
        report.conjugator = Some(conjugator);
        return Ok(report);
    }
    match trace(rep, axis) {
        Trace::Budget => {}
        Trace::Closed { segments, repeated } => {
            report.segments = Some(segments.len());
            let crossing = (0..segments.len())
                .any(|i| (i + 1..segments.len()).any(|j| segments_cross(&segments[i], &segments[j])));
            report.verdict = if repeated || crossing {
                Simplicity::NonSimple
            } else {
                Simplicity::Simple
            };
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::GEOM_TOL;

    fn check(s: &str, depth: usize) -> SimplicityReport {
        let rep = FuchsianRep::new(2).unwrap();
        is_simple_closed_geodesic(&GroupWord::parse(2, s).unwrap(), &rep, depth, GEOM_TOL).unwrap()
    }

    #[test]
    fn generators_are_simple() {
        for s in ["a1", "b1", "a2", "B2"] {
            assert_eq!(check(s, 4).verdict, Simplicity::Simple, "{s}");
        }
    }

    #[test]
    fn figure_eight_is_not_simple() {
        let r = check("a1 b1 a1 B1", 3);
        assert_eq!(r.verdict, Simplicity::NonSimple);
        assert!(r.conjugator.is_some());
    }

    #[test]
    fn trace_alone_detects_figure_eight() {
        let r = check("a1 b1 a1 B1", 0);
        assert_eq!(r.verdict, Simplicity::NonSimple);
    }

    #[test]
    fn separating_commutator_is_simple() {
        assert_eq!(check("a1 b1 A1 B1", 4).verdict, Simplicity::Simple);
    }

    #[test]
    fn powers_use_primitive_root() {
        let r = check("a1 a1 a1", 3);
        assert_eq!(r.verdict, Simplicity::Simple);
        assert_eq!(r.root, "a1");
    }

    #[test]
    fn conjugation_invariance() {
        for (w, c) in [("a1", "b2 a1"), ("a1 b1 a1 B1", "b1"), ("a1 b1", "A2")] {
            let x = GroupWord::parse(2, w).unwrap();
            let y = x.conjugate(&GroupWord::parse(2, c).unwrap());
            let rep = FuchsianRep::new(2).unwrap();
            let a = is_simple_closed_geodesic(&x, &rep, 3, GEOM_TOL).unwrap().verdict;
            let b = is_simple_closed_geodesic(&y, &rep, 3, GEOM_TOL).unwrap().verdict;
            assert_eq!(a, b, "{w} vs conj by {c}");
        }
    }

    #[test]
    fn identity_rejected() {
        let rep = FuchsianRep::new(2).unwrap();
        assert!(is_simple_closed_geodesic(&GroupWord::identity(2), &rep, 2, GEOM_TOL).is_err());
    }
}
