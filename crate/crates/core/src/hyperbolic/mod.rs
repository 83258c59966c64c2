//! Isometries of the hyperbolic plane and the regular-polygon Fuchsian
//! representation of the surface group.
//!
//! Matrices are stored in `SL(2,R)` acting on the upper half-plane. Boundary
//! points are angles on the unit circle, reached through the Cayley map
//! `z -> (z - i)/(z + i)`; the real point `x` becomes the angle of
//! `(x - i)/(x + i)` and `infinity` becomes angle 0.

mod simplicity;

pub use simplicity::{is_simple_closed_geodesic, Simplicity, SimplicityReport};

use std::f64::consts::{PI, TAU};

use num::complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::surface_group::{GroupWord, WordError};

/// Tolerance for geometric predicates (crossing, classification).
pub const GEOM_TOL: f64 = 1e-9;
/// Tolerance on `|det - 1|` after normalization.
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("isometry is not hyperbolic (|trace| = {0})")]
    NotHyperbolic(f64),
    #[error("the identity word has no axis")]
    Identity,
    #[error("genus {0} is below 2")]
    GenusTooSmall(usize),
    #[error("matrix has non-positive determinant")]
    BadDeterminant,
    #[error("geodesic endpoints coincide")]
    DegenerateGeodesic,
    #[error(transparent)]
    Word(#[from] WordError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IsometryKind {
    Hyperbolic,
    Parabolic,
    Elliptic,
}

/// An orientation-preserving isometry, a matrix of `SL(2,R)` up to sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry {
    pub m: [[f64; 2]; 2],
}

impl Isometry {
    /// Normalizes `m` to determinant one.
    pub fn new(m: [[f64; 2]; 2]) -> Result<Self, GeomError> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if !(det > 0.0) {
            return Err(GeomError::BadDeterminant);
        }
        let s = det.sqrt();
        Ok(Isometry {
            m: [[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]],
        })
    }

    pub fn identity() -> Self {
        Isometry {
            m: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn normalized(&self) -> Self {
        Isometry::new(self.m).unwrap_or(*self)
    }

    pub fn mul(&self, o: &Isometry) -> Isometry {
        let (a, b) = (&self.m, &o.m);
        Isometry {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
        }
    }

    pub fn inverse(&self) -> Isometry {
        let m = &self.m;
        Isometry {
            m: [[m[1][1], -m[0][1]], [-m[1][0], m[0][0]]],
        }
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Max-norm distance to the nearer of `I` and `-I`.
    pub fn dist_to_pm_identity(&self) -> f64 {
        let d = |s: f64| {
            let m = &self.m;
            (m[0][0] - s)
                .abs()
                .max(m[0][1].abs())
                .max(m[1][0].abs())
                .max((m[1][1] - s).abs())
        };
        d(1.0).min(d(-1.0))
    }

    /// Disk form `z -> (alpha z + beta)/(conj(beta) z + conj(alpha))`.
    pub fn to_disk(&self) -> (Complex64, Complex64) {
        let [[a, b], [c, d]] = self.m;
        (
            Complex64::new((a + d) / 2.0, (b - c) / 2.0),
            Complex64::new((a - d) / 2.0, -(b + c) / 2.0),
        )
    }

    pub fn from_disk(alpha: Complex64, beta: Complex64) -> Isometry {
        Isometry {
            m: [
                [alpha.re + beta.re, alpha.im - beta.im],
                [-alpha.im - beta.im, alpha.re - beta.re],
            ],
        }
    }

    /// An isometry taking the half-plane geodesic `0 -> infinity` onto the
    /// geodesic from boundary angle `p` to boundary angle `q`.
    pub fn from_boundary_pair(p: f64, q: f64) -> Result<Isometry, GeomError> {
        if angle_dist(p, q) <= GEOM_TOL {
            return Err(GeomError::DegenerateGeodesic);
        }
        let real = |t: f64| {
            if angle_dist(t, 0.0) < 1e-12 {
                None
            } else {
                Some(-1.0 / (t / 2.0).tan())
            }
        };
        let m = match (real(p), real(q)) {
            (Some(xp), None) => [[1.0, xp], [0.0, 1.0]],
            (None, Some(xq)) => [[xq, -1.0], [1.0, 0.0]],
            (Some(xp), Some(xq)) if xq > xp => [[xq, xp], [1.0, 1.0]],
            (Some(xp), Some(xq)) => [[xq, -xp], [1.0, -1.0]],
            (None, None) => unreachable!("distinct angles"),
        };
        Isometry::new(m)
    }

    /// Hyperbolic isometry with the given boundary fixed points and
    /// translation length.
    pub fn with_axis(repelling: f64, attracting: f64, length: f64) -> Result<Isometry, GeomError> {
        let m = Isometry::from_boundary_pair(repelling, attracting)?;
        let s = (length / 2.0).exp();
        let d = Isometry {
            m: [[s, 0.0], [0.0, 1.0 / s]],
        };
        Ok(m.mul(&d).mul(&m.inverse()).normalized())
    }

    /// Action on a point of the unit disk.
    pub fn act_disk(&self, z: Complex64) -> Complex64 {
        let (al, be) = self.to_disk();
        (al * z + be) / (be.conj() * z + al.conj())
    }

    /// Action on a boundary angle.
    pub fn act_boundary(&self, theta: f64) -> f64 {
        norm_angle(self.act_disk(Complex64::from_polar(1.0, theta)).arg())
    }

    /// Action on the upper half-plane (`None` stands for infinity on the
    /// real line).
    pub fn act_half_plane(&self, z: Complex64) -> Complex64 {
        let [[a, b], [c, d]] = self.m;
        (z * a + b) / (z * c + d)
    }
}

pub fn norm_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Unsigned angular distance on the circle.
pub fn angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Boundary angle of a real point of the half-plane (`None` = infinity).
pub fn angle_of_real(x: Option<f64>) -> f64 {
    match x {
        None => 0.0,
        Some(x) => {
            let z = Complex64::new(x, -1.0) / Complex64::new(x, 1.0);
            norm_angle(z.arg())
        }
    }
}

pub fn classify(m: &Isometry) -> IsometryKind {
    classify_tol(m, GEOM_TOL)
}

pub fn classify_tol(m: &Isometry, tol: f64) -> IsometryKind {
    let t = m.trace().abs();
    if t > 2.0 + tol {
        IsometryKind::Hyperbolic
    } else if t < 2.0 - tol {
        IsometryKind::Elliptic
    } else {
        IsometryKind::Parabolic
    }
}

/// An oriented geodesic, given by its boundary endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrientedGeodesic {
    pub repelling: f64,
    pub attracting: f64,
}

impl OrientedGeodesic {
    pub fn new(repelling: f64, attracting: f64) -> Result<Self, GeomError> {
        let (r, a) = (norm_angle(repelling), norm_angle(attracting));
        if angle_dist(r, a) <= GEOM_TOL {
            return Err(GeomError::DegenerateGeodesic);
        }
        Ok(OrientedGeodesic {
            repelling: r,
            attracting: a,
        })
    }

    pub fn from_half_plane(repelling: Option<f64>, attracting: Option<f64>) -> Result<Self, GeomError> {
        Self::new(angle_of_real(repelling), angle_of_real(attracting))
    }

    pub fn reversed(&self) -> Self {
        OrientedGeodesic {
            repelling: self.attracting,
            attracting: self.repelling,
        }
    }

    pub fn apply(&self, m: &Isometry) -> Self {
        OrientedGeodesic {
            repelling: m.act_boundary(self.repelling),
            attracting: m.act_boundary(self.attracting),
        }
    }

    /// Both endpoints within `tol`, orientation included.
    pub fn approx_eq(&self, o: &OrientedGeodesic, tol: f64) -> bool {
        angle_dist(self.repelling, o.repelling) < tol && angle_dist(self.attracting, o.attracting) < tol
    }

    /// Same unoriented geodesic.
    pub fn same_set(&self, o: &OrientedGeodesic, tol: f64) -> bool {
        self.approx_eq(o, tol) || self.approx_eq(&o.reversed(), tol)
    }
}

/// Axis of a hyperbolic isometry; the attracting endpoint is the fixed point
/// where the derivative has modulus below one.
pub fn axis(m: &Isometry) -> Result<OrientedGeodesic, GeomError> {
    if classify(m) != IsometryKind::Hyperbolic {
        return Err(GeomError::NotHyperbolic(m.trace().abs()));
    }
    let (al, be) = m.to_disk();
    let root = (al.re * al.re - 1.0).sqrt();
    let bc = be.conj();
    let z1 = Complex64::new(root, al.im) / bc;
    let z2 = Complex64::new(-root, al.im) / bc;
    let deriv = |z: Complex64| (bc * z + al.conj()).norm();
    let (att, rep) = if deriv(z1) > deriv(z2) { (z1, z2) } else { (z2, z1) };
    Ok(OrientedGeodesic {
        repelling: norm_angle(rep.arg()),
        attracting: norm_angle(att.arg()),
    })
}

pub fn translation_length(m: &Isometry) -> Result<f64, GeomError> {
    if classify(m) != IsometryKind::Hyperbolic {
        return Err(GeomError::NotHyperbolic(m.trace().abs()));
    }
    Ok(2.0 * (m.trace().abs() / 2.0).acosh())
}

/// Result of the interleaving test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Crossing {
    pub crosses: bool,
    /// An endpoint of one geodesic lies within tolerance of an endpoint of
    /// the other; `crosses` is then false.
    pub degenerate: bool,
}

pub fn geodesics_cross(g1: &OrientedGeodesic, g2: &OrientedGeodesic) -> Crossing {
    geodesics_cross_tol(g1, g2, GEOM_TOL)
}

/// Strict interleaving of the endpoint pairs on the circle.
pub fn geodesics_cross_tol(g1: &OrientedGeodesic, g2: &OrientedGeodesic, tol: f64) -> Crossing {
    let ends1 = [g1.repelling, g1.attracting];
    let ends2 = [g2.repelling, g2.attracting];
    if ends1
        .iter()
        .any(|&a| ends2.iter().any(|&b| angle_dist(a, b) < tol))
    {
        return Crossing {
            crosses: false,
            degenerate: true,
        };
    }
    let base = g1.repelling;
    let rel = |t: f64| (t - base).rem_euclid(TAU);
    let span = rel(g1.attracting);
    let inside = |t: f64| rel(t) < span;
    Crossing {
        crosses: inside(g2.repelling) != inside(g2.attracting),
        degenerate: false,
    }
}

/// Side-pairing data of the regular `4g`-gon with all vertex angles
/// `2 pi / 4g`, centred at the origin of the disk.
#[derive(Debug, Clone)]
pub struct FuchsianRep {
    genus: usize,
    gens: Vec<Isometry>,
    pairings: Vec<Isometry>,
    /// Klein-model radius of the polygon vertices.
    vertex_radius: f64,
    /// Klein-model distance from the origin to each side.
    side_distance: f64,
}

type CMat = [[Complex64; 2]; 2];

fn cmul(a: &CMat, b: &CMat) -> CMat {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn su11(alpha: Complex64, beta: Complex64) -> CMat {
    [[alpha, beta], [beta.conj(), alpha.conj()]]
}

fn rotation(theta: f64) -> CMat {
    su11(Complex64::from_polar(1.0, theta / 2.0), Complex64::new(0.0, 0.0))
}

/// Isometry taking 0 to `m`.
fn translation_to(m: Complex64) -> CMat {
    let s = 1.0 / (1.0 - m.norm_sqr()).sqrt();
    su11(Complex64::new(s, 0.0), m * s)
}

fn half_turn(m: Complex64) -> CMat {
    let t = translation_to(m);
    let tinv = translation_to(-m);
    let r = su11(Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0));
    cmul(&cmul(&t, &r), &tinv)
}

fn to_isometry(c: &CMat) -> Isometry {
    Isometry::from_disk(c[0][0], c[0][1]).normalized()
}

impl FuchsianRep {
    pub fn new(genus: usize) -> Result<Self, GeomError> {
        if genus < 2 {
            return Err(GeomError::GenusTooSmall(genus));
        }
        let n = 4 * genus;
        let nf = n as f64;
        let angle = TAU / nf;
        let cosh_r = (PI / nf).tan().recip() * (angle / 2.0).tan().recip();
        let cosh_ri = (angle / 2.0).cos() / (PI / nf).sin();
        let vertex_radius = cosh_r.acosh().tanh();
        let side_distance = cosh_ri.acosh().tanh();
        let mid_poincare = (cosh_ri.acosh() / 2.0).tanh();
        let midpoint = |j: usize| Complex64::from_polar(mid_poincare, TAU * j as f64 / nf);
        let mut pairings = vec![Isometry::identity(); n];
        for i in 0..genus {
            for s in [4 * i, 4 * i + 1] {
                let phi = cmul(&half_turn(midpoint((s + 2) % n)), &rotation(2.0 * TAU / nf));
                let iso = to_isometry(&phi);
                pairings[s] = iso;
                pairings[s + 2] = iso.inverse();
            }
        }
        let mut gens = Vec::with_capacity(2 * genus);
        for i in 0..genus {
            gens.push(pairings[4 * i + 2]);
            gens.push(pairings[4 * i + 1]);
        }
        Ok(FuchsianRep {
            genus,
            gens,
            pairings,
            vertex_radius,
            side_distance,
        })
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Generator images in the order `a1, b1, ..., ag, bg`.
    pub fn generators(&self) -> &[Isometry] {
        &self.gens
    }

    pub fn letter(&self, x: i32) -> Isometry {
        let g = self.gens[x.unsigned_abs() as usize - 1];
        if x > 0 {
            g
        } else {
            g.inverse()
        }
    }

    /// The isometry mapping the neighbour of the polygon across side `j`
    /// back onto the polygon.
    pub fn side_pairing(&self, j: usize) -> &Isometry {
        &self.pairings[j]
    }

    pub fn sides(&self) -> usize {
        4 * self.genus
    }

    /// Side paired with side `j`.
    pub fn paired_side(&self, j: usize) -> usize {
        if j % 4 < 2 {
            j + 2
        } else {
            j - 2
        }
    }

    /// Vertex `j` of the polygon in Klein coordinates; side `j` runs from
    /// vertex `j` to vertex `j+1`.
    pub fn klein_vertex(&self, j: usize) -> [f64; 2] {
        let n = self.sides() as f64;
        let t = (2.0 * (j % self.sides()) as f64 - 1.0) * PI / n;
        [self.vertex_radius * t.cos(), self.vertex_radius * t.sin()]
    }

    /// Outward unit normal of side `j` and its distance from the origin.
    pub fn klein_side(&self, j: usize) -> ([f64; 2], f64) {
        let t = TAU * j as f64 / self.sides() as f64;
        ([t.cos(), t.sin()], self.side_distance)
    }

    /// Product of generator matrices, multiplied along a balanced tree with
    /// renormalization after every eight factors.
    pub fn evaluate(&self, w: &GroupWord) -> Isometry {
        assert_eq!(w.genus(), self.genus, "genus mismatch");
        let chunks: Vec<Isometry> = w
            .letters()
            .chunks(8)
            .map(|c| {
                c.iter()
                    .fold(Isometry::identity(), |acc, &x| acc.mul(&self.letter(x)))
                    .normalized()
            })
            .collect();
        balanced_product(&chunks)
    }

    pub fn axis_of(&self, w: &GroupWord) -> Result<OrientedGeodesic, GeomError> {
        if w.is_identity() {
            return Err(GeomError::Identity);
        }
        axis(&self.evaluate(w))
    }

    pub fn translation_length_of(&self, w: &GroupWord) -> Result<f64, GeomError> {
        if w.is_identity() {
            return Err(GeomError::Identity);
        }
        translation_length(&self.evaluate(w))
    }
}

fn balanced_product(xs: &[Isometry]) -> Isometry {
    match xs.len() {
        0 => Isometry::identity(),
        1 => xs[0],
        n => {
            let (l, r) = xs.split_at(n / 2);
            balanced_product(l).mul(&balanced_product(r)).normalized()
        }
    }
}

/// Builds the representation; equivalent to [`FuchsianRep::new`].
pub fn fuchsian_representation(genus: usize) -> Result<FuchsianRep, GeomError> {
    FuchsianRep::new(genus)
}

pub fn evaluate(w: &GroupWord, rep: &FuchsianRep) -> Isometry {
    rep.evaluate(w)
}

/// Answer of a depth-limited crossing search.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "answer", rename_all = "snake_case")]
pub enum TranslateCrossing {
    /// `axis(w1)` crosses `c . axis(w2)` for the recorded conjugator.
    Yes { conjugator: String },
    NoUpToDepth { depth: usize, degenerate_pairs: usize },
}

impl TranslateCrossing {
    pub fn is_yes(&self) -> bool {
        matches!(self, TranslateCrossing::Yes { .. })
    }
}

/// Enumerates all freely reduced words `c` with `|c| <= depth` in
/// shortlex order together with their matrices, calling `visit` until it
/// returns `true`.
pub(crate) fn for_each_conjugator<F>(rep: &FuchsianRep, depth: usize, mut visit: F) -> Option<Vec<i32>>
where
    F: FnMut(&[i32], &Isometry) -> bool,
{
    let g = rep.genus() as i32;
    let letters: Vec<i32> = (1..=2 * g).flat_map(|x| [x, -x]).collect();
    let mut frontier: Vec<(Vec<i32>, Isometry)> = vec![(Vec::new(), Isometry::identity())];
    if visit(&[], &Isometry::identity()) {
        return Some(Vec::new());
    }
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frontier.len() * (letters.len() - 1));
        for (word, m) in &frontier {
            for &x in &letters {
                if word.last() == Some(&-x) {
                    continue;
                }
                let mut w = word.clone();
                w.push(x);
                let mm = m.mul(&rep.letter(x)).normalized();
                if visit(&w, &mm) {
                    return Some(w);
                }
                next.push((w, mm));
            }
        }
        frontier = next;
    }
    None
}

/// Does `axis(w1)` cross the axis of `c w2 c^-1` for some `|c| <= depth`?
pub fn translates_cross(
    w1: &GroupWord,
    w2: &GroupWord,
    rep: &FuchsianRep,
    depth: usize,
    tol: f64,
) -> Result<TranslateCrossing, GeomError> {
    let a1 = rep.axis_of(w1)?;
    let a2 = rep.axis_of(w2)?;
    let mut degenerate = 0usize;
    let hit = for_each_conjugator(rep, depth, |_, m| {
        let c = geodesics_cross_tol(&a1, &a2.apply(m), tol);
        if c.degenerate {
            degenerate += 1;
        }
        c.crosses
    });
    Ok(match hit {
        Some(c) => TranslateCrossing::Yes {
            conjugator: GroupWord::new(rep.genus(), &c)?.to_string(),
        },
        None => TranslateCrossing::NoUpToDepth {
            depth,
            degenerate_pairs: degenerate,
        },
    })
}
