#![allow(dead_code)]

use horseshoe_net::exact::{ratio, Rational};
use horseshoe_net::markov_rect::{PLMap, PLRectangle, Pt};
use num::{One, Zero};

pub fn q(p: i64, d: i64) -> Rational {
    ratio(p, d)
}

pub fn pt(x: (i64, i64), y: (i64, i64)) -> Pt {
    [q(x.0, x.1), q(y.0, y.1)]
}

/// Two-branch affine horseshoe on the unit square. Branch 0 on
/// `y <= 1/4` is `(1/8 + x/4, -1/4 + 6y)`, branch 1 on `y >= 3/4` is
/// `(7/8 - x/4, 23/4 - 6y)`; the middle bands fold over the top.
pub fn affine_horseshoe() -> PLMap {
    let levels = [(0, 1), (1, 4), (3, 8), (5, 8), (3, 4), (1, 1)];
    let images = [
        [pt((1, 8), (-1, 4)), pt((3, 8), (-1, 4))],
        [pt((1, 8), (5, 4)), pt((3, 8), (5, 4))],
        [pt((1, 8), (2, 1)), pt((3, 8), (3, 2))],
        [pt((7, 8), (2, 1)), pt((5, 8), (3, 2))],
        [pt((7, 8), (5, 4)), pt((5, 8), (5, 4))],
        [pt((7, 8), (-1, 4)), pt((5, 8), (-1, 4))],
    ];
    let mut tris = Vec::new();
    let mut imgs = Vec::new();
    for k in 0..5 {
        let (lo, hi) = (levels[k], levels[k + 1]);
        let (a, b, c, d) = (pt((0, 1), lo), pt((1, 1), lo), pt((1, 1), hi), pt((0, 1), hi));
        let (ia, ib, ic, id) = (
            images[k][0].clone(),
            images[k][1].clone(),
            images[k + 1][1].clone(),
            images[k + 1][0].clone(),
        );
        tris.push([a.clone(), b, c.clone()]);
        imgs.push([ia.clone(), ib, ic.clone()]);
        tris.push([a, c, d]);
        imgs.push([ia, ic, id]);
    }
    PLMap::new(tris, imgs).expect("valid horseshoe map")
}

pub fn lower_band() -> PLRectangle {
    PLRectangle::axis_box(q(0, 1), q(1, 1), q(0, 1), q(1, 4)).unwrap()
}

pub fn upper_band() -> PLRectangle {
    PLRectangle::axis_box(q(0, 1), q(1, 1), q(3, 4), q(1, 1)).unwrap()
}

/// The period-2 point with itinerary (lower, upper), solved by hand:
/// `x = 7/8 - (1/8 + x/4)/4`, `y = 23/4 - 6(-1/4 + 6y)`.
pub fn period_two_point() -> Pt {
    [q(27, 34), q(29, 148)]
}

/// A 12-vertex S-shaped strip crossing the unit square from below to
/// above, wiggling inside `0 < x < 1`.
pub fn s_crossing() -> PLRectangle {
    let v = vec![
        pt((1, 5), (-1, 2)),
        pt((2, 5), (-1, 2)),
        pt((2, 5), (1, 5)),
        pt((4, 5), (2, 5)),
        pt((4, 5), (7, 10)),
        pt((1, 2), (9, 10)),
        pt((1, 2), (3, 2)),
        pt((3, 10), (3, 2)),
        pt((3, 10), (4, 5)),
        pt((3, 5), (3, 5)),
        pt((3, 5), (1, 2)),
        pt((1, 5), (3, 10)),
    ];
    PLRectangle::new(v, [0, 1, 6, 7]).unwrap()
}

use horseshoe_net::horseshoe_graph::{Edge, Horseshoe, HorseshoeGraph};
use horseshoe_net::surface_group::GroupWord;
use rand::Rng;

pub fn word(genus: usize, s: &str) -> GroupWord {
    GroupWord::parse(genus, s).unwrap()
}

pub fn horseshoe(id: &str, period: u64, decks: &[&str]) -> Horseshoe {
    Horseshoe {
        id: id.into(),
        period,
        decks: decks.iter().map(|d| word(2, d)).collect(),
    }
}

pub fn edge(from: &str, to: &str, n: u64, w: &str) -> Edge {
    Edge {
        from: from.into(),
        to: to.into(),
        n,
        word: word(2, w),
    }
}

fn random_word<R: Rng>(rng: &mut R, genus: usize, max_len: usize) -> GroupWord {
    let len = rng.gen_range(0..=max_len);
    let letters: Vec<i32> = (0..len)
        .map(|_| {
            let l = rng.gen_range(1..=2 * genus as i32);
            if rng.gen_bool(0.5) { l } else { -l }
        })
        .collect();
    GroupWord::new(genus, &letters).unwrap()
}

/// Genus-2 scene with up to `max_vertices` horseshoes of period at most 7,
/// up to 3 decks each, and random connections.
pub fn random_scene<R: Rng>(rng: &mut R, max_vertices: usize) -> HorseshoeGraph {
    let nv = rng.gen_range(2..=max_vertices);
    let hs: Vec<Horseshoe> = (0..nv)
        .map(|i| Horseshoe {
            id: format!("h{i}"),
            period: rng.gen_range(1..=7),
            decks: (0..rng.gen_range(1..=3)).map(|_| random_word(rng, 2, 3)).collect(),
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..nv {
        for j in 0..nv {
            if i == j {
                continue;
            }
            // forward edges are common, backward ones rarer
            let p = if i < j { 0.35 } else { 0.12 };
            if rng.gen_bool(p) {
                edges.push(Edge {
                    from: format!("h{i}"),
                    to: format!("h{j}"),
                    n: rng.gen_range(1..=4),
                    word: random_word(rng, 2, 2),
                });
            }
        }
    }
    HorseshoeGraph::new(2, hs, edges).unwrap()
}

/// Sutherland-Hodgman against `y >= lo` then `y <= hi`; for a single
/// half-plane the output hull has the same extreme points as the clip.
pub fn clip_band(poly: &[Pt], lo: &Rational, hi: &Rational) -> Vec<Pt> {
    let keep_above = |p: &Pt| &p[1] >= lo;
    let keep_below = |p: &Pt| &p[1] <= hi;
    let stage = |input: Vec<Pt>, level: &Rational, keep: &dyn Fn(&Pt) -> bool| {
        let n = input.len();
        let mut out = Vec::new();
        for i in 0..n {
            let (a, b) = (&input[i], &input[(i + 1) % n]);
            if keep(a) {
                out.push(a.clone());
            }
            if keep(a) != keep(b) {
                let t = (level - &a[1]) / (&b[1] - &a[1]);
                out.push([&a[0] + (&b[0] - &a[0]) * &t, level.clone()]);
            }
        }
        out
    };
    let once = stage(poly.to_vec(), lo, &keep_above);
    stage(once, hi, &keep_below)
}

/// Direct check in unit-square form: top and bottom on opposite sides of
/// the square, and the part inside the horizontal band within `0 <= x <= 1`.
pub fn oracle_pre_markovian(r: &PLRectangle) -> bool {
    let (zero, one) = (Rational::zero(), Rational::one());
    let up = |s: &[Pt]| s.iter().all(|p| p[1] > one);
    let down = |s: &[Pt]| s.iter().all(|p| p[1] < zero);
    let (b, t) = (r.bottom(), r.top());
    let crosses = (up(&t) && down(&b)) || (up(&b) && down(&t));
    crosses && clip_band(r.vertices(), &zero, &one).iter().all(|p| p[0] >= zero && p[0] <= one)
}
