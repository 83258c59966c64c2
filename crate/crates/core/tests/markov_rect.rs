mod common;

use common::*;
use horseshoe_net::exact::{to_f64, Rational};
use horseshoe_net::markov_rect::*;
use num::Signed;
use proptest::prelude::*;

#[test]
fn s_crossing_is_pre_markovian() {
    let s = s_crossing();
    assert_eq!(s.vertices().len(), 12);
    let sq = PLRectangle::unit_square();
    assert!(oracle_pre_markovian(&s));
    assert!(is_pre_markovian(&s, &sq).unwrap());
    assert_eq!(is_markovian(&s, &sq).unwrap(), Some(s.clone()));
    // pushed right until the wiggle leaves the square
    let pushed = s.map_points(|p| [&p[0] + q(3, 10), p[1].clone()]).unwrap();
    assert!(!oracle_pre_markovian(&pushed));
    assert!(!is_pre_markovian(&pushed, &sq).unwrap());
}

#[test]
fn normalization_of_axis_aligned_target() {
    let target = PLRectangle::axis_box(q(2, 1), q(4, 1), q(1, 1), q(2, 1)).unwrap();
    let r1 = PLRectangle::axis_box(q(5, 2), q(3, 1), q(0, 1), q(3, 1)).unwrap();
    let (a, b) = normalize(&r1, &target).unwrap();
    assert_eq!(b, PLRectangle::unit_square());
    assert!(is_pre_markovian(&a, &b).unwrap());
    assert_eq!(normalize(&r1, &s_crossing()), Err(MarkovError::NotAxisAligned));
}

#[test]
fn horseshoe_period_two_exact() {
    let f = affine_horseshoe();
    let rects = [lower_band(), upper_band(), lower_band()];
    let p = chain_point(&rects, &[f.clone(), f.clone()], 1e-9).unwrap();
    assert_eq!(p.method, ChainMethod::ExactFixedPoint);
    assert_eq!(p.x, period_two_point());
    assert_eq!(p.orbit.len(), 3);
    assert!(upper_band().contains_interior(&p.orbit[1]));
    assert_eq!(f.apply(&f.apply(&p.x).unwrap()).unwrap(), p.x);
}

#[test]
fn horseshoe_period_two_by_subdivision() {
    let f = affine_horseshoe();
    let rects = [lower_band(), upper_band(), lower_band()];
    let opts = ChainOptions {
        exact_fixed_point: false,
        ..ChainOptions::default()
    };
    let p = chain_point_with(&rects, &[f.clone(), f.clone()], 1e-9, opts).unwrap();
    assert_eq!(p.method, ChainMethod::Subdivision);
    assert!(p.residual.unwrap() <= 1e-9);
    let back = f.apply(&f.apply(&p.x).unwrap()).unwrap();
    let gap = (&back[0] - &p.x[0]).abs().max((&back[1] - &p.x[1]).abs());
    assert!(to_f64(&gap) <= 1e-9);
    let star = period_two_point();
    assert!((to_f64(&p.x[0]) - to_f64(&star[0])).abs() < 1e-6);
    assert!((to_f64(&p.x[1]) - to_f64(&star[1])).abs() < 1e-6);
}

#[test]
fn period_one_points_of_each_branch() {
    let f = affine_horseshoe();
    let p = chain_point(&[upper_band(), upper_band()], &[f.clone()], 1e-9).unwrap();
    // 7/8 - x/4 = x, 23/4 - 6y = y
    assert_eq!(p.x, [q(7, 10), q(23, 28)]);
    // 1/8 + x/4 = x, -1/4 + 6y = y
    let p = chain_point(&[lower_band(), lower_band()], &[f.clone()], 1e-9).unwrap();
    assert_eq!(p.x, [q(1, 6), q(1, 20)]);
    let left = PLRectangle::axis_box(q(0, 1), q(1, 2), q(0, 1), q(1, 1)).unwrap();
    assert!(matches!(chain_point(&[upper_band(), left], &[f], 1e-9), Err(MarkovError::Precondition(1))));
}

#[test]
fn translated_strip_chain() {
    let dom = [pt((0, 1), (-2, 1)), pt((1, 1), (-2, 1)), pt((1, 1), (3, 1)), pt((0, 1), (3, 1))];
    let shift = |p: &Pt| [&p[0] + q(1, 4), p[1].clone()];
    let tris = vec![
        [dom[0].clone(), dom[1].clone(), dom[2].clone()],
        [dom[0].clone(), dom[2].clone(), dom[3].clone()],
    ];
    let imgs = tris.iter().map(|t| [shift(&t[0]), shift(&t[1]), shift(&t[2])]).collect();
    let f = PLMap::new(tris, imgs).unwrap();
    let r0 = PLRectangle::axis_box(q(1, 4), q(1, 2), q(-1, 1), q(2, 1)).unwrap();
    let r1 = PLRectangle::unit_square();
    let p = chain_point(&[r0.clone(), r1.clone()], &[f.clone()], 1e-9).unwrap();
    assert_eq!(p.method, ChainMethod::Centroid);
    assert!(r0.contains_interior(&p.x));
    assert!(r1.contains_interior(&f.apply(&p.x).unwrap()));
    assert_eq!(chain_point(&[r0], &[f], 1e-9), Err(MarkovError::ChainShape));
}

#[test]
fn image_rectangle_of_lower_band_crosses_upper_band() {
    let f = affine_horseshoe();
    let img = f.image_rectangle(&lower_band()).unwrap();
    let (a, b) = normalize(&img, &upper_band()).unwrap();
    assert!(is_pre_markovian(&a, &b).unwrap());
    let whole = f.image_rectangle(&PLRectangle::unit_square()).unwrap();
    let (a, b) = normalize(&whole, &upper_band()).unwrap();
    assert!(!is_pre_markovian(&a, &b).unwrap());
    let w = is_markovian(&a, &b).unwrap().expect("one branch inside");
    assert!(is_pre_markovian(&w, &b).unwrap());
}

fn frac() -> impl Strategy<Value = Rational> {
    (1i64..40).prop_map(|k| q(k, 41))
}

proptest! {
    #[test]
    fn subrectangles_stay_pre_markovian(
        xs in proptest::collection::vec(frac(), 4),
        lo in -5i64..-1, hi in 6i64..10,
        s in (frac(), frac()), u in (frac(), frac()), band in (frac(), frac()),
    ) {
        prop_assume!(s.0 != s.1 && u.0 != u.1 && band.0 != band.1);
        let (ylo, yhi) = (q(lo, 5), q(hi, 5));
        let b0 = [xs[0].clone().min(xs[1].clone()), ylo.clone()];
        let b1 = [xs[0].clone().max(xs[1].clone()), ylo.clone()];
        let t1 = [xs[2].clone().max(xs[3].clone()), yhi.clone()];
        let t0 = [xs[2].clone().min(xs[3].clone()), yhi.clone()];
        prop_assume!(b0[0] != b1[0] && t0[0] != t1[0]);
        let r1 = PLRectangle::new(vec![b0.clone(), b1.clone(), t1.clone(), t0.clone()], [0, 1, 2, 3]).unwrap();
        let sq = PLRectangle::unit_square();
        prop_assert!(is_pre_markovian(&r1, &sq).unwrap());
        let on = |a: &Pt, b: &Pt, t: &Rational| [&a[0] + (&b[0] - &a[0]) * t, &a[1] + (&b[1] - &a[1]) * t];
        let (s0, s1) = (s.0.clone().min(s.1.clone()), s.0.max(s.1));
        let (u0, u1) = (u.0.clone().min(u.1.clone()), u.0.max(u.1));
        let vertical = PLRectangle::new(
            vec![on(&b0, &b1, &s0), on(&b0, &b1, &s1), on(&t0, &t1, &u1), on(&t0, &t1, &u0)],
            [0, 1, 2, 3],
        ).unwrap();
        let (y0, y1) = (band.0.clone().min(band.1.clone()), band.0.max(band.1));
        let horizontal = PLRectangle::axis_box(q(0, 1), q(1, 1), y0, y1).unwrap();
        let (a, b) = normalize(&vertical, &horizontal).unwrap();
        prop_assert!(is_pre_markovian(&a, &b).unwrap());
        prop_assert!(oracle_pre_markovian(&a));
    }
}
