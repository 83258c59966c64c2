use std::f64::consts::PI;

use horseshoe_net::horseshoe_graph::HorseshoeGraph;
use horseshoe_net::hyperbolic::Isometry;
use horseshoe_net::leaf_space::*;
use horseshoe_net::surface_group::GroupWord;
use num::complex::Complex64;
use proptest::prelude::*;

fn la(a: f64, b: f64) -> Leaf {
    Leaf::with_left_arc(a * PI, b * PI).unwrap()
}

fn ra(a: f64, b: f64) -> Leaf {
    Leaf::with_right_arc(a * PI, b * PI).unwrap()
}

fn pivot() -> Leaf {
    Leaf::new(1.5 * PI, 0.5 * PI).unwrap()
}

fn p1_leaves() -> Vec<Leaf> {
    vec![la(0.6, 0.9), la(0.55, 1.0), pivot(), ra(1.55, 1.85), ra(1.6, 1.8)]
}

fn p2_leaves() -> Vec<Leaf> {
    vec![la(1.1, 1.4), la(1.05, 1.45), pivot(), ra(0.15, 0.45), ra(0.2, 0.4)]
}

/// A path `P` with a deck `T` such that `T P` is the second crossing path
/// near the pivot: `P[7] = T P[2]`.
fn self_crossing() -> (TransversePath, Isometry) {
    let t = Isometry::with_axis(0.75 * PI, 0.3 * PI, 9.0).unwrap();
    let tinv = t.inverse();
    let mut leaves: Vec<Leaf> = p2_leaves().iter().map(|l| l.apply(&tinv)).collect();
    leaves.extend(p1_leaves());
    (TransversePath::new(leaves).unwrap(), t)
}

fn automorphism(re: f64, im: f64, rot: f64) -> Isometry {
    // disk map z -> e^{i rot} (z + c)/(1 + conj(c) z), |c| < 1
    let c = Complex64::new(re, im);
    let s = 1.0 / (1.0 - c.norm_sqr()).sqrt();
    let half = Complex64::from_polar(1.0, rot / 2.0);
    Isometry::from_disk(half * s, half * c * s)
}

#[test]
fn constructed_witness_is_found() {
    let (p, t) = self_crossing();
    assert_eq!(self_transverse_with_deck(&p, &t).unwrap(), Some((7, 2)));
}

#[test]
fn nested_path_with_disjoint_deck_has_no_witness() {
    let p = TransversePath::new(p1_leaves()).unwrap();
    let t = Isometry::with_axis(0.2, 0.4, 1.0).unwrap();
    assert_eq!(self_transverse_with_deck(&p, &t).unwrap(), None);
    assert_eq!(self_transverse_with_deck(&p, &Isometry::identity()), Err(LeafError::NotHyperbolic));
}

#[test]
fn horseshoe_from_witness() {
    let (p, t) = self_crossing();
    let a = AdmissiblePath::new(p.clone(), 2).unwrap();
    let w = GroupWord::parse(2, "a1").unwrap();
    let h = extract_horseshoe("h", &a, &w, &t, 3, (7, 2)).unwrap();
    assert_eq!(h.period, 6);
    let decks: Vec<String> = h.decks.iter().map(|d| d.to_string()).collect();
    assert_eq!(decks, vec!["a1", "a1 a1", "a1 a1 a1"]);
    let single = extract_horseshoe("h", &a, &w, &t, 1, (7, 2)).unwrap();
    assert_eq!(single.decks.len(), 1);
    assert!(matches!(extract_horseshoe("h", &a, &w, &t, 2, (2, 7)), Err(LeafError::BadWitness(_))));
    assert!(matches!(extract_horseshoe("h", &a, &w, &t, 2, (6, 2)), Err(LeafError::BadWitness(_))));
}

#[test]
fn connection_label_and_reachability() {
    let (p, t) = self_crossing();
    // second half: a conjugate copy starting at the last leaf of `p`
    let first_leaf = p.leaves()[0];
    let last_leaf = *p.leaves().last().unwrap();
    let s = Isometry::from_boundary_pair(last_leaf.tail, last_leaf.head)
        .unwrap()
        .mul(&Isometry::from_boundary_pair(first_leaf.tail, first_leaf.head).unwrap().inverse());
    let q = p.apply(&s);
    let tq = s.mul(&t).mul(&s.inverse());
    let a1 = AdmissiblePath::new(p, 1).unwrap();
    let a2 = AdmissiblePath::new(q, 1).unwrap();
    let half = |a, d, k| ConnectionHalf {
        path: a,
        deck: d,
        k,
        witness: (7, 2),
    };
    let e = extract_connection(2, "x", "y", &half(&a1, &t, 2), &half(&a2, &tq, 2)).unwrap();
    assert_eq!(e.n, 4);
    assert!(e.word.is_identity());
    assert_eq!(
        extract_connection(2, "x", "y", &half(&a1, &t, 1), &half(&a2, &tq, 2)),
        Err(LeafError::SmallPower(2))
    );

    let w = GroupWord::parse(2, "a1").unwrap();
    let hx = extract_horseshoe("x", &a1, &w, &t, 2, (7, 2)).unwrap();
    let hy = extract_horseshoe("y", &a2, &w, &tq, 2, (7, 2)).unwrap();
    let g = HorseshoeGraph::new(2, vec![hx, hy], vec![e]).unwrap();
    let c = g.condensation();
    let (x, y) = (c.class_of[0], c.class_of[1]);
    assert!(c.class_reach(x, y).unwrap());
    assert!(!c.class_reach(y, x).unwrap());
}

proptest! {
    #[test]
    fn predicates_are_mobius_invariant(re in -0.8f64..0.8, im in -0.8f64..0.8, rot in 0.0f64..std::f64::consts::TAU) {
        prop_assume!(re * re + im * im < 0.64);
        let m = automorphism(re, im, rot);
        let (p1, p2) = (TransversePath::new(p1_leaves()).unwrap(), TransversePath::new(p2_leaves()).unwrap());
        let (q1, q2) = (p1.apply(&m), p2.apply(&m));
        prop_assert!(TransversePath::new(q1.leaves().to_vec()).is_ok());
        prop_assert_eq!(f_transverse_intersection(&q1, 2, &q2, 2), Ok(true));
        prop_assert_eq!(f_transverse_intersection(&q1, 2, &q1, 2), Ok(false));
        prop_assert!(path_equivalent(&q1, &q1.clone()));
        prop_assert!(!path_equivalent(&q1, &q2));
        let (a, b, c) = (la(0.6, 0.8).apply(&m), la(1.2, 1.4).apply(&m), pivot().apply(&m));
        prop_assert_eq!(is_above(&a, &b, &c), Ok(true));
        prop_assert_eq!(is_above(&b, &a, &c), Ok(false));
        let (p, t) = self_crossing();
        let tm = m.mul(&t).mul(&m.inverse());
        prop_assert_eq!(self_transverse_with_deck(&p.apply(&m), &tm).unwrap(), Some((7, 2)));
    }

    #[test]
    fn transverse_intersection_is_symmetric(shift in 0.0f64..0.04, lo in 0.0f64..0.04) {
        let p1 = TransversePath::new(vec![
            la(0.6 + shift, 0.9), la(0.55, 1.0), pivot(), ra(1.55 + lo, 1.85), ra(1.6 + lo, 1.8),
        ]).unwrap();
        let p2 = TransversePath::new(vec![
            la(0.95 + shift, 1.4), la(0.9 + lo, 1.45), pivot(), ra(0.15, 0.45 + shift), ra(0.2, 0.4),
        ]).unwrap();
        prop_assert_eq!(
            f_transverse_intersection(&p1, 2, &p2, 2),
            f_transverse_intersection(&p2, 2, &p1, 2)
        );
    }
}
