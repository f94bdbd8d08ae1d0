mod common;

use common::{normal, rng, uniform};
use proptest::prelude::*;
use wns::geometry::{
    det_exact, frobenius_distance_to_identity, outer_matrix_exact, smallest_clearing_integer,
    DirectionSet, Q, IDENTITY,
};
use wns::WnsError;

fn random_near_identity(seed: u64, radius: f64) -> [[f64; 3]; 3] {
    let mut r = rng(seed);
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = normal(&mut r);
            s[i][j] = v;
            s[j][i] = v;
        }
    }
    let f = frobenius_distance_to_identity(&std::array::from_fn(|i| {
        std::array::from_fn(|j| s[i][j] + IDENTITY[i][j])
    }));
    let u: f64 = uniform(&mut r, 0.0, 1.0);
    let scale = radius * u.cbrt() / f;
    std::array::from_fn(|i| std::array::from_fn(|j| IDENTITY[i][j] + scale * s[i][j]))
}

#[test]
fn directions_are_exact_unit_vectors() {
    let set = DirectionSet::build();
    assert_eq!(set.len(), 6);
    for f in &set.frames {
        let n2 = f.xi[0] * f.xi[0] + f.xi[1] * f.xi[1] + f.xi[2] * f.xi[2];
        assert_eq!(n2, Q::from_integer(1));
    }
}

#[test]
fn frames_are_exactly_orthonormal() {
    let set = DirectionSet::build();
    for f in &set.frames {
        let g = f.gram();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g[i][j], Q::from_integer(if i == j { 1 } else { 0 }));
            }
        }
    }
    let f = set.frame([0.6, 0.8, 0.0]).unwrap();
    assert_eq!(f.a_f64(), [-0.8, 0.6, 0.0]);
    assert_eq!(f.b_f64(), [0.0, 0.0, 1.0]);
    assert!(matches!(set.frame([1.0, 0.0, 0.0]), Err(WnsError::UnknownDirection(_))));
}

#[test]
fn n_star_is_five_by_brute_force() {
    let set = DirectionSet::build();
    assert_eq!(set.n_star, 5);
    assert_eq!(smallest_clearing_integer(&set.frames, 100), Some(5));
    for n in 1..5 {
        assert_ne!(smallest_clearing_integer(&set.frames, n), Some(n));
    }
}

#[test]
fn outer_products_are_linearly_independent() {
    let set = DirectionSet::build();
    assert_ne!(det_exact(&outer_matrix_exact(&set.frames)), Q::from_integer(0));
}

#[test]
fn identity_coefficients_are_equal_and_sum_to_the_trace() {
    let set = DirectionSet::build();
    let g = set.gamma_sq_unchecked(&IDENTITY);
    assert!((g.iter().sum::<f64>() - 3.0).abs() < 1e-14);
    for v in g {
        assert!((v - 0.5).abs() < 1e-14);
    }
}

#[test]
fn off_diagonal_xy_moves_only_the_xy_pair() {
    let set = DirectionSet::build();
    let mut r = IDENTITY;
    r[0][1] = 0.01;
    r[1][0] = 0.01;
    let g0 = set.gamma_sq_unchecked(&IDENTITY);
    let g = set.gamma_sq_unchecked(&r);
    let d: Vec<f64> = (0..6).map(|i| g[i] - g0[i]).collect();
    assert!(d[0] > 1e-4 && (d[0] + d[1]).abs() < 1e-15);
    for v in &d[2..] {
        assert!(v.abs() < 1e-15);
    }
}

#[test]
fn positivity_is_certified_on_the_ball() {
    let set = DirectionSet::build();
    assert!(set.radius_eff > 0.0 && set.radius_eff <= 0.5);
    assert!(set.certified_min_gamma_sq() >= set.margin - 1e-12);
    assert!(set.m_const.is_finite() && set.m_const > 0.0);
}

#[test]
fn outside_the_ball_is_rejected() {
    let set = DirectionSet::build();
    let mut r = IDENTITY;
    r[2][2] = 1.0 + 2.0 * set.radius_eff;
    assert!(matches!(set.gamma_coeffs(&r), Err(WnsError::OutOfBall { .. })));
}

#[test]
fn ten_thousand_reconstructions() {
    let set = DirectionSet::build();
    let radius = 0.3f64.min(set.radius_eff);
    let mut worst: f64 = 0.0;
    for seed in 0..10_000u64 {
        let r = random_near_identity(seed, radius);
        let g = set.gamma_coeffs(&r).unwrap();
        let back = set.reconstruct(&g.map(|x| x * x));
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((back[i][j] - r[i][j]).abs());
            }
        }
    }
    assert!(worst <= 1e-10, "{worst}");
}

#[test]
fn report_serializes() {
    let json = serde_json::to_string(&DirectionSet::build().report()).unwrap();
    assert!(json.contains("\"n_star\":5"));
    assert!(json.contains("3/5"));
}

proptest! {
    #[test]
    fn reconstruction_identity(seed in 0u64..u64::MAX / 2) {
        let set = DirectionSet::build();
        let r = random_near_identity(seed, set.radius_eff);
        let g = set.gamma_coeffs(&r).unwrap();
        prop_assert!(g.iter().all(|v| *v > 0.0));
        let back = set.reconstruct(&g.map(|x| x * x));
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((back[i][j] - r[i][j]).abs() <= 1e-10);
            }
        }
    }
}
