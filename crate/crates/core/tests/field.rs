mod common;

use common::{random_field, random_mean_zero, random_smooth};
use num_complex::Complex64;
use proptest::prelude::*;
use wns::field::mollify::{mollify_onesided, SpaceMollifier, TimeMollifier};
use wns::field::norms::{norm, trajectory_norm, NormKind};
use wns::field::ops::{
    curl, divergence, divergence_tensor, gradient, heat_semigroup, inv_divergence, leray_project,
    partial, spectral_filter, traceless_product_with, traceless_tensor_product, Filter,
    ProductRule,
};
use wns::field::snapshot::{read_field, read_trajectory, write_field, write_trajectory, Flags};
use wns::field::{Grid3, SpectralScalarField, SpectralVectorField, SymmetricTensorField, TimeTrajectory};
use wns::WnsError;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

fn grid(n: usize) -> Grid3 {
    Grid3::new(n).unwrap()
}

#[test]
fn grid_rejects_odd_and_tiny_sizes() {
    assert!(matches!(Grid3::new(7), Err(WnsError::InvalidGrid(_))));
    assert!(matches!(Grid3::new(6), Err(WnsError::InvalidGrid(_))));
    assert!(matches!(Grid3::with_dealias(16, 4, 3), Err(WnsError::InvalidGrid(_))));
    let g = grid(16);
    assert_eq!(g.n_spec(), 16 * 16 * 9);
    assert!(g.dealias_cutoff() <= 8);
    assert_eq!(g.dealias_cutoff(), 5);
}

#[test]
fn forward_inverse_round_trip_on_band_limited_field() {
    let g = grid(16);
    let f = random_field::<3>(&g, 1);
    let back = SpectralVectorField::from_physical(&g, &f.to_physical());
    assert!(back.rel_diff(&f) < 1e-14);
    assert!(f.hermitian_defect() < 1e-14);
}

#[test]
fn single_mode_has_expected_coefficient() {
    let g = grid(8);
    let f = SpectralScalarField::from_fn(&g, |x| [(x[0] + 2.0 * x[2]).cos()]);
    let idx = g.index_of([1, 0, 2]).unwrap();
    assert!((f.comp(0)[idx] - Complex64::new(0.5, 0.0)).norm() < 1e-15);
}

#[test]
fn leray_annihilates_gradients() {
    let g = grid(16);
    let phi = spectral_filter(&random_field::<1>(&g, 2), Filter::Neq0);
    let p = leray_project(&gradient(&phi));
    assert!(p.norm_l2() < 1e-13 * gradient(&phi).norm_l2());
}

#[test]
fn leray_fixes_divergence_free_fields() {
    let g = grid(16);
    let v = curl(&random_field::<3>(&g, 3));
    assert!(leray_project(&v).rel_diff(&v) < 1e-14);
}

#[test]
fn leray_output_is_divergence_free_on_every_mode() {
    let g = grid(8);
    let p = leray_project(&random_field::<3>(&g, 4));
    for idx in 0..g.n_spec() {
        let k = g.k_at(idx);
        let d: Complex64 = (0..3).map(|a| p.comp(a)[idx] * k[a] as f64).sum();
        assert!(d.norm() < 1e-15, "mode {k:?}: {d}");
    }
}

#[test]
fn filters_partition_modes() {
    let g = grid(16);
    let v = random_field::<3>(&g, 5);
    let lo = spectral_filter(&v, Filter::Lt(3.5));
    let hi = spectral_filter(&v, Filter::Geq(3.5));
    assert!((&lo + &hi).rel_diff(&v) < 1e-14);
    assert!(spectral_filter(&v, Filter::Leq(8.0 * 3f64.sqrt())).rel_diff(&v) == 0.0);
    let c = SpectralVectorField::from_fn(&g, |_| [1.0, 2.0, 3.0]);
    assert_eq!(spectral_filter(&c, Filter::Neq0).norm_l2(), 0.0);
}

#[test]
fn inverse_divergence_of_zero_is_zero() {
    let g = grid(8);
    let r = inv_divergence(&SpectralVectorField::zeros(&g)).unwrap();
    assert_eq!(r.norm_l2(), 0.0);
}

#[test]
fn inverse_divergence_rejects_a_mean() {
    let g = grid(8);
    let v = &random_mean_zero(&g, 6) + &SpectralVectorField::from_fn(&g, |_| [1.0, 0.0, 0.0]);
    assert!(matches!(inv_divergence(&v), Err(WnsError::NonZeroMean { .. })));
}

#[test]
fn inverse_divergence_is_right_inverse_and_traceless() {
    for (n, seed) in [(8, 7), (16, 8), (32, 9)] {
        let g = grid(n);
        let v = random_mean_zero(&g, seed);
        let r = inv_divergence(&v).unwrap();
        assert!(divergence_tensor(&r).rel_diff(&v) < 1e-12);
        assert!(r.trace_defect() < 1e-12);
    }
}

#[test]
fn heat_semigroup_identity_and_halving() {
    let g = grid(8);
    let v = random_field::<3>(&g, 10);
    assert_eq!(heat_semigroup(&v, 0.0).unwrap().rel_diff(&v), 0.0);
    let m = SpectralVectorField::from_fn(&g, |x| [0.0, x[0].sin(), 0.0]);
    let h = heat_semigroup(&m, std::f64::consts::LN_2).unwrap();
    assert!(((h.norm_l2() / m.norm_l2()) - 0.5).abs() < 1e-14);
    assert!(matches!(heat_semigroup(&v, -1.0), Err(WnsError::NegativeTime(_))));
}

#[test]
fn heat_semigroup_smoothing_bound() {
    let g = grid(16);
    for seed in 0..100u64 {
        let u0 = leray_project(&random_mean_zero(&g, 100 + seed));
        let l2 = u0.norm_l2();
        for t in [0.01, 0.1, 0.5, 1.0] {
            let linf = norm(&heat_semigroup(&u0, t).unwrap(), &NormKind::Lp(f64::INFINITY)).unwrap();
            assert!(linf <= 10.0 * (t.powf(-0.75) + 1.0) * l2);
        }
    }
}

#[test]
fn l2_norm_of_a_sine_mode() {
    let g = grid(8);
    let f = SpectralVectorField::from_fn(&g, |x| [0.0, x[0].sin(), 0.0]);
    let want = TWO_PI.powf(1.5) / 2f64.sqrt();
    assert!((norm(&f, &NormKind::Lp(2.0)).unwrap() - want).abs() < 1e-12 * want);
    assert!((f.norm_l2() - want).abs() < 1e-12 * want);
}

#[test]
fn sobolev_norm_is_dominated_by_gradient() {
    let g = grid(8);
    for seed in 0..100u64 {
        let f = random_mean_zero(&g, 200 + seed);
        let grad: f64 = (0..3).map(|a| partial(&f, a).norm_l2_sq()).sum::<f64>().sqrt();
        for s in [0.25, 0.5, 1.0] {
            assert!(norm(&f, &NormKind::Hs(s)).unwrap() <= grad * (1.0 + 1e-12));
        }
    }
}

#[test]
fn norm_kind_validation() {
    let g = grid(8);
    let f = random_field::<3>(&g, 11);
    assert!(matches!(norm(&f, &NormKind::Lp(0.5)), Err(WnsError::UnsupportedKind(_))));
    let h = NormKind::HolderTime { alpha: 0.5, base: Box::new(NormKind::Lp(2.0)) };
    assert!(matches!(norm(&f, &h), Err(WnsError::UnsupportedKind(_))));
}

#[test]
fn holder_seminorm_of_constant_trajectory_is_zero() {
    let g = grid(8);
    let f = random_field::<3>(&g, 12);
    let traj = TimeTrajectory::new(0.0, 0.1, vec![f.clone(); 5]).unwrap();
    let h = NormKind::HolderTime { alpha: 0.3, base: Box::new(NormKind::Hs(0.0)) };
    let sup = f.norm_l2();
    assert!((trajectory_norm(&traj, &h).unwrap() - sup).abs() < 1e-12 * sup);
}

#[test]
fn cn_norm_of_a_cosine() {
    let g = grid(16);
    let f = SpectralScalarField::from_fn(&g, |x| [x[0].cos()]);
    // |f|∞ + |∂₁f|∞ (other first derivatives vanish)
    assert!((norm(&f, &NormKind::CN(1)).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn traceless_product_of_constant_unit_vector() {
    let g = grid(8);
    let e1 = SpectralVectorField::from_fn(&g, |_| [1.0, 0.0, 0.0]);
    let t = traceless_tensor_product(&e1, &e1).unwrap();
    let m = t.mean();
    let want = [2.0 / 3.0, 0.0, 0.0, -1.0 / 3.0, 0.0, -1.0 / 3.0];
    for c in 0..6 {
        assert!((m[c] - want[c]).abs() < 1e-15);
    }
}

#[test]
fn traceless_product_is_symmetric_and_trace_free() {
    let g = grid(16);
    let f = random_smooth::<3>(&g, 13, 3.0);
    let h = random_smooth::<3>(&g, 14, 3.0);
    for rule in [ProductRule::Dealiased, ProductRule::Collocation] {
        let a = traceless_product_with(&f, &h, rule).unwrap();
        let b = traceless_product_with(&h, &f, rule).unwrap();
        assert!(a.rel_diff(&b) < 1e-15);
        assert!(a.trace_defect() < 1e-12);
    }
    assert!(matches!(
        traceless_tensor_product(&f, &SpectralVectorField::zeros(&grid(8))),
        Err(WnsError::GridMismatch(_))
    ));
}

#[test]
fn dealiased_product_is_exact_for_low_modes() {
    let g = grid(16);
    let f = SpectralVectorField::from_fn(&g, |x| [x[0].sin(), (2.0 * x[1]).cos(), 0.0]);
    let t = traceless_tensor_product(&f, &f).unwrap();
    let want = SymmetricTensorField::from_fn(&g, |x| {
        let a = x[0].sin();
        let b = (2.0 * x[1]).cos();
        let s = (a * a + b * b) / 3.0;
        [a * a - s, a * b, 0.0, b * b - s, 0.0, -s]
    });
    assert!(t.rel_diff(&want) < 1e-14);
}

#[test]
fn time_mollifier_has_unit_mass_and_rounds_up() {
    let m = TimeMollifier::new(0.25, 0.1).unwrap();
    assert_eq!(m.steps(), 3);
    assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    assert_eq!(TimeMollifier::new(0.01, 0.1).unwrap().steps(), 1);
}

#[test]
fn mollifier_preserves_constants() {
    let g = grid(8);
    let c = SpectralVectorField::from_fn(&g, |_| [1.0, -2.0, 0.5]);
    let traj = TimeTrajectory::new(0.0, 0.1, vec![c.clone(); 8]).unwrap();
    let out = mollify_onesided(&traj, 0.3).unwrap();
    for s in out.samples() {
        assert!(s.rel_diff(&c) < 1e-12);
    }
    assert!(matches!(mollify_onesided(&traj, 5.0), Err(WnsError::WindowTooShort(_))));
}

#[test]
fn mollifier_is_causal_for_a_step() {
    let g = grid(8);
    let a = random_field::<3>(&g, 15);
    let b = random_field::<3>(&g, 16);
    let samples: Vec<_> = (0..12).map(|i| if i < 7 { a.clone() } else { b.clone() }).collect();
    let traj = TimeTrajectory::new(0.0, 0.1, samples).unwrap();
    let out = mollify_onesided(&traj, 0.3).unwrap();
    let pre = SpaceMollifier::new(0.3).apply(&a);
    // Output index i sits at input index i + 3; inputs before index 7 are all `a`.
    for i in 0..4 {
        assert!(out.samples()[i].rel_diff(&pre) < 1e-15, "sample {i}");
    }
    assert!(out.samples()[4].rel_diff(&pre) > 1e-3);
}

#[test]
fn mollification_error_is_first_order() {
    let g = grid(16);
    let f = SpectralScalarField::from_fn(&g, |x| [x[0].sin() * (2.0 * x[1]).cos()]);
    let c1 = norm(&f, &NormKind::CN(1)).unwrap();
    for ell in [0.05, 0.1, 0.2] {
        let d = &SpaceMollifier::new(ell).apply(&f) - &f;
        let c0 = norm(&d, &NormKind::Lp(f64::INFINITY)).unwrap();
        assert!(c0 <= 5.0 * ell * c1);
    }
}

#[test]
fn product_lemma_for_periodic_jet_factor() {
    // ‖a g‖ ≤ C ‖a‖ ‖g‖ / (2π)^{3/2} with g κ-periodic and a slowly varying.
    let g = grid(32);
    let a = SpectralScalarField::from_fn(&g, |x| [1.5 + x[0].cos() * x[1].sin()]);
    let kappa = 6.0;
    let jet = SpectralScalarField::from_fn(&g, |x| {
        let s = (kappa * x[0]).sin() + (kappa * x[2]).cos();
        [(-4.0 * (1.0 - s / 2.0)).exp()]
    });
    let prod = wns::field::ops::scalar_product_with(&a, &jet, ProductRule::Collocation).unwrap();
    let vol_sqrt = TWO_PI.powf(1.5);
    let lhs = prod.norm_l2();
    let rhs = a.norm_l2() * jet.norm_l2() / vol_sqrt;
    let c_f = 1.0;
    assert!(lhs <= 3.0 * c_f * rhs, "{lhs} vs {rhs}");
}

#[test]
fn snapshot_round_trip() {
    let g = grid(8);
    let v = random_field::<3>(&g, 17);
    let mut buf = Vec::new();
    write_field(&mut buf, &v, Flags(Flags::MEAN_ZERO), 3, 0.75).unwrap();
    assert_eq!(buf.len(), 36 + 3 * g.n_spec() * 16);
    assert_eq!(&buf[0..4], b"WNS1");
    let (h, back) = read_field::<_, 3>(&mut buf.as_slice(), None).unwrap().unwrap();
    assert_eq!(h.time_index, 3);
    assert_eq!(h.time, 0.75);
    assert!(h.flags.has(Flags::MEAN_ZERO));
    assert_eq!(back.rel_diff(&v), 0.0);
    assert!(matches!(read_field::<_, 6>(&mut buf.as_slice(), None), Err(WnsError::Format(_))));
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(matches!(read_field::<_, 3>(&mut bad.as_slice(), None), Err(WnsError::Format(_))));
}

#[test]
fn trajectory_file_round_trip() {
    let g = grid(8);
    let traj = TimeTrajectory::new(
        -0.5,
        0.25,
        (0..4).map(|s| random_field::<6>(&g, 30 + s)).collect(),
    )
    .unwrap();
    let mut buf = Vec::new();
    write_trajectory(&mut buf, &traj, Flags(Flags::TRACELESS), 0).unwrap();
    let back = read_trajectory::<_, 6>(&mut buf.as_slice()).unwrap();
    assert_eq!(back.len(), 4);
    assert_eq!(back.t_lo(), -0.5);
    assert_eq!(back.dt(), 0.25);
    for (a, b) in back.samples().iter().zip(traj.samples()) {
        assert_eq!(a.rel_diff(b), 0.0);
    }
}

#[test]
fn trajectory_window_must_be_integral() {
    let g = grid(8);
    let z = SpectralVectorField::zeros(&g);
    assert!(TimeTrajectory::on_window(0.0, 1.0, 0.3, vec![z.clone(); 4]).is_err());
    assert!(TimeTrajectory::on_window(0.0, 0.9, 0.3, vec![z.clone(); 3]).is_err());
    let t = TimeTrajectory::on_window(0.0, 0.9, 0.3, vec![z; 4]).unwrap();
    assert_eq!(t.steps(), 3);
    assert_eq!(t.index_of(0.6).unwrap(), 2);
}

#[test]
fn divergence_of_curl_vanishes() {
    let g = grid(16);
    let v = random_field::<3>(&g, 18);
    assert!(divergence(&curl(&v)).max_coeff() < 1e-12 * v.max_coeff());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn parseval_matches_physical_quadrature(seed in 0u64..1_000_000) {
        let g = grid(8);
        let f = random_field::<3>(&g, seed);
        let spec = f.norm_l2_sq();
        let phys: f64 = f.to_physical().iter().flat_map(|c| c.iter()).map(|v| v * v).sum::<f64>()
            * g.cell_volume();
        prop_assert!((spec - phys).abs() <= 1e-12 * spec);
    }

    #[test]
    fn leray_is_idempotent_and_self_adjoint(seed in 0u64..1_000_000) {
        let g = grid(8);
        let u = random_field::<3>(&g, seed);
        let v = random_field::<3>(&g, seed + 1);
        let pu = leray_project(&u);
        prop_assert!(leray_project(&pu).rel_diff(&pu) < 1e-15);
        let lhs = pu.inner(&v);
        let rhs = u.inner(&leray_project(&v));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * u.norm_l2() * v.norm_l2());
    }

    #[test]
    fn inverse_divergence_property(seed in 0u64..1_000_000, which in 0usize..3) {
        let g = grid([8, 16, 32][which]);
        let v = random_mean_zero(&g, seed);
        let r = inv_divergence(&v).unwrap();
        prop_assert!(divergence_tensor(&r).rel_diff(&v) <= 1e-12);
        prop_assert!(r.trace_defect() <= 1e-12);
    }

    #[test]
    fn heat_semigroup_law(seed in 0u64..1_000_000, s in 0.0f64..0.5, t in 0.0f64..0.5) {
        let g = grid(8);
        let u = random_field::<3>(&g, seed);
        let a = heat_semigroup(&heat_semigroup(&u, s).unwrap(), t).unwrap();
        let b = heat_semigroup(&u, s + t).unwrap();
        prop_assert!(a.rel_diff(&b) <= 1e-13);
    }

    #[test]
    fn mollifier_ignores_future_perturbations(seed in 0u64..1_000_000, at in 3usize..10) {
        let g = grid(8);
        let base: Vec<_> = (0..10).map(|i| random_field::<3>(&g, seed + i)).collect();
        let mut bumped = base.clone();
        bumped[at] = &bumped[at] + &random_field::<3>(&g, seed + 99);
        let a = mollify_onesided(&TimeTrajectory::new(0.0, 0.1, base).unwrap(), 0.2).unwrap();
        let b = mollify_onesided(&TimeTrajectory::new(0.0, 0.1, bumped).unwrap(), 0.2).unwrap();
        // output index i reads input indices i..=i+2
        for i in 0..at.saturating_sub(2) {
            prop_assert!(a.samples()[i].rel_diff(&b.samples()[i]) == 0.0);
        }
    }
}
