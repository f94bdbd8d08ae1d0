mod common;

use proptest::prelude::*;
use wns::cli::{run_scheme, RunConfig, VariantKey};
use wns::field::{Grid3, SpectralVectorField, TimeTrajectory};
use wns::noise::{SeedSchedule, Variant};
use wns::scheme::{
    chi, extend_solution, validate_params, EnergyKind, EnergyProfile, ParamSet, Regime, SampleRow, VariantB,
};
use wns::WnsError;

fn desk_a(grid_n: usize, max_outputs: Option<usize>) -> RunConfig {
    let mut cfg = RunConfig::desk(VariantKey::A);
    cfg.grid_n = grid_n;
    cfg.max_outputs = max_outputs;
    cfg
}

fn same_row(a: &SampleRow, b: &SampleRow) -> bool {
    a.t == b.t && a.v_norm == b.v_norm && a.r_l1 == b.r_l1 && a.energy == b.energy
}

#[test]
fn residual_contract_and_divergence_at_32() {
    let cfg = desk_a(32, Some(4));
    let out = run_scheme(&cfg, &SeedSchedule::new(cfg.seed), false).unwrap();
    let rows = out.run.last_rows();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().skip(1).all(|r| r.residual.is_some()));
    assert!(out.run.residual_max() <= 1e-6, "residual {}", out.run.residual_max());
    assert!(out.div_ok());
    for r in rows {
        assert!(r.div_v <= 1e-10 && r.mean_v.abs() <= 1e-12, "{r:?}");
    }
}

#[test]
fn zero_noise_keeps_level_zero_stress_zero() {
    let mut cfg = desk_a(32, Some(2));
    cfg.noise.amplitude = 0.0;
    let out = run_scheme(&cfg, &SeedSchedule::new(1), false).unwrap();
    assert!(out.run.level0.iter().all(|r| r.r_l1 == 0.0 && r.energy == 0.0));
    assert_eq!(out.prepared.stop.time, 1.0);
}

#[test]
fn variant_b_new_level_vanishes_near_zero() {
    let mut cfg = RunConfig::desk(VariantKey::B);
    cfg.grid_n = 32;
    cfg.q_levels = 1;
    let out = run_scheme(&cfg, &SeedSchedule::new(cfg.seed), true).unwrap();
    let half_sigma = 0.5 * ParamSet::sigma(0);
    let rows = out.run.last_rows();
    assert!(rows.iter().any(|r| r.t > half_sigma));
    for r in rows.iter().filter(|r| r.t <= half_sigma) {
        assert_eq!(r.chi, 0.0);
        assert!(r.v_increment <= 1e-14, "t = {}: {}", r.t, r.v_increment);
    }
    let zero = out.run.bounds.iter().find(|b| b.family == "inductionv-ps-zero").unwrap();
    assert!(zero.pass, "{zero:?}");
    // u = v₁ + z₁ starts from the datum.
    let u = out.solution.unwrap();
    let u0 = cfg.datum(&out.scheme.grid).unwrap().unwrap();
    assert!((&u.samples()[0] - &u0).norm_l2() <= 1e-12 * u0.norm_l2());
}

#[test]
fn outputs_are_causal_in_the_noise() {
    let cfg = desk_a(32, Some(44));
    let base = run_scheme(&cfg, &SeedSchedule::new(7), false).unwrap();
    // Increments from step 8 on (t > 0.5) come from another seed.
    let switched = run_scheme(&cfg, &SeedSchedule::switched_at(7, 9, 99), false).unwrap();
    let (a, b) = (base.run.last_rows(), switched.run.last_rows());
    let t_switch = 8.0 * cfg.dt;
    let mut compared = 0;
    for (x, y) in a.iter().zip(b) {
        if x.t <= t_switch + 1e-12 {
            assert!(same_row(x, y), "t = {}", x.t);
            compared += 1;
        }
    }
    assert!(compared > 30);
    assert!(a.iter().zip(b).any(|(x, y)| !same_row(x, y)), "switch had no effect");
}

#[test]
fn negative_times_do_not_depend_on_the_seed() {
    let cfg = desk_a(32, Some(44));
    let a = run_scheme(&cfg, &SeedSchedule::new(3), false).unwrap();
    let b = run_scheme(&cfg, &SeedSchedule::new(4), false).unwrap();
    let t1 = cfg.params().unwrap().t_q(1);
    let (ra, rb) = (a.run.last_rows(), b.run.last_rows());
    let window: Vec<_> = ra.iter().zip(rb).filter(|(x, _)| x.t >= t1 - 1e-12 && x.t <= 0.0).collect();
    assert!(window.len() >= 16);
    for (x, y) in window {
        assert!(same_row(x, y), "t = {}", x.t);
    }
}

#[test]
fn level_zero_gap_is_e_minus_energy() {
    let cfg = desk_a(32, Some(1));
    let out = run_scheme(&cfg, &SeedSchedule::new(cfg.seed), false).unwrap();
    let e = cfg.profile().unwrap().unwrap();
    for r in &out.run.level0 {
        assert!((r.gap.unwrap() - (e.e(r.t) - r.energy)).abs() <= 1e-12);
    }
}

#[test]
fn variant_b_rejects_large_datum() {
    let mut cfg = RunConfig::desk(VariantKey::B);
    cfg.grid_n = 32;
    cfg.n = Some(1.0);
    let err = run_scheme(&cfg, &SeedSchedule::new(1), false).unwrap_err();
    assert!(matches!(err, WnsError::DatumTooLarge { .. }), "{err}");
}

#[test]
fn variant_b_constants() {
    let b = VariantB::new(2.0, 3.0, 10.0, None).unwrap();
    assert_eq!(b.m_l, 25.0);
    assert_eq!(b.a_const, 100.0);
    assert!(VariantB::new(2.0, 3.0, 10.0, Some(24.0)).is_err());
    assert!(VariantB::new(0.5, 3.0, 10.0, None).is_err());
    assert_eq!(ParamSet::gamma_b(3, 10.0), 10.0);
    assert_eq!(ParamSet::gamma_b(2, 10.0), 0.25);
}

#[test]
fn chi_for_variant_a_is_one() {
    for t in [-2.0, 0.0, 0.3, 1.0] {
        assert_eq!(chi(Variant::A, 0, t), 1.0);
    }
}

proptest! {
    #[test]
    fn chi_is_a_monotone_cutoff(q in 0u32..6, t in -1.0f64..3.0, s in 0.0f64..0.5) {
        let sig = ParamSet::sigma(q as i32);
        let c = chi(Variant::B, q, t);
        prop_assert!((0.0..=1.0).contains(&c));
        if t <= 0.5 * sig {
            prop_assert_eq!(c, 0.0);
        }
        if t >= sig {
            prop_assert_eq!(c, 1.0);
        }
        prop_assert!(chi(Variant::B, q, t + s) >= c);
    }

    #[test]
    fn ladder_is_ordered(log2_a in 0.5f64..8.0, b in 2u64..12, beta in 0.001f64..0.2) {
        let p = ParamSet::with_log2_a(log2_a, b, 0.5, beta, Regime::Desk).unwrap();
        prop_assert!((p.delta(1) - 1.0).abs() <= 1e-15);
        for q in 1..3 {
            prop_assert!(p.delta(q + 1) < p.delta(q));
            prop_assert!(p.ln_lambda(q + 1) > p.ln_lambda(q));
            prop_assert!(p.t_q(q + 1) >= p.t_q(q));
            prop_assert!(p.ln_ell(q) < 0.0 && p.ell(q) >= 0.0);
        }
        prop_assert!((p.t_q(1) + 1.0).abs() <= 1e-15);
    }

    #[test]
    fn affine_profile_bounds(c0 in 4.0f64..20.0, c1 in -3.0f64..3.0) {
        let e = EnergyProfile::affine(c0, c1);
        if c0 + c1.min(0.0) >= 4.0 {
            let e = e.unwrap();
            prop_assert!((e.e_lower - (c0 + c1.min(0.0))).abs() <= 1e-12);
            prop_assert!((e.e_bar - (c0 + c1.max(0.0))).abs() <= 1e-12);
            prop_assert!((e.e_tilde - c1.abs()).abs() <= 1e-12);
            prop_assert_eq!(e.e(-1.5), c0);
            prop_assert_eq!(e.de(-0.5), 0.0);
        } else {
            prop_assert!(e.is_err());
        }
    }
}

#[test]
fn table_profile_interpolates() {
    let e = EnergyProfile::new(EnergyKind::Table { times: vec![0.0, 0.5, 1.0], values: vec![4.0, 5.0, 4.5] }).unwrap();
    assert_eq!(e.e(0.0), 4.0);
    assert_eq!(e.e(0.5), 5.0);
    assert_eq!(e.e(1.0), 4.5);
    let h = 1e-6;
    for t in [0.1, 0.3, 0.7, 0.9] {
        let fd = (e.e(t + h) - e.e(t - h)) / (2.0 * h);
        assert!((fd - e.de(t)).abs() < 1e-6);
    }
    assert!(EnergyProfile::new(EnergyKind::Table { times: vec![0.0, 1.0], values: vec![3.0, 5.0] }).is_err());
}

#[test]
fn parameter_example_with_alpha_b_in_8n() {
    let alpha = 1.0 / 1400.0;
    let e = EnergyProfile::affine(4.0, 1.0).unwrap();
    // With b = 56 the product αb = 1/25 is not a positive multiple of 8.
    let b = 56u64;
    let p = ParamSet::with_log2_a(1e12, b, alpha, alpha / (19.0 * (b * b) as f64), Regime::Paper).unwrap();
    let l = validate_params(&p, Some(&e));
    let failed: Vec<_> = l.energy_scheme_lines().filter(|x| !x.pass).map(|x| x.id.as_str()).collect();
    assert!(failed.contains(&"alpha-b-8"), "{failed:?}");
    // b = 11200 = 56·200 gives αb = 8 and every line passes.
    let b = 11200u64;
    let p = ParamSet::with_log2_a(1e12, b, alpha, alpha / (19.0 * (b * b) as f64), Regime::Paper).unwrap();
    let l = validate_params(&p, Some(&e));
    assert!(l.all_pass(), "{:?}", l.failures());
}

#[test]
fn desk_parameters_record_failures() {
    let p = ParamSet::new(2.0, 7, 0.125, 0.01, Regime::Desk).unwrap();
    let l = validate_params(&p, Some(&EnergyProfile::affine(4.0, 1.0).unwrap()));
    let failed: Vec<_> = l.failures().iter().map(|x| x.id.clone()).collect();
    assert!(failed.contains(&"b-56".to_string()));
    assert!(failed.contains(&"alpha-beta".to_string()));
    assert!(!l.all_pass());
    // Without a profile the energy lines are absent.
    let l = validate_params(&p, None);
    assert!(l.lines.iter().all(|x| !x.id.starts_with("aaa2")));
}

#[test]
fn paper_regime_rejects_failing_ledger() {
    let mut cfg = desk_a(32, Some(1));
    cfg.regime = Regime::Paper;
    let err = run_scheme(&cfg, &SeedSchedule::new(1), false).unwrap_err();
    assert!(matches!(err, WnsError::InvalidParams(_)), "{err}");
}

fn constant_traj(t0: f64, n: usize, f: &SpectralVectorField) -> TimeTrajectory<SpectralVectorField> {
    TimeTrajectory::new(t0, 0.25, vec![f.clone(); n]).unwrap()
}

#[test]
fn extend_single_segment_is_identity() {
    let g = Grid3::new(8).unwrap();
    let f = common::random_mean_zero(&g, 4);
    let s = constant_traj(0.0, 3, &f);
    let e = extend_solution(std::slice::from_ref(&s), 1e-9).unwrap();
    assert_eq!(e.len(), 3);
    assert_eq!(e.samples()[2], f);
}

#[test]
fn extend_rejects_seam_mismatch() {
    let g = Grid3::new(8).unwrap();
    let f = common::random_mean_zero(&g, 4);
    let h = common::random_mean_zero(&g, 5);
    let a = constant_traj(0.0, 3, &f);
    let ok = extend_solution(&[a.clone(), constant_traj(0.0, 4, &f)], 1e-9).unwrap();
    assert_eq!(ok.len(), 6);
    assert_eq!(ok.t_hi(), 1.25);
    let err = extend_solution(&[a, constant_traj(0.0, 2, &h)], 1e-9).unwrap_err();
    assert!(matches!(err, WnsError::SeamMismatch(_)));
}
