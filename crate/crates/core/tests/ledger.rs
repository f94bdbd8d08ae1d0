mod common;

use proptest::prelude::*;
use wns::cli::{run_scheme, RunConfig, VariantKey};
use wns::field::{Grid3, SpectralVectorField, TimeTrajectory};
use wns::ledger::{
    energy_process_from_norms, measure_constants, min_c_p, process_table, refinement_change, report_emit,
    supermartingale_check, trajectory_norms, write_table, IterationReport, ProcessConstants, TrajectoryConstants,
};
use wns::noise::SeedSchedule;
use wns::scheme::{ParamLedger, Regime, SchemeRun};

#[test]
fn zero_path_gives_pure_penalty() {
    let n = 9;
    let zeros = vec![0.0; n];
    let c = ProcessConstants::new(2.0, 0.5);
    let e1 = energy_process_from_norms(0.0, 0.125, &zeros, &zeros, 1, c, 0.1).unwrap();
    for (i, v) in e1.values.iter().enumerate() {
        assert!((v + 1.0 * i as f64 * 0.125).abs() <= 1e-15, "{v}");
    }
    for p in [2, 3] {
        let e = energy_process_from_norms(0.0, 0.125, &zeros, &zeros, p, c, 0.1).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
    }
    assert!(supermartingale_check(&e1, 1.0).pass);
}

#[test]
fn p_one_closed_form() {
    // ‖x‖² = 1 + t, ‖x‖²_{H^γ} = 2: E¹(t) = 1 + t + 4t − P t.
    let dt = 0.01;
    let t: Vec<f64> = (0..101).map(|i| i as f64 * dt).collect();
    let l2: Vec<f64> = t.iter().map(|t| 1.0 + t).collect();
    let hg = vec![2.0; t.len()];
    let c = ProcessConstants { c_p1: 0.5, c_p2: 3.0, c_g: 1.0 };
    let e = energy_process_from_norms(0.0, dt, &l2, &hg, 1, c, 0.2).unwrap();
    for (ti, v) in t.iter().zip(&e.values) {
        assert!((v - (1.0 + ti + 4.0 * ti - 3.5 * ti)).abs() <= 1e-12);
    }
    // With penalty 5 > 1 + 4 it decreases; with 4 it increases.
    let down = energy_process_from_norms(0.0, dt, &l2, &hg, 1, ProcessConstants::new(5.5, 1.0), 0.2).unwrap();
    assert!(supermartingale_check(&down, 1.0).pass);
    let up = energy_process_from_norms(0.0, dt, &l2, &hg, 1, ProcessConstants::new(4.0, 1.0), 0.2).unwrap();
    let v = supermartingale_check(&up, 1.0);
    assert!(!v.pass);
    assert_eq!(v.first_violation, Some(dt));
}

#[test]
fn stopped_samples_are_not_checked() {
    let l2 = vec![1.0, 1.0, 5.0, 9.0];
    let hg = vec![0.0; 4];
    let e = energy_process_from_norms(0.0, 1.0, &l2, &hg, 1, ProcessConstants::new(0.0, 1.0), 0.0).unwrap();
    assert!(supermartingale_check(&e, 1.0).pass);
    assert!(!supermartingale_check(&e, 2.0).pass);
}

#[test]
fn invalid_inputs_are_rejected() {
    let c = ProcessConstants::new(1.0, 1.0);
    assert!(energy_process_from_norms(0.0, 1.0, &[1.0], &[1.0], 0, c, 0.1).is_err());
    assert!(energy_process_from_norms(0.0, 1.0, &[1.0, 2.0], &[1.0], 1, c, 0.1).is_err());
    let k = TrajectoryConstants { c0: 0.0, c1: 1.0, c2: 1.0 };
    assert!(min_c_p(1, &k, 1.0).is_err());
}

fn affine_norms(c0: f64, c1: f64, n: usize, dt: f64) -> Vec<f64> {
    (0..n).map(|i| c0 + c1 * i as f64 * dt).collect()
}

#[test]
fn calibrated_c_p_makes_affine_profile_monotone() {
    let dt = 0.01;
    let l2 = affine_norms(4.0, 1.0, 101, dt);
    let hg: Vec<f64> = l2.iter().map(|x| 1.5 * x).collect();
    let k = measure_constants(&l2, &hg, dt);
    assert_eq!(k.c0, 4.0);
    assert!((k.c1 - 1.0).abs() < 1e-9);
    for p in 1..=3 {
        let c_g = 0.3;
        let c_p = min_c_p(p, &k, c_g).unwrap();
        let e = energy_process_from_norms(0.0, dt, &l2, &hg, p, ProcessConstants::new(c_p, c_g), 0.1).unwrap();
        assert!(supermartingale_check(&e, 1.0).pass, "p = {p}");
    }
    let zero = energy_process_from_norms(0.0, dt, &l2, &hg, 1, ProcessConstants::new(0.0, 0.3), 0.1).unwrap();
    assert!(!supermartingale_check(&zero, 1.0).pass);
}

proptest! {
    #[test]
    fn process_is_monotone_in_c_p(seed in 0u64..1000, p in 1u32..4, c in 0.0f64..10.0, dc in 0.0f64..10.0) {
        let mut r = common::rng(seed);
        let l2: Vec<f64> = (0..20).map(|_| common::uniform(&mut r, 0.5, 3.0)).collect();
        let hg: Vec<f64> = l2.iter().map(|x| x * common::uniform(&mut r, 1.0, 2.0)).collect();
        let a = energy_process_from_norms(0.0, 0.05, &l2, &hg, p, ProcessConstants::new(c, 1.0), 0.1).unwrap();
        let b = energy_process_from_norms(0.0, 0.05, &l2, &hg, p, ProcessConstants::new(c + dc, 1.0), 0.1).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!(y <= x);
        }
        prop_assert!(b.values[0] == a.values[0]);
    }

    #[test]
    fn refinement_is_second_order_on_smooth_norms(w in 0.5f64..3.0) {
        let n = 257;
        let dt = 1.0 / (n - 1) as f64;
        let l2: Vec<f64> = (0..n).map(|i| 2.0 + (w * i as f64 * dt).sin()).collect();
        let hg: Vec<f64> = l2.iter().map(|x| x * x).collect();
        let change = refinement_change(0.0, dt, &l2, &hg, 2, ProcessConstants::new(1.0, 1.0), 0.1).unwrap();
        prop_assert!(change < 1e-3, "{}", change);
    }
}

#[test]
fn trajectory_norms_match_fields() {
    let g = Grid3::new(8).unwrap();
    let f = common::random_mean_zero(&g, 3);
    let traj = TimeTrajectory::new(0.0, 0.5, vec![f.clone(), &f * 2.0]).unwrap();
    let (l2, hg) = trajectory_norms(&traj, 0.0).unwrap();
    assert!((l2[1] - 4.0 * l2[0]).abs() <= 1e-12 * l2[1]);
    assert!((l2[0] - f.norm_l2_sq()).abs() <= 1e-12 * l2[0]);
    assert!((hg[0] - l2[0]).abs() <= 1e-12 * l2[0]);
    let zero = TimeTrajectory::new(0.0, 0.5, vec![SpectralVectorField::zeros(&g); 3]).unwrap();
    let (l2, hg) = trajectory_norms(&zero, 0.3).unwrap();
    assert!(l2.iter().chain(&hg).all(|&x| x == 0.0));
}

#[test]
fn empty_run_emits_header_only_tables() {
    let run = SchemeRun {
        ledger: ParamLedger { regime: Regime::Desk, lines: Vec::new() },
        t_lo: -2.0,
        t_hi: 1.0,
        level0: Vec::new(),
        levels: Vec::new(),
        bounds: Vec::new(),
    };
    let dir = tempfile::tempdir().unwrap();
    let paths = report_emit(&IterationReport::from_run("A", &run), dir.path()).unwrap();
    assert_eq!(paths.len(), 5);
    for p in paths.iter().filter(|p| p.extension().is_some_and(|e| e == "csv")) {
        let s = std::fs::read_to_string(p).unwrap();
        assert_eq!(s.lines().count(), 1, "{}", p.display());
    }
    let samples = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert!(samples.starts_with("level,t,chi,"));
}

#[test]
fn process_table_has_documented_columns() {
    let e = energy_process_from_norms(0.0, 0.5, &[1.0, 1.0, 1.0], &[0.0; 3], 1, ProcessConstants::new(1.0, 1.0), 0.0)
        .unwrap();
    let v = supermartingale_check(&e, 1.0);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("e.csv");
    write_table(&p, &process_table(&v)).unwrap();
    let s = std::fs::read_to_string(&p).unwrap();
    let lines: Vec<_> = s.lines().collect();
    assert_eq!(lines[0], "t,Ep,dEp,pass");
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[2], "0.5,0.5,-0.5,true");
}

#[test]
fn report_emission_is_idempotent() {
    let mut cfg = RunConfig::desk(VariantKey::A);
    cfg.max_outputs = Some(2);
    let out = run_scheme(&cfg, &SeedSchedule::new(cfg.seed), false).unwrap();
    let report = IterationReport::from_run("A", &out.run);
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let p1 = report_emit(&report, d1.path()).unwrap();
    report_emit(&report, d1.path()).unwrap();
    let p2 = report_emit(&report, d2.path()).unwrap();
    for (a, b) in p1.iter().zip(&p2) {
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "{}", a.display());
    }
    let samples = std::fs::read_to_string(d1.path().join("samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 3);
}
