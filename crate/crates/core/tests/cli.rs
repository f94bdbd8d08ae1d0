use std::process::Command;

use wns::cli::{default_gamma, resolve_config, verify_identities, Overrides, RunConfig, VariantKey, DESK_A, DESK_B};
use wns::field::snapshot::read_trajectory;
use wns::field::{SpectralVectorField, TimeTrajectory};
use wns::WnsError;

#[test]
fn desk_configs_parse() {
    let a = RunConfig::from_toml_str(DESK_A).unwrap();
    assert_eq!(a.variant, VariantKey::A);
    assert_eq!((a.a, a.b, a.q_levels), (2.0, 7, 1));
    assert!(a.profile().unwrap().is_some());
    let b = RunConfig::from_toml_str(DESK_B).unwrap();
    assert_eq!(b.variant, VariantKey::B);
    assert_eq!((b.k, b.k2), (Some(10.0), Some(40.0)));
    let vb = b.variant_b().unwrap().unwrap();
    assert_eq!(vb.m_l, (vb.l + vb.n).powi(2));
    // The datum fits under N.
    let g = b.grid().unwrap();
    assert!(b.datum(&g).unwrap().unwrap().norm_l2() <= vb.n);
}

#[test]
fn unknown_keys_are_rejected() {
    let bad = format!("{DESK_A}\nextra_key = 1\n");
    assert!(matches!(RunConfig::from_toml_str(&bad), Err(WnsError::Config(_))));
    let bad = DESK_A.replace("k_max = 2", "k_max = 2\nkmax = 3");
    assert!(matches!(RunConfig::from_toml_str(&bad), Err(WnsError::Config(_))));
}

#[test]
fn invalid_values_are_rejected() {
    for (from, to) in [
        ("grid_n = 32", "grid_n = 31"),
        ("alpha = 0.9", "alpha = 1.5"),
        ("delta = 0.05", "delta = 0.2"),
        ("c0 = 4.0", "c0 = 3.0"),
    ] {
        let s = DESK_A.replace(from, to);
        assert_ne!(s, DESK_A, "{from}");
        let r = RunConfig::from_toml_str(&s).and_then(|c| c.profile().map(|_| c));
        assert!(r.is_err(), "{to} accepted");
    }
    let s = DESK_B.replace("K = 10.0", "K = 0.5");
    assert!(RunConfig::from_toml_str(&s).is_err());
}

#[test]
fn overrides_replace_keys() {
    let o = Overrides { seed: Some(5), levels: Some(0), grid_n: Some(64), k: Some(12.0), ..Default::default() };
    let c = resolve_config(&o, VariantKey::B).unwrap();
    assert_eq!((c.seed, c.q_levels, c.grid_n, c.k), (5, 0, 64, Some(12.0)));
}

#[test]
fn gamma_default_lies_in_range() {
    for beta in [0.01, 0.05, 0.5] {
        let g = default_gamma(beta);
        assert!(g > 0.0 && g < beta / (4.0 + beta));
    }
}

#[test]
fn identity_suite_passes() {
    let r = verify_identities(16, 1).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.lemma_samples, 10_000);
}

fn wns() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wns"))
}

#[test]
fn zero_levels_run_writes_level0_only() {
    let dir = tempfile::tempdir().unwrap();
    let st = wns()
        .args(["run-scheme", "--levels", "0", "--output-dir"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    let samples = std::fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 1);
    let level0 = std::fs::read_to_string(dir.path().join("level0.csv")).unwrap();
    assert_eq!(level0.lines().count(), 1 + 49);
    assert!(!dir.path().join("solution.wns").exists());
}

#[test]
fn noise_command_is_deterministic() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&d1, &d2] {
        assert!(wns().args(["simulate-noise", "--seed", "3", "--output-dir"]).arg(d.path()).status().unwrap().success());
    }
    for f in ["noise.wns", "noise.json"] {
        assert_eq!(std::fs::read(d1.path().join(f)).unwrap(), std::fs::read(d2.path().join(f)).unwrap());
    }
    let mut r = std::io::BufReader::new(std::fs::File::open(d1.path().join("noise.wns")).unwrap());
    let z: TimeTrajectory<SpectralVectorField> = read_trajectory(&mut r).unwrap();
    assert_eq!(z.t_lo(), 0.0);
    assert_eq!(z.samples()[0].norm_l2(), 0.0);
}

#[test]
fn run_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let st = wns().args(["run-scheme", "--output-dir"]).arg(dir.path()).status().unwrap();
    assert!(st.success());
    let sol = dir.path().join("solution.wns");
    let st = wns().args(["report", "--input"]).arg(&sol).arg("--output-dir").arg(dir.path()).status().unwrap();
    assert!(st.success());
    let e1 = std::fs::read_to_string(dir.path().join("energy_p1.csv")).unwrap();
    assert!(e1.starts_with("t,Ep,dEp,pass\n"));
    // Forcing C_p = 0 removes the penalty and the check fails.
    let st = wns()
        .args(["report", "--c-p", "0", "--p", "1", "--input"])
        .arg(&sol)
        .arg("--output-dir")
        .arg(dir.path().join("zero"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(1));
}

#[test]
fn bad_config_path_fails() {
    let out = wns().args(["run-scheme", "--config", "/nonexistent.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = wns().args(["no-such-command"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
