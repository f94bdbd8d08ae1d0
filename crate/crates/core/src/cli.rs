//! Run configuration and batch commands.
//!
//! A [`RunConfig`] is read from TOML (unknown keys are rejected) and
//! validated before any computation. Command-line flags override single
//! keys. Every command writes its artifacts into `output_dir`; with
//! `deterministic = true` no wall-clock data is written, so the same
//! configuration and seed give byte-identical files.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WnsError};
use crate::field::snapshot::{read_trajectory, write_trajectory, Flags};
use crate::field::{
    divergence, inv_divergence, leray_project, spectral_filter, Filter, Grid3, SpectralVectorField, TimeTrajectory,
};
use crate::geometry::{frobenius_distance_to_identity, DirectionSet, IDENTITY};
use crate::jets::{check_jet_identities, JetParams, Profiles, SlabQuadrature};
use crate::ledger::{
    energy_process_from_norms, measure_constants, min_c_p, process_table, report_emit, supermartingale_check,
    trajectory_norms, write_json, write_table, IterationReport, MonotoneVerdict, ProcessConstants,
    TrajectoryConstants,
};
use crate::noise::{
    simulate_noise, sobolev_constant, stopping_time, NoiseSpec, SeedSchedule, StoppingParams, StoppingRecord,
    Variant,
};
use crate::scheme::run::{compare_k, KComparison};
use crate::scheme::{
    calibrate_m0, glue_segments, level_bounds, EnergyKind, EnergyProfile, GlueReport, NoisePath, ParamSet, Regime,
    RunOptions, Scheme, SchemeRun, VariantB,
};

/// The committed desk configurations.
pub const DESK_A: &str = include_str!("../../../configs/desk_A.toml");
pub const DESK_B: &str = include_str!("../../../configs/desk_B.toml");

/// Residual contract of every level step.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Divergence tolerance of every level.
pub const DIV_TOL: f64 = 1e-10;

/// Noise keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub amplitude: f64,
    pub k_max: i64,
    #[serde(default)]
    pub decay: Option<f64>,
    #[serde(default)]
    pub sigma: Option<f64>,
    /// `δ ∈ (0, 1/12)` of the stopping times.
    pub delta: f64,
}

/// Explicit jet scales (desk override of the ladder values).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JetSection {
    pub lambda: f64,
    pub r_perp: f64,
    pub r_par: f64,
    /// Defaults to `λ r_∥ / r_⊥`.
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default)]
    pub allow_overlap: bool,
}

/// Built-in divergence-free initial data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatumKind {
    Zero,
    /// Arnold–Beltrami–Childress flow with `A = B = C = 1`.
    Abc,
    /// Taylor–Green vortex.
    TaylorGreen,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumSection {
    pub kind: DatumKind,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn four() -> f64 {
    4.0
}

fn desk() -> Regime {
    Regime::Desk
}

/// Which construction a configuration runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariantKey {
    A,
    B,
}

impl From<VariantKey> for Variant {
    fn from(v: VariantKey) -> Self {
        match v {
            VariantKey::A => Variant::A,
            VariantKey::B => Variant::B,
        }
    }
}

/// A complete run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub variant: VariantKey,
    #[serde(default = "desk")]
    pub regime: Regime,
    pub a: f64,
    pub b: u64,
    pub alpha: f64,
    pub beta: f64,
    /// `M₀`; calibrated from the run when absent.
    #[serde(default)]
    pub m0: Option<f64>,
    pub grid_n: usize,
    /// Grid carrying the noise path (defaults to the smallest grid holding
    /// every noise mode).
    #[serde(default)]
    pub noise_grid_n: Option<usize>,
    pub dt: f64,
    #[serde(rename = "Q_levels")]
    pub q_levels: u32,
    pub seed: u64,
    #[serde(default = "yes")]
    pub deterministic: bool,
    #[serde(default = "four")]
    pub resolution_factor: f64,
    /// Limit the output samples of each level.
    #[serde(default)]
    pub max_outputs: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub energy: Option<EnergyKind>,
    pub noise: NoiseSection,
    #[serde(default)]
    pub jets: Option<JetSection>,
    #[serde(default)]
    pub datum: Option<DatumSection>,
    #[serde(rename = "L", default)]
    pub l: Option<f64>,
    #[serde(rename = "N", default)]
    pub n: Option<f64>,
    #[serde(rename = "K", default)]
    pub k: Option<f64>,
    /// Second `K` of the comparison.
    #[serde(rename = "K2", default)]
    pub k2: Option<f64>,
    #[serde(rename = "M_L", default)]
    pub m_l: Option<f64>,
    /// Number of restart segments of `glue`.
    #[serde(default)]
    pub segments: Option<usize>,
}

/// Noise, stopping record and window of a run.
#[derive(Clone, Debug)]
pub struct PreparedNoise {
    /// `Z` on `[0, T]` where `T` is the stopping time.
    pub noise: NoisePath,
    pub stop: StoppingRecord,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| WnsError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    /// The committed desk configuration of a variant.
    pub fn desk(variant: VariantKey) -> Self {
        let s = match variant {
            VariantKey::A => DESK_A,
            VariantKey::B => DESK_B,
        };
        Self::from_toml_str(s).expect("committed desk configuration is valid")
    }

    /// Check every key before any computation.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(WnsError::Config(m));
        if !(self.a > 1.0) || self.b < 2 {
            return bad(format!("need a > 1 and b ≥ 2 (a = {}, b = {})", self.a, self.b));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0 && self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("alpha = {}, beta = {} must lie in (0, 1)", self.alpha, self.beta));
        }
        if self.grid_n < 4 || self.grid_n % 2 == 1 {
            return bad(format!("grid_n = {} must be even and ≥ 4", self.grid_n));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {}", self.dt));
        }
        if !(self.resolution_factor > 0.0) {
            return bad(format!("resolution_factor = {}", self.resolution_factor));
        }
        if self.m0.is_some_and(|m| !(m >= 1.0)) {
            return bad("m0 must be ≥ 1".into());
        }
        if !(self.noise.amplitude >= 0.0) || self.noise.k_max < 0 {
            return bad("noise needs amplitude ≥ 0 and k_max ≥ 0".into());
        }
        if !(self.noise.delta > 0.0 && self.noise.delta < 1.0 / 12.0) {
            return bad(format!("noise.delta = {} outside (0, 1/12)", self.noise.delta));
        }
        let ng = self.noise_grid_size();
        if 2 * self.noise.k_max >= ng as i64 || ng > self.grid_n {
            return bad(format!("noise grid {ng} must hold k_max = {} and not exceed grid_n", self.noise.k_max));
        }
        match self.variant {
            VariantKey::A => {
                if self.energy.is_none() {
                    return bad("variant A needs an [energy] table".into());
                }
                if self.datum.is_some() || self.l.is_some() || self.k.is_some() {
                    return bad("datum, L and K belong to variant B".into());
                }
            }
            VariantKey::B => {
                if self.energy.is_some() {
                    return bad("[energy] belongs to variant A".into());
                }
                for (name, v) in [("L", self.l), ("N", self.n), ("K", self.k)] {
                    if !v.is_some_and(|x| x >= 1.0) {
                        return bad(format!("variant B needs {name} ≥ 1"));
                    }
                }
            }
        }
        if self.k2.is_some_and(|k| !(k >= 1.0)) {
            return bad("K2 must be ≥ 1".into());
        }
        if self.segments.is_some_and(|s| s == 0) {
            return bad("segments must be ≥ 1".into());
        }
        Ok(())
    }

    pub fn noise_grid_size(&self) -> usize {
        self.noise_grid_n.unwrap_or_else(|| ((2 * self.noise.k_max + 2).max(4)) as usize)
    }

    pub fn grid(&self) -> Result<Grid3> {
        Grid3::new(self.grid_n)
    }

    pub fn noise_grid(&self) -> Result<Grid3> {
        Grid3::new(self.noise_grid_size())
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        let mut s = NoiseSpec::new(self.noise.amplitude, self.noise.k_max);
        if let Some(d) = self.noise.decay {
            s.decay = d;
        }
        if let Some(g) = self.noise.sigma {
            s.sigma = g;
        }
        s
    }

    pub fn params(&self) -> Result<ParamSet> {
        let mut p = ParamSet::new(self.a, self.b, self.alpha, self.beta, self.regime)?;
        if let Some(m) = self.m0 {
            p.m0 = m;
        }
        Ok(p)
    }

    pub fn profile(&self) -> Result<Option<EnergyProfile>> {
        self.energy.clone().map(EnergyProfile::new).transpose()
    }

    pub fn variant_b(&self) -> Result<Option<VariantB>> {
        match self.variant {
            VariantKey::A => Ok(None),
            VariantKey::B => Ok(Some(VariantB::new(
                self.l.unwrap_or(1.0),
                self.n.unwrap_or(1.0),
                self.k.unwrap_or(1.0),
                self.m_l,
            )?)),
        }
    }

    /// Jets from the `[jets]` override, else from the ladder at `λ₁`.
    pub fn jets(&self, set: &DirectionSet, params: &ParamSet) -> Result<JetParams> {
        match &self.jets {
            Some(j) => {
                let mu = j.mu.unwrap_or(j.lambda * j.r_par / j.r_perp);
                JetParams::with_scales(j.lambda, j.r_perp, j.r_par, mu, set, j.allow_overlap)
            }
            None => JetParams::ladder(params.lambda(1), set),
        }
    }

    pub fn scheme(&self) -> Result<Scheme> {
        let params = self.params()?;
        let set = DirectionSet::build();
        let jets = self.jets(&set, &params)?;
        Ok(Scheme {
            variant: self.variant.into(),
            params,
            profile: self.profile()?,
            b: self.variant_b()?,
            set,
            jets,
            resolution_factor: self.resolution_factor,
            grid: self.grid()?,
            dt: self.dt,
        })
    }

    /// Initial datum on `grid` (variant B).
    pub fn datum(&self, grid: &Grid3) -> Result<Option<SpectralVectorField>> {
        if self.variant == VariantKey::A {
            return Ok(None);
        }
        let d = self.datum.clone().unwrap_or(DatumSection { kind: DatumKind::Zero, amplitude: 1.0 });
        let amp = d.amplitude;
        let f = match d.kind {
            DatumKind::Zero => SpectralVectorField::zeros(grid),
            DatumKind::Abc => SpectralVectorField::from_fn(grid, |x| {
                [amp * (x[2].sin() + x[1].cos()), amp * (x[0].sin() + x[2].cos()), amp * (x[1].sin() + x[0].cos())]
            }),
            DatumKind::TaylorGreen => SpectralVectorField::from_fn(grid, |x| {
                [
                    amp * x[0].sin() * x[1].cos() * x[2].cos(),
                    -amp * x[0].cos() * x[1].sin() * x[2].cos(),
                    0.0,
                ]
            }),
        };
        Ok(Some(f))
    }

    /// Stopping thresholds; `C_S` is the Sobolev constant of the noise grid.
    pub fn stopping_params(&self) -> Result<StoppingParams> {
        let c_s = sobolev_constant(&self.noise_grid()?, self.noise_spec().sigma);
        match self.variant {
            VariantKey::A => StoppingParams::variant_a(c_s, self.noise.delta, self.a, self.b as f64, self.beta),
            VariantKey::B => StoppingParams::variant_b(c_s, self.noise.delta, self.l.unwrap_or(1.0)),
        }
    }

    /// Number of time steps up to the stopping cap.
    pub fn horizon_steps(&self) -> Result<usize> {
        let cap = self.stopping_params()?.cap;
        let steps = (cap / self.dt).round();
        if (steps * self.dt - cap).abs() > 1e-9 * cap || steps < 2.0 {
            return Err(WnsError::Config(format!("cap {cap} is not a multiple of dt = {}", self.dt)));
        }
        Ok(steps as usize)
    }

    /// Simulate the noise under `schedule`, stop it, and fix the run window:
    /// `[−2, 𝔱]` for variant A, `[−(Σm_q + 2)dt, T_L]` for variant B.
    pub fn prepare_noise(&self, scheme: &Scheme, schedule: &SeedSchedule) -> Result<PreparedNoise> {
        let big_z = simulate_noise(&self.noise_spec(), &self.noise_grid()?, self.dt, self.horizon_steps()?, schedule, 0)?;
        let stop = stopping_time(&big_z, &self.stopping_params()?)?;
        if stop.index == 0 {
            return Err(WnsError::OutOfRange("stopping time is zero".into()));
        }
        let noise = NoisePath::new(big_z.slice(0, stop.index)?, self.datum(&scheme.grid)?)?;
        let t_lo = match self.variant {
            VariantKey::A => -2.0,
            VariantKey::B => scheme.b_window_start(self.q_levels)?,
        };
        Ok(PreparedNoise { noise, t_lo, t_hi: stop.time, stop })
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Result of [`run_scheme`].
#[derive(Clone, Debug)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub prepared: PreparedNoise,
    pub run: SchemeRun,
    /// `M₀` measured on the run.
    pub m0_calibrated: f64,
    /// `u = v_Q + z_Q` on `[0, t_hi]` (if the last level was stored).
    pub solution: Option<TimeTrajectory<SpectralVectorField>>,
}

impl SchemeOutcome {
    pub fn residual_ok(&self) -> bool {
        self.run.residual_max() <= RESIDUAL_TOL
    }

    pub fn div_ok(&self) -> bool {
        self.run.levels.iter().all(|l| l.summary.div_max <= DIV_TOL)
    }
}

/// Run the configured scheme under `schedule`. Without a configured `M₀`
/// the constant is calibrated from the run and the inductive bounds are
/// re-evaluated with it.
pub fn run_scheme(cfg: &RunConfig, schedule: &SeedSchedule, store_final: bool) -> Result<SchemeOutcome> {
    let mut scheme = cfg.scheme()?;
    let prepared = cfg.prepare_noise(&scheme, schedule)?;
    let opts = RunOptions { levels: cfg.q_levels, store_final, store_stress: false, max_outputs: cfg.max_outputs };
    let mut run = scheme.run(&prepared.noise, prepared.t_lo, prepared.t_hi, &opts)?;
    let rows: Vec<_> = run.levels.iter().flat_map(|l| l.rows.iter().cloned()).collect();
    let m0_calibrated = calibrate_m0(&scheme, &rows);
    if cfg.m0.is_none() {
        scheme.params.m0 = m0_calibrated;
        run.ledger = crate::scheme::validate_params(&scheme.params, scheme.profile.as_ref());
        run.bounds = run
            .levels
            .iter()
            .flat_map(|l| {
                level_bounds(scheme.variant, &scheme.params, scheme.profile.as_ref(), scheme.b.as_ref(), &l.rows, run.t_hi)
            })
            .collect();
    }
    // A truncated run (`max_outputs`) may end before `t = 0`; it has no solution segment.
    let reaches_zero = run.final_v().is_some_and(|v| v.t_hi() >= -1e-12);
    let solution = if reaches_zero { Some(scheme.solution(&run, &prepared.noise)?) } else { None };
    Ok(SchemeOutcome { scheme, prepared, run, m0_calibrated, solution })
}

/// Energy-process verdicts for `p ∈ ps` along a solution, with `C_p` from
/// the calibration rule (`C_{p,1} = 0`) or forced to `c_p_override`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub gamma: f64,
    pub c_g: f64,
    pub stop_t: f64,
    pub constants: TrajectoryConstants,
    pub processes: Vec<(ProcessConstants, MonotoneVerdict)>,
}

/// Default Sobolev exponent `γ = β/(2(4+β))`, inside `(0, β/(4+β))`.
pub fn default_gamma(beta: f64) -> f64 {
    0.5 * beta / (4.0 + beta)
}

pub fn energy_ledger(
    u: &TimeTrajectory<SpectralVectorField>,
    ps: &[u32],
    c_g: f64,
    gamma: f64,
    stop_t: f64,
    c_p_override: Option<f64>,
) -> Result<EnergyLedger> {
    let (l2, hg) = trajectory_norms(u, gamma)?;
    let k = measure_constants(&l2, &hg, u.dt());
    let mut processes = Vec::new();
    for &p in ps {
        let c_p = match c_p_override {
            Some(c) => c,
            None => min_c_p(p, &k, c_g)?,
        };
        let consts = ProcessConstants::new(c_p, c_g);
        let proc = energy_process_from_norms(u.t_lo(), u.dt(), &l2, &hg, p, consts, gamma)?;
        processes.push((consts, supermartingale_check(&proc, stop_t)));
    }
    Ok(EnergyLedger { gamma, c_g, stop_t, constants: k, processes })
}

/// Identity-suite results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub grid_n: usize,
    pub inv_div_max: f64,
    pub inv_div_trace_max: f64,
    pub leray_div_max: f64,
    pub leray_idempotence_max: f64,
    pub lemma_samples: usize,
    pub lemma_reconstruction_max: f64,
    pub lemma_identity_coefficients: [f64; 6],
    pub jet_mean_ww_error: f64,
    pub jet_div_residual: f64,
    pub jet_curlcurl_residual: f64,
    pub jet_overlap: f64,
    pub profile_defect_max: f64,
    pub pass: bool,
}

/// Run the field, geometry and jet identity suites on an `n`-grid.
pub fn verify_identities(n: usize, seed: u64) -> Result<IdentityReport> {
    let grid = Grid3::new(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = |len: usize| (0..len).map(|_| StandardNormal.sample(&mut rng)).collect::<Vec<f64>>();
    let (mut inv_div_max, mut trace_max, mut leray_div, mut idem) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10 {
        let phys: [Vec<f64>; 3] = std::array::from_fn(|_| gauss(grid.n_phys()));
        let f = spectral_filter(&SpectralVectorField::from_physical(&grid, &phys), Filter::Neq0);
        let r = inv_divergence(&f)?;
        inv_div_max = inv_div_max.max(crate::field::divergence_tensor(&r).rel_diff(&f));
        trace_max = trace_max.max(r.trace_defect());
        let p = leray_project(&f);
        leray_div = leray_div.max(divergence(&p).max_coeff() / p.max_coeff());
        idem = idem.max(leray_project(&p).rel_diff(&p));
    }
    let set = DirectionSet::build();
    let mut lemma = 0.0f64;
    let samples = 10_000;
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    for _ in 0..samples {
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let v: f64 = StandardNormal.sample(&mut rng);
                s[i][j] = v;
                s[j][i] = v;
            }
        }
        let d = frobenius_distance_to_identity(&std::array::from_fn(|i| std::array::from_fn(|j| s[i][j] + IDENTITY[i][j])));
        let radius = 0.3f64.min(set.radius_eff) * unit.sample(&mut rng).cbrt() / d;
        let m: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| IDENTITY[i][j] + radius * s[i][j]));
        let g = set.gamma_coeffs(&m)?;
        let back = set.reconstruct(&g.map(|x| x * x));
        for i in 0..3 {
            for j in 0..3 {
                lemma = lemma.max((back[i][j] - m[i][j]).abs());
            }
        }
    }
    let ladder = JetParams::ladder(128.0, &set)?;
    let jr = check_jet_identities(&set, &ladder, Profiles::standard(), SlabQuadrature::default(), 2_000);
    let pc = &jr.profiles;
    let profile_defect_max = [(pc.phi_l2 - 1.0).abs(), pc.phi_integral.abs(), (pc.psi_l2 - 1.0).abs()]
        .into_iter()
        .fold(0.0, f64::max);
    let identity = set.gamma_sq_unchecked(&IDENTITY);
    let pass = inv_div_max <= 1e-12
        && trace_max <= 1e-12
        && leray_div <= 1e-12
        && idem <= 1e-12
        && lemma <= 1e-10
        && jr.mean_ww_error <= 1e-6
        && jr.div_residual <= 1e-8
        && jr.curlcurl_residual <= 1e-8
        && jr.sampled_overlap_max == 0.0
        && profile_defect_max <= 1e-8;
    Ok(IdentityReport {
        grid_n: n,
        inv_div_max,
        inv_div_trace_max: trace_max,
        leray_div_max: leray_div,
        leray_idempotence_max: idem,
        lemma_samples: samples,
        lemma_reconstruction_max: lemma,
        lemma_identity_coefficients: identity,
        jet_mean_ww_error: jr.mean_ww_error,
        jet_div_residual: jr.div_residual,
        jet_curlcurl_residual: jr.curlcurl_residual,
        jet_overlap: jr.sampled_overlap_max,
        profile_defect_max,
        pass,
    })
}

// ---------------------------------------------------------------- commands

#[derive(Debug, Parser)]
#[command(name = "wns", about = "Convex-integration engine for stochastic Navier–Stokes on T³")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by the configured commands; each overrides one config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration (defaults to the committed desk configuration).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "levels")]
    pub levels: Option<u32>,
    #[arg(long)]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub max_outputs: Option<usize>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long = "K")]
    pub k: Option<f64>,
    #[arg(long = "K2")]
    pub k2: Option<f64>,
    #[arg(long)]
    pub segments: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Field, geometry and jet identity suites.
    VerifyIdentities {
        #[arg(long, default_value_t = 16)]
        grid_n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out/identities")]
        output_dir: PathBuf,
    },
    /// Simulate the noise path and its stopping time.
    SimulateNoise {
        #[command(flatten)]
        o: Overrides,
        #[arg(long, value_parser = ["A", "B"], default_value = "A")]
        variant: String,
    },
    /// Run `Q` level steps of either construction.
    RunScheme {
        #[command(flatten)]
        o: Overrides,
        #[arg(long, value_parser = ["A", "B"], default_value = "A")]
        variant: String,
    },
    /// Two prescribed-datum runs with `K` and `K2` on the same noise.
    #[command(name = "compare-K")]
    CompareK {
        #[command(flatten)]
        o: Overrides,
    },
    /// Prescribed-datum restart chain glued into one solution.
    Glue {
        #[command(flatten)]
        o: Overrides,
    },
    /// Energy-process ledger of a stored solution trajectory.
    Report {
        /// `solution.wns` written by `run-scheme`.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        o: Overrides,
        /// Exponents `p`.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        p: Vec<u32>,
        /// Force `C_p` instead of the calibration rule.
        #[arg(long)]
        c_p: Option<f64>,
    },
}

fn variant_key(s: &str) -> VariantKey {
    if s == "B" {
        VariantKey::B
    } else {
        VariantKey::A
    }
}

/// Configuration from `--config` (or the committed desk file) plus overrides.
pub fn resolve_config(o: &Overrides, default: VariantKey) -> Result<RunConfig> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::desk(default),
    };
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(l) = o.levels {
        cfg.q_levels = l;
    }
    if let Some(n) = o.grid_n {
        cfg.grid_n = n;
    }
    if let Some(d) = o.dt {
        cfg.dt = d;
    }
    if o.max_outputs.is_some() {
        cfg.max_outputs = o.max_outputs;
    }
    if let Some(d) = &o.output_dir {
        cfg.output_dir = Some(d.clone());
    }
    if o.k.is_some() {
        cfg.k = o.k;
    }
    if o.k2.is_some() {
        cfg.k2 = o.k2;
    }
    if o.segments.is_some() {
        cfg.segments = o.segments;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Outcome of a command: exit status and a one-line message per failed check.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CommandStatus {
    pub failures: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl CommandStatus {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn write_wns(path: &Path, traj: &TimeTrajectory<SpectralVectorField>, flags: Flags) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_trajectory(&mut f, traj, flags, 0)
}

fn timing(deterministic: bool, start: Instant) -> Option<f64> {
    (!deterministic).then(|| start.elapsed().as_secs_f64())
}

/// Run one command.
pub fn run_command(cmd: &Command) -> Result<CommandStatus> {
    let start = Instant::now();
    let mut st = CommandStatus::default();
    match cmd {
        Command::VerifyIdentities { grid_n, seed, output_dir } => {
            let r = verify_identities(*grid_n, *seed)?;
            fs::create_dir_all(output_dir)?;
            let p = output_dir.join("identities.json");
            write_json(&p, &r)?;
            st.artifacts.push(p);
            if !r.pass {
                st.failures.push("identity suite: a tolerance was exceeded (see identities.json)".into());
            }
        }
        Command::SimulateNoise { o, variant } => {
            let cfg = resolve_config(o, variant_key(variant))?;
            let grid = cfg.noise_grid()?;
            let spec = cfg.noise_spec();
            let z = simulate_noise(&spec, &grid, cfg.dt, cfg.horizon_steps()?, &SeedSchedule::new(cfg.seed), 0)?;
            let stop = stopping_time(&z, &cfg.stopping_params()?)?;
            let dir = cfg.output_dir();
            fs::create_dir_all(&dir)?;
            let p = dir.join("noise.wns");
            write_wns(&p, &z, Flags(Flags::MEAN_ZERO | Flags::DIVERGENCE_FREE))?;
            st.artifacts.push(p);
            #[derive(Serialize)]
            struct NoiseSummary {
                seed: u64,
                c_g: f64,
                expected_energy_end: f64,
                stop: StoppingRecord,
                energy: Vec<(f64, f64)>,
                elapsed_s: Option<f64>,
            }
            let p = dir.join("noise.json");
            write_json(
                &p,
                &NoiseSummary {
                    seed: cfg.seed,
                    c_g: spec.c_g(),
                    expected_energy_end: spec.expected_energy(z.t_hi()),
                    stop,
                    energy: z.samples().iter().enumerate().map(|(i, f)| (z.time(i), f.norm_l2_sq())).collect(),
                    elapsed_s: timing(cfg.deterministic, start),
                },
            )?;
            st.artifacts.push(p);
        }
        Command::RunScheme { o, variant } => {
            let cfg = resolve_config(o, variant_key(variant))?;
            let out = run_scheme(&cfg, &SeedSchedule::new(cfg.seed), cfg.q_levels > 0)?;
            let dir = cfg.output_dir();
            let name = match cfg.variant {
                VariantKey::A => "A",
                VariantKey::B => "B",
            };
            let report = IterationReport::from_run(name, &out.run);
            st.artifacts.extend(report_emit(&report, &dir)?);
            if let Some(u) = &out.solution {
                let p = dir.join("solution.wns");
                write_wns(&p, u, Flags(Flags::MEAN_ZERO | Flags::DIVERGENCE_FREE))?;
                st.artifacts.push(p);
            }
            #[derive(Serialize)]
            struct RunSummary<'a> {
                config: &'a RunConfig,
                window: (f64, f64),
                stop: &'a StoppingRecord,
                m0_calibrated: f64,
                residual_max: f64,
                elapsed_s: Option<f64>,
            }
            let p = dir.join("run.json");
            write_json(
                &p,
                &RunSummary {
                    config: &cfg,
                    window: (out.prepared.t_lo, out.prepared.t_hi),
                    stop: &out.prepared.stop,
                    m0_calibrated: out.m0_calibrated,
                    residual_max: out.run.residual_max(),
                    elapsed_s: timing(cfg.deterministic, start),
                },
            )?;
            st.artifacts.push(p);
            if !out.residual_ok() {
                st.failures.push(format!("residual contract: {:.3e} > {RESIDUAL_TOL:e}", out.run.residual_max()));
            }
            if !out.div_ok() {
                st.failures.push("divergence-free levels: defect above tolerance".into());
            }
        }
        Command::CompareK { o } => {
            let cfg = resolve_config(o, VariantKey::B)?;
            if cfg.variant != VariantKey::B {
                return Err(WnsError::Config("compare-K needs a variant-B configuration".into()));
            }
            let scheme = cfg.scheme()?;
            let prep = cfg.prepare_noise(&scheme, &SeedSchedule::new(cfg.seed))?;
            let k1 = cfg.k.unwrap_or(1.0);
            let k2 = cfg.k2.ok_or_else(|| WnsError::Config("compare-K needs K2".into()))?;
            let c = compare_k(&scheme, &prep.noise, prep.t_hi, k1, k2, cfg.q_levels)?;
            let dir = cfg.output_dir();
            fs::create_dir_all(&dir)?;
            #[derive(Serialize)]
            struct Out<'a> {
                seed: u64,
                levels: u32,
                comparison: &'a KComparison,
                separated: bool,
                elapsed_s: Option<f64>,
            }
            let separated = (c.energy_k1 - c.energy_k2).abs() >= 1.0;
            let p = dir.join("compare_K.json");
            write_json(
                &p,
                &Out { seed: cfg.seed, levels: cfg.q_levels, comparison: &c, separated, elapsed_s: timing(cfg.deterministic, start) },
            )?;
            st.artifacts.push(p);
            println!("{}", serde_json::to_string(&c)?);
            if c.residual_max > RESIDUAL_TOL {
                st.failures.push(format!("residual contract: {:.3e}", c.residual_max));
            }
        }
        Command::Glue { o } => {
            let cfg = resolve_config(o, VariantKey::B)?;
            if cfg.variant != VariantKey::B {
                return Err(WnsError::Config("glue needs a variant-B configuration".into()));
            }
            let scheme = cfg.scheme()?;
            let u0 = cfg.datum(&scheme.grid)?.unwrap_or_else(|| SpectralVectorField::zeros(&scheme.grid));
            let g = glue_segments(
                &scheme,
                &cfg.noise_spec(),
                &cfg.noise_grid()?,
                &SeedSchedule::new(cfg.seed),
                &u0,
                cfg.segments.unwrap_or(2),
                cfg.stopping_params()?.c_s,
                cfg.noise.delta,
                cfg.q_levels,
            )?;
            let dir = cfg.output_dir();
            fs::create_dir_all(&dir)?;
            let p = dir.join("glued.wns");
            write_wns(&p, &g.glued, Flags(Flags::MEAN_ZERO | Flags::DIVERGENCE_FREE))?;
            st.artifacts.push(p);
            let p = dir.join("glue.json");
            write_json(&p, &glue_summary(&g, timing(cfg.deterministic, start)))?;
            st.artifacts.push(p);
            if g.max_seam_jump > 1e-9 {
                st.failures.push(format!("seam jump {:.3e}", g.max_seam_jump));
            }
            if g.max_seam_residual > RESIDUAL_TOL {
                st.failures.push(format!("seam residual {:.3e}", g.max_seam_residual));
            }
        }
        Command::Report { input, o, p, c_p } => {
            let cfg = resolve_config(o, VariantKey::A)?;
            let mut f = std::io::BufReader::new(fs::File::open(input)?);
            let u: TimeTrajectory<SpectralVectorField> = read_trajectory(&mut f)?;
            let ledger = energy_ledger(&u, p, cfg.noise_spec().c_g(), default_gamma(cfg.beta), u.t_hi(), *c_p)?;
            let dir = cfg.output_dir();
            fs::create_dir_all(&dir)?;
            for (_, v) in &ledger.processes {
                let path = dir.join(format!("energy_p{}.csv", v.p));
                write_table(&path, &process_table(v))?;
                st.artifacts.push(path);
                if !v.pass {
                    st.failures.push(format!("energy process p = {} increased at t = {:?}", v.p, v.first_violation));
                }
            }
            let path = dir.join("energy.json");
            write_json(&path, &ledger)?;
            st.artifacts.push(path);
        }
    }
    Ok(st)
}

/// JSON form of a [`GlueReport`] (the glued field itself goes to `glued.wns`).
pub fn glue_summary(g: &GlueReport, elapsed_s: Option<f64>) -> serde_json::Value {
    serde_json::json!({
        "segments": g.segments,
        "max_seam_jump": g.max_seam_jump,
        "max_seam_residual": g.max_seam_residual,
        "finite": g.finite,
        "samples": g.glued.len(),
        "t_end": g.glued.t_hi(),
        "norms": g.glued.samples().iter().map(|f| f.norm_l2()).collect::<Vec<_>>(),
        "elapsed_s": elapsed_s,
    })
}

/// Entry point of the binary: parse, run, print failures, map to an exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(&cli.command) {
        Ok(st) => {
            for a in &st.artifacts {
                eprintln!("wrote {}", a.display());
            }
            for f in &st.failures {
                eprintln!("FAILED {f}");
            }
            i32::from(!st.ok())
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// `(2π)³`, the torus volume.
pub fn torus_volume() -> f64 {
    (2.0 * PI).powi(3)
}
