//! The `GG*`-Wiener process, the stochastic Stokes convolution, stopping
//! times and the restart shift.
//!
//! The noise lives on a finite set of Fourier modes `0 < |k|_∞ ≤ k_max`. For
//! every pair `±k` it drives four real degrees of freedom along the
//! `L²`-orthonormal basis `√2(2π)^{−3/2} cos(k·x) e_j`,
//! `√2(2π)^{−3/2} sin(k·x) e_j`, where `e_1, e_2` span the plane `⊥ k`.
//! Each degree of freedom is an Ornstein–Uhlenbeck process
//! `dX = −|k|²X dt + g_k dβ`, advanced by its exact transition law
//! `X(t+dt) = e^{−|k|²dt}X(t) + g_k σ_k(dt) η`,
//! `σ_k(dt)² = (1 − e^{−2|k|²dt})/(2|k|²)`.
//!
//! Gaussian draws come from a counter-based stream: ChaCha8 keyed by the
//! seed, with the stream number fixed by the wavevector and the word
//! position by the time step, so a path does not depend on grid size,
//! iteration order or on how many steps were simulated before.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, WnsError};
use crate::field::norms::{norm, HolderL2Tracker, NormKind};
use crate::field::ops::{heat_semigroup, spectral_filter, Filter};
use crate::field::{Grid3, SpectralVectorField, TimeTrajectory};

/// Relative divergence tolerance accepted for initial data.
pub const DIV_TOL: f64 = 1e-10;

/// Noise amplitudes `g_k = amplitude · |k|^{−decay}` on `0 < |k|_∞ ≤ k_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Overall amplitude (zero gives the deterministic heat flow).
    pub amplitude: f64,
    /// Decay exponent `s_g` of the default spectrum.
    #[serde(default = "default_decay")]
    pub decay: f64,
    /// Largest `|k|_∞` carrying noise.
    pub k_max: i64,
    /// Regularity slack `σ` in the Sobolev exponent `(3+σ)/2` of `C_S`.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_decay() -> f64 {
    3.0
}

fn default_sigma() -> f64 {
    0.01
}

/// One noise-carrying mode pair `±k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseMode {
    pub k: [i64; 3],
    pub g: f64,
    /// Orthonormal basis of the plane `⊥ k`.
    pub e: [[f64; 3]; 2],
}

impl NoiseMode {
    /// `|k|²`.
    pub fn k2(&self) -> f64 {
        (self.k[0] * self.k[0] + self.k[1] * self.k[1] + self.k[2] * self.k[2]) as f64
    }

    /// Stream key of the counter-based generator (independent of the grid).
    pub fn key(&self) -> u64 {
        let enc = |x: i64| (x + 1024) as u64 & 0x7ff;
        (enc(self.k[0]) << 22) | (enc(self.k[1]) << 11) | enc(self.k[2])
    }
}

/// Representative of `±k` in the half space.
fn is_half_representative(k: [i64; 3]) -> bool {
    k[2] > 0 || (k[2] == 0 && (k[1] > 0 || (k[1] == 0 && k[0] > 0)))
}

/// Orthonormal pair spanning `k^⊥`.
pub fn solenoidal_basis(k: [i64; 3]) -> [[f64; 3]; 2] {
    let kf = k.map(|x| x as f64);
    let kn = (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt();
    let u = kf.map(|x| x / kn);
    // Cross with the axis least aligned with k.
    let ax = (0..3).min_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs())).expect("three axes");
    let mut t = [0.0; 3];
    t[ax] = 1.0;
    let cross = |a: [f64; 3], b: [f64; 3]| [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let e1 = cross(u, t);
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    let e1 = e1.map(|x| x / n1);
    let e2 = cross(u, e1);
    [e1, e2]
}

impl NoiseSpec {
    /// Default spectrum with `s_g = 3`, `σ = 0.01`.
    pub fn new(amplitude: f64, k_max: i64) -> Self {
        Self { amplitude, decay: default_decay(), k_max, sigma: default_sigma() }
    }

    /// Check amplitudes, exponents and the mode box.
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0 && self.amplitude.is_finite()) {
            return Err(WnsError::InvalidNoise(format!("amplitude {}", self.amplitude)));
        }
        if self.k_max < 0 {
            return Err(WnsError::InvalidNoise(format!("k_max {}", self.k_max)));
        }
        if !(self.decay > 0.0) {
            return Err(WnsError::InvalidNoise(format!("decay {}", self.decay)));
        }
        if !(self.sigma > 0.0) {
            return Err(WnsError::InvalidNoise(format!("sigma {}", self.sigma)));
        }
        Ok(())
    }

    /// Amplitude `g_k` (zero at `k = 0` and outside the mode box).
    pub fn g(&self, k: [i64; 3]) -> f64 {
        let inf = k.iter().map(|x| x.abs()).max().unwrap_or(0);
        if inf == 0 || inf > self.k_max {
            return 0.0;
        }
        let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        self.amplitude * k2.powf(-0.5 * self.decay)
    }

    /// The noise-carrying mode pairs, in a fixed deterministic order.
    pub fn modes(&self) -> Vec<NoiseMode> {
        let m = self.k_max;
        let mut out = Vec::new();
        for k3 in -m..=m {
            for k2 in -m..=m {
                for k1 in -m..=m {
                    let k = [k1, k2, k3];
                    if !is_half_representative(k) {
                        continue;
                    }
                    let g = self.g(k);
                    if g > 0.0 {
                        out.push(NoiseMode { k, g, e: solenoidal_basis(k) });
                    }
                }
            }
        }
        out
    }

    /// `C_G = Σ g²` over all real degrees of freedom (four per pair `±k`).
    pub fn c_g(&self) -> f64 {
        self.modes().iter().map(|m| 4.0 * m.g * m.g).sum()
    }

    /// `E‖z(t)‖²_{L²}` for `z(0) = 0`: `Σ 4 g_k² (1 − e^{−2|k|²t})/(2|k|²)`.
    pub fn expected_energy(&self, t: f64) -> f64 {
        self.modes().iter().map(|m| 4.0 * m.g * m.g * ou_variance(m.k2(), t)).sum()
    }

    /// Fail unless every noise mode is represented (away from Nyquist).
    pub fn check_grid(&self, grid: &Grid3) -> Result<()> {
        if 2 * self.k_max >= grid.n() as i64 {
            return Err(WnsError::InvalidNoise(format!(
                "k_max = {} needs a grid with n > {}",
                self.k_max,
                2 * self.k_max
            )));
        }
        Ok(())
    }
}

/// Variance of a unit-amplitude OU coordinate at time `t` from zero:
/// `(1 − e^{−2|k|²t})/(2|k|²)`.
pub fn ou_variance(k2: f64, t: f64) -> f64 {
    (1.0 - (-2.0 * k2 * t).exp()) / (2.0 * k2)
}

/// Seed schedule: one seed, optionally replaced from a given step on (used
/// to perturb the noise after a time and check causality).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSchedule {
    pub seed: u64,
    pub reseed: Option<(u64, u64)>,
}

impl SeedSchedule {
    pub fn new(seed: u64) -> Self {
        Self { seed, reseed: None }
    }

    /// Use `other` for all steps `≥ step`.
    pub fn switched_at(seed: u64, step: u64, other: u64) -> Self {
        Self { seed, reseed: Some((step, other)) }
    }

    pub fn seed_for(&self, step: u64) -> u64 {
        match self.reseed {
            Some((from, other)) if step >= from => other,
            _ => self.seed,
        }
    }
}

/// The four standard normals of mode `mode` at global time step `step`.
pub fn mode_normals(schedule: &SeedSchedule, mode: &NoiseMode, step: u64) -> [f64; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed_for(step));
    rng.set_stream(mode.key());
    rng.set_word_pos(u128::from(step) << 20);
    std::array::from_fn(|_| StandardNormal.sample(&mut rng))
}

/// Add a real coefficient pattern `c·cos(k·x) + s·sin(k·x)` (vector valued)
/// to a spectral field: `û_k += (c − i s)/2`, `û_{−k} += (c + i s)/2`.
fn add_real_mode(field: &mut SpectralVectorField, k: [i64; 3], c: [f64; 3], s: [f64; 3]) {
    let grid = field.grid().clone();
    let kneg = [-k[0], -k[1], -k[2]];
    let ip = grid.index_of(k);
    let im = grid.index_of(kneg);
    for j in 0..3 {
        let z = Complex64::new(0.5 * c[j], -0.5 * s[j]);
        if let Some(i) = ip {
            field.comp_mut(j)[i] += z;
        }
        if let Some(i) = im {
            field.comp_mut(j)[i] += z.conj();
        }
    }
}

/// Real OU coordinates of all modes, in the order of `NoiseSpec::modes`
/// (four per mode: `(cos, e1), (cos, e2), (sin, e1), (sin, e2)`).
pub fn mode_coordinates(field: &SpectralVectorField, modes: &[NoiseMode]) -> Vec<[f64; 4]> {
    let grid = field.grid();
    let s = (2.0 * PI).powf(1.5) / 2f64.sqrt();
    modes
        .iter()
        .map(|m| {
            let i = grid.index_of(m.k).expect("mode on grid");
            let v: [Complex64; 3] = std::array::from_fn(|j| field.comp(j)[i]);
            let proj = |e: &[f64; 3]| v[0] * e[0] + v[1] * e[1] + v[2] * e[2];
            let (p1, p2) = (proj(&m.e[0]), proj(&m.e[1]));
            // û = (c − i s)/2 · basis scale ⇒ c = 2 Re û / scale, s = −2 Im û / scale
            [2.0 * p1.re * s, 2.0 * p2.re * s, -2.0 * p1.im * s, -2.0 * p2.im * s]
        })
        .collect()
}

/// Simulate the noise part `Z` (`Z(0) = 0`) on `[0, steps·dt]`. Time step
/// `i → i+1` uses the draws of global step `step_offset + i`.
pub fn simulate_noise(
    spec: &NoiseSpec,
    grid: &Grid3,
    dt: f64,
    steps: usize,
    schedule: &SeedSchedule,
    step_offset: u64,
) -> Result<TimeTrajectory<SpectralVectorField>> {
    spec.validate()?;
    spec.check_grid(grid)?;
    if !(dt > 0.0) {
        return Err(WnsError::InvalidParams(format!("dt = {dt}")));
    }
    let modes = spec.modes();
    let basis = 2f64.sqrt() * (2.0 * PI).powf(-1.5);
    let mut z = SpectralVectorField::zeros(grid);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(z.clone());
    for i in 0..steps {
        z = heat_semigroup(&z, dt)?;
        for m in &modes {
            let k2 = m.k2();
            let amp = m.g * ou_variance(k2, dt).sqrt() * basis;
            let eta = mode_normals(schedule, m, step_offset + i as u64);
            let c: [f64; 3] = std::array::from_fn(|j| amp * (eta[0] * m.e[0][j] + eta[1] * m.e[1][j]));
            let s: [f64; 3] = std::array::from_fn(|j| amp * (eta[2] * m.e[0][j] + eta[3] * m.e[1][j]));
            add_real_mode(&mut z, m.k, c, s);
        }
        out.push(z.clone());
    }
    TimeTrajectory::new(0.0, dt, out)
}

/// The stochastic Stokes convolution `z = e^{tΔ}z₀ + Z` on `[0, T]`.
pub fn simulate_stokes(
    spec: &NoiseSpec,
    z0: &SpectralVectorField,
    dt: f64,
    t_end: f64,
    schedule: &SeedSchedule,
) -> Result<TimeTrajectory<SpectralVectorField>> {
    let defect = z0.divergence_defect();
    if defect > DIV_TOL {
        return Err(WnsError::NotDivergenceFree(defect));
    }
    let steps = (t_end / dt).round();
    if (steps * dt - t_end).abs() > 1e-9 * t_end.max(1.0) || steps < 1.0 {
        return Err(WnsError::InvalidParams(format!("T = {t_end} is not a multiple of dt = {dt}")));
    }
    let big_z = simulate_noise(spec, z0.grid(), dt, steps as usize, schedule, 0)?;
    let samples = big_z
        .samples()
        .iter()
        .enumerate()
        .map(|(i, zi)| Ok(&heat_semigroup(z0, i as f64 * dt)? + zi))
        .collect::<Result<Vec<_>>>()?;
    TimeTrajectory::new(0.0, dt, samples)
}

/// `z_in(t) = e^{tΔ}u₀` on the grid times of a trajectory.
pub fn heat_trajectory(
    u0: &SpectralVectorField,
    like: &TimeTrajectory<SpectralVectorField>,
) -> Result<TimeTrajectory<SpectralVectorField>> {
    let samples = (0..like.len())
        .map(|i| heat_semigroup(u0, like.time(i) - like.t_lo()))
        .collect::<Result<Vec<_>>>()?;
    TimeTrajectory::new(like.t_lo(), like.dt(), samples)
}

/// Frequency cutoff `f(q) = λ_{q+1}^{α/8}`.
pub fn cutoff(lambda_next: f64, alpha: f64) -> f64 {
    lambda_next.powf(alpha / 8.0)
}

/// `z_q = z_in + P_{≤f} Z` sample by sample.
pub fn project_noise(
    z_in: Option<&TimeTrajectory<SpectralVectorField>>,
    big_z: &TimeTrajectory<SpectralVectorField>,
    f: f64,
) -> Result<TimeTrajectory<SpectralVectorField>> {
    let samples = big_z
        .samples()
        .iter()
        .enumerate()
        .map(|(i, zi)| {
            let p = spectral_filter(zi, Filter::Leq(f));
            match z_in {
                Some(zin) => &zin.samples()[i] + &p,
                None => p,
            }
        })
        .collect();
    TimeTrajectory::new(big_z.t_lo(), big_z.dt(), samples)
}

/// Which construction a stopping rule belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Prescribed energy.
    A,
    /// Prescribed initial datum.
    B,
}

/// Thresholds of the stopping times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingParams {
    pub variant: Variant,
    /// Sobolev constant `C_S`.
    pub c_s: f64,
    /// `δ ∈ (0, 1/12)`.
    pub delta: f64,
    /// Threshold of `‖z(t)‖_{H^{1−δ}}` and of `‖z‖_{C_t^{1/2−2δ}L²}`.
    pub sobolev_threshold: f64,
    /// Variant A: threshold `a^{βb−b²β}/√12` of `‖z(t)‖_{L²}`.
    pub l2_threshold: Option<f64>,
    /// Cap (`1` for A, `L` for B).
    pub cap: f64,
}

impl StoppingParams {
    /// Thresholds `1/C_S`, `1/C_S`, `a^{βb−b²β}/√12`, cap `1`.
    pub fn variant_a(c_s: f64, delta: f64, a: f64, b: f64, beta: f64) -> Result<Self> {
        Self::check(c_s, delta)?;
        Ok(Self {
            variant: Variant::A,
            c_s,
            delta,
            sobolev_threshold: 1.0 / c_s,
            l2_threshold: Some(a.powf(beta * b - b * b * beta) / 12f64.sqrt()),
            cap: 1.0,
        })
    }

    /// Thresholds `L/C_S`, `L/C_S`, cap `L`.
    pub fn variant_b(c_s: f64, delta: f64, level: f64) -> Result<Self> {
        Self::check(c_s, delta)?;
        if !(level >= 1.0) {
            return Err(WnsError::InvalidParams(format!("L = {level} must be ≥ 1")));
        }
        Ok(Self {
            variant: Variant::B,
            c_s,
            delta,
            sobolev_threshold: level / c_s,
            l2_threshold: None,
            cap: level,
        })
    }

    fn check(c_s: f64, delta: f64) -> Result<()> {
        if !(delta > 0.0 && delta < 1.0 / 12.0) {
            return Err(WnsError::InvalidParams(format!("delta = {delta} outside (0, 1/12)")));
        }
        if !(c_s > 0.0) {
            return Err(WnsError::InvalidParams(format!("C_S = {c_s}")));
        }
        Ok(())
    }
}

/// The condition that stopped the clock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Sobolev,
    Holder,
    L2,
    Cap,
    /// The trajectory ended before any threshold or the cap.
    Horizon,
}

/// Result of a stopping-time scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingRecord {
    pub time: f64,
    pub index: usize,
    pub reason: StopReason,
    pub sobolev_norm: f64,
    pub holder_norm: f64,
    pub l2_norm: f64,
}

/// Scan a trajectory starting at `t = 0` for the first grid time at which a
/// threshold is met; otherwise stop at the cap.
pub fn stopping_time(
    traj: &TimeTrajectory<SpectralVectorField>,
    params: &StoppingParams,
) -> Result<StoppingRecord> {
    if traj.t_lo().abs() > 1e-12 {
        return Err(WnsError::OutOfRange(format!("trajectory starts at {} ≠ 0", traj.t_lo())));
    }
    let alpha = 0.5 - 2.0 * params.delta;
    let mut tracker = HolderL2Tracker::new(alpha, traj.dt());
    let grid = traj.samples()[0].grid().clone();
    let weights: Vec<f64> =
        (0..3).flat_map(|_| (0..grid.n_spec()).map(|i| grid.multiplicity(i))).collect();
    let mut last = None;
    for (i, z) in traj.samples().iter().enumerate() {
        let t = traj.time(i);
        if t > params.cap + 1e-12 {
            break;
        }
        let hs = norm(z, &NormKind::Hs(1.0 - params.delta))?;
        let flat: Vec<Complex64> = z.comps().iter().flat_map(|c| c.iter().copied()).collect();
        let holder = tracker.push(flat, &weights);
        let l2 = z.norm_l2();
        let reason = if hs >= params.sobolev_threshold {
            Some(StopReason::Sobolev)
        } else if holder >= params.sobolev_threshold {
            Some(StopReason::Holder)
        } else if params.l2_threshold.is_some_and(|th| l2 >= th) {
            Some(StopReason::L2)
        } else if (t - params.cap).abs() <= 1e-12 {
            Some(StopReason::Cap)
        } else {
            None
        };
        let rec = StoppingRecord { time: t, index: i, reason: StopReason::Horizon, sobolev_norm: hs, holder_norm: holder, l2_norm: l2 };
        if let Some(reason) = reason {
            return Ok(StoppingRecord { reason, ..rec });
        }
        last = Some(rec);
    }
    last.ok_or_else(|| WnsError::OutOfRange("empty trajectory".into()))
}

/// `Ẑ(t) = Z(t + T) − e^{tΔ}Z(T)` for `t ∈ [0, t_hi − T]`.
pub fn restart_shift(
    big_z: &TimeTrajectory<SpectralVectorField>,
    t_restart: f64,
) -> Result<TimeTrajectory<SpectralVectorField>> {
    let m = big_z.index_of(t_restart)?;
    if m + 1 >= big_z.len() {
        return Err(WnsError::OutOfRange(format!(
            "restart time {t_restart} leaves no samples (trajectory ends at {})",
            big_z.t_hi()
        )));
    }
    let zt = &big_z.samples()[m];
    let samples = (m..big_z.len())
        .map(|i| {
            let h = heat_semigroup(zt, (i - m) as f64 * big_z.dt())?;
            Ok(&big_z.samples()[i] - &h)
        })
        .collect::<Result<Vec<_>>>()?;
    TimeTrajectory::new(0.0, big_z.dt(), samples)
}

/// Largest residual of the discrete OU recursion along a path, relative to
/// the path size: `max_i ‖Z_{i+1} − e^{dtΔ}Z_i − ξ_i‖ / max_i ‖Z_i‖`, where
/// `ξ_i` are the increments drawn by `schedule` at global step
/// `step_offset + i`.
pub fn ou_recursion_defect(
    spec: &NoiseSpec,
    path: &TimeTrajectory<SpectralVectorField>,
    schedule: &SeedSchedule,
    step_offset: u64,
) -> Result<f64> {
    let modes = spec.modes();
    let basis = 2f64.sqrt() * (2.0 * PI).powf(-1.5);
    let dt = path.dt();
    let scale = path.samples().iter().map(|z| z.norm_l2()).fold(0.0, f64::max).max(1e-300);
    let mut worst = 0.0f64;
    for i in 0..path.len() - 1 {
        let mut pred = heat_semigroup(&path.samples()[i], dt)?;
        for m in &modes {
            let amp = m.g * ou_variance(m.k2(), dt).sqrt() * basis;
            let eta = mode_normals(schedule, m, step_offset + i as u64);
            let c: [f64; 3] = std::array::from_fn(|j| amp * (eta[0] * m.e[0][j] + eta[1] * m.e[1][j]));
            let s: [f64; 3] = std::array::from_fn(|j| amp * (eta[2] * m.e[0][j] + eta[3] * m.e[1][j]));
            add_real_mode(&mut pred, m.k, c, s);
        }
        worst = worst.max((&path.samples()[i + 1] - &pred).norm_l2() / scale);
    }
    Ok(worst)
}

/// Sobolev constant of the grid: the exact operator norm of
/// `H^{(3+σ)/2} → L^∞` on the represented (non-Nyquist) modes under the
/// normalized `H^s` norm, `C_S² = Σ_k 2^s(1+|k|²)^{−s}/(2π)³`.
pub fn sobolev_constant_raw(grid: &Grid3, sigma: f64) -> f64 {
    let s = 0.5 * (3.0 + sigma);
    let n = grid.n() as i64;
    let h = n / 2;
    let mut sum = 0.0;
    for k1 in -h + 1..h {
        for k2 in -h + 1..h {
            for k3 in -h + 1..h {
                let kk = (k1 * k1 + k2 * k2 + k3 * k3) as f64;
                sum += 2f64.powf(s) * (1.0 + kk).powf(-s);
            }
        }
    }
    (sum / (2.0 * PI).powi(3)).sqrt()
}

/// `C_S = max(1, raw operator norm)` (the constant is taken `≥ 1`).
pub fn sobolev_constant(grid: &Grid3, sigma: f64) -> f64 {
    sobolev_constant_raw(grid, sigma).max(1.0)
}
