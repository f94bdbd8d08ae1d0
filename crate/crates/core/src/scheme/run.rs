//! Multi-level runs, the two-`K` comparison and restart gluing.

use serde::{Deserialize, Serialize};

use super::bounds::{enforce, level_bounds, BoundRow};
use super::params::{validate_params, EnergyProfile, ParamLedger, ParamSet, Regime};
use super::source::{IterationState, Level0, LevelSource, NoisePath};
use super::step::{step_level, LevelOutput, SampleRow, StepConfig};
use super::VariantB;
use crate::error::{Result, WnsError};
use crate::field::{norm, Grid3, NormKind, SpectralVectorField, SymmetricTensorField, TimeMollifier, TimeTrajectory};
use crate::geometry::DirectionSet;
use crate::jets::{JetParams, Profiles};
use crate::noise::{restart_shift, simulate_noise, stopping_time, NoiseSpec, SeedSchedule, StopReason, StoppingParams, Variant, DIV_TOL};

/// A configured construction (either variant) on a fixed grid and time step.
#[derive(Clone, Debug)]
pub struct Scheme {
    pub variant: Variant,
    pub params: ParamSet,
    pub profile: Option<EnergyProfile>,
    pub b: Option<VariantB>,
    pub set: DirectionSet,
    pub jets: JetParams,
    pub resolution_factor: f64,
    pub grid: Grid3,
    pub dt: f64,
}

/// What to keep and how far to go.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Number of level steps `Q`.
    pub levels: u32,
    /// Keep `v_Q`, `R̊_Q` of the last level.
    pub store_final: bool,
    /// Keep the stress parts of every level.
    pub store_stress: bool,
    /// Limit the output samples of each level (`None` = full window).
    pub max_outputs: Option<usize>,
}

impl RunOptions {
    pub fn levels(levels: u32) -> Self {
        Self { levels, store_final: false, store_stress: false, max_outputs: None }
    }
}

/// Level-0 diagnostics: `‖z₀‖²`, `‖R̊₀‖_{L¹}` and the energy gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level0Row {
    pub t: f64,
    pub energy: f64,
    pub r_l1: f64,
    pub gap: Option<f64>,
}

/// Result of [`Scheme::run`].
#[derive(Clone, Debug)]
pub struct SchemeRun {
    pub ledger: ParamLedger,
    pub t_lo: f64,
    pub t_hi: f64,
    pub level0: Vec<Level0Row>,
    /// One output per level step (fields dropped except for the last level
    /// when `store_final` is set).
    pub levels: Vec<LevelOutput>,
    pub bounds: Vec<BoundRow>,
}

impl SchemeRun {
    /// Rows of the last level.
    pub fn last_rows(&self) -> &[SampleRow] {
        self.levels.last().map_or(&[], |l| &l.rows)
    }

    pub fn final_v(&self) -> Option<&TimeTrajectory<SpectralVectorField>> {
        self.levels.last().and_then(|l| l.v.as_ref())
    }

    pub fn final_r(&self) -> Option<&TimeTrajectory<SymmetricTensorField>> {
        self.levels.last().and_then(|l| l.r.as_ref())
    }

    pub fn residual_max(&self) -> f64 {
        self.levels.iter().map(|l| l.summary.residual_max).fold(0.0, f64::max)
    }
}

/// Level-0 data `v₀ ≡ 0`, `R̊₀ = z₀ ⊗̊ z₀` on `[t_lo, t_hi]`, after checking
/// the variant's preconditions (energy profile for A; `‖u₀‖ ≤ N` for B).
pub fn init_state<'a>(
    variant: Variant,
    noise: &'a NoisePath,
    grid: &Grid3,
    t_lo: f64,
    t_hi: f64,
    params: &ParamSet,
    profile: Option<&EnergyProfile>,
    b: Option<&VariantB>,
) -> Result<Level0<'a>> {
    match variant {
        Variant::A => {
            let e = profile.ok_or_else(|| WnsError::InvalidParams("variant A needs an energy profile".into()))?;
            if e.e_lower < 4.0 {
                return Err(WnsError::EnergyConstraintViolated(format!("e_lower = {} < 4", e.e_lower)));
            }
        }
        Variant::B => {
            let b = b.ok_or_else(|| WnsError::InvalidParams("variant B needs L, N, K".into()))?;
            let u0 = noise.u0.as_ref().ok_or_else(|| WnsError::InvalidParams("variant B needs u₀".into()))?;
            let defect = u0.divergence_defect();
            if defect > DIV_TOL {
                return Err(WnsError::NotDivergenceFree(defect));
            }
            let n0 = u0.norm_l2();
            if n0 > b.n {
                return Err(WnsError::DatumTooLarge { norm: n0, bound: b.n });
            }
        }
    }
    Level0::new(noise, grid, t_lo, t_hi, params.cutoff(0))
}

/// `M₀` from a calibration run: the smallest `M₀ ≥ 1` with
/// `‖w^(p)‖_{L²} ≤ (M₀/2)·scale` on every sample, where the scale is
/// `ē^{1/2}δ_{q+1}^{1/2}` (A) or `M_L^{1/2}δ_{q+1}^{1/2} + γ_{q+1}^{1/2}` (B).
pub fn calibrate_m0(scheme: &Scheme, rows: &[SampleRow]) -> f64 {
    let p = &scheme.params;
    let mut m0 = 1.0f64;
    for r in rows {
        let q = r.level - 1;
        let scale = match (&scheme.profile, &scheme.b) {
            (Some(e), _) if scheme.variant == Variant::A => e.e_bar.sqrt() * p.delta(q + 1).sqrt(),
            (_, Some(b)) => (b.m_l * p.delta(q + 1)).sqrt() + ParamSet::gamma_b(q + 1, b.k).sqrt(),
            _ => continue,
        };
        if r.chi > 0.0 && scale > 0.0 {
            m0 = m0.max(2.0 * r.wp_norm / (r.chi * scale));
        }
    }
    m0
}

impl Scheme {
    fn step_config<'a>(&'a self, noise: &'a NoisePath, store: bool, opts: &RunOptions) -> StepConfig<'a> {
        StepConfig {
            variant: self.variant,
            params: &self.params,
            profile: self.profile.as_ref(),
            b: self.b.as_ref(),
            set: &self.set,
            jets: &self.jets,
            profiles: Profiles::standard(),
            resolution_factor: self.resolution_factor,
            noise,
            store,
            store_stress: opts.store_stress,
            max_outputs: opts.max_outputs,
        }
    }

    /// Steps of history consumed by the first `levels` mollifiers.
    pub fn history_steps(&self, levels: u32) -> Result<usize> {
        (0..levels).map(|q| Ok(TimeMollifier::new(self.params.ell(q), self.dt)?.steps())).sum()
    }

    /// Variant-B window start `−(Σ m_q + 2)·dt`: the last level then starts
    /// one step before `t = 0`, so the system is checked from `t = 0` on.
    pub fn b_window_start(&self, levels: u32) -> Result<f64> {
        Ok(-((self.history_steps(levels)? + 2) as f64) * self.dt)
    }

    /// Run `opts.levels` level steps on `[t_lo, t_hi]`.
    pub fn run(&self, noise: &NoisePath, t_lo: f64, t_hi: f64, opts: &RunOptions) -> Result<SchemeRun> {
        if (noise.dt() - self.dt).abs() > 1e-15 {
            return Err(WnsError::InvalidParams(format!("noise dt {} ≠ scheme dt {}", noise.dt(), self.dt)));
        }
        let ledger = validate_params(&self.params, self.profile.as_ref());
        if self.params.regime == Regime::Paper {
            let relevant: Vec<_> = ledger
                .lines
                .iter()
                .filter(|l| !l.pass)
                .filter(|l| (self.variant == Variant::B) == l.id.starts_with("datum") || self.variant == Variant::B)
                .collect();
            if let Some(l) = relevant.first() {
                return Err(WnsError::InvalidParams(format!("{}: {} fails", l.id, l.condition)));
            }
        }
        let level0 =
            init_state(self.variant, noise, &self.grid, t_lo, t_hi, &self.params, self.profile.as_ref(), self.b.as_ref())?;
        let mut rows0 = Vec::with_capacity(level0.len());
        for j in 0..level0.len() {
            let s = level0.sample(j)?;
            let t = level0.time(j);
            let energy = s.z.norm_l2_sq();
            rows0.push(Level0Row {
                t,
                energy,
                r_l1: norm(&s.r, &NormKind::Lp(1.0))?,
                gap: self.profile.as_ref().filter(|_| self.variant == Variant::A).map(|e| e.e(t) - energy),
            });
        }
        let mut levels: Vec<LevelOutput> = Vec::new();
        let mut bounds = Vec::new();
        let mut state: Option<IterationState<'_>> = None;
        for q in 0..opts.levels {
            let last = q + 1 == opts.levels;
            let store = !last || opts.store_final;
            let cfg = self.step_config(noise, store, opts);
            let mut out = match &state {
                None => step_level(&cfg, &level0)?,
                Some(s) => step_level(&cfg, s)?,
            };
            let b = level_bounds(self.variant, &self.params, self.profile.as_ref(), self.b.as_ref(), &out.rows, t_hi);
            enforce(self.params.regime, &b)?;
            bounds.extend(b);
            if !last {
                let v = out.v.take().ok_or_else(|| WnsError::InvalidParams("level fields not stored".into()))?;
                let r = out.r.take().ok_or_else(|| WnsError::InvalidParams("level fields not stored".into()))?;
                state = Some(IterationState { q: q + 1, v, r, noise, cutoff: self.params.cutoff(q + 1) });
            }
            levels.push(out);
        }
        Ok(SchemeRun { ledger, t_lo, t_hi, level0: rows0, levels, bounds })
    }

    /// `u = v_Q + z_Q` of the last level on the grid times in `[0, t_hi]`.
    pub fn solution(&self, run: &SchemeRun, noise: &NoisePath) -> Result<TimeTrajectory<SpectralVectorField>> {
        let v = run.final_v().ok_or_else(|| WnsError::InvalidParams("run without stored final level".into()))?;
        let q = run.levels.len() as u32;
        let start = v.index_of(0.0)?;
        let samples = (start..v.len())
            .map(|i| Ok(&v.samples()[i] + &noise.z_at(v.time(i), self.params.cutoff(q), &self.grid)?))
            .collect::<Result<Vec<_>>>()?;
        TimeTrajectory::new(0.0, v.dt(), samples)
    }

    /// Same scheme with a different `K` (variant B).
    pub fn with_k(&self, k: f64) -> Result<Self> {
        let b = self.b.as_ref().ok_or_else(|| WnsError::InvalidParams("K needs variant B".into()))?;
        Ok(Self { b: Some(VariantB::new(b.l, b.n, k, Some(b.m_l))?), ..self.clone() })
    }
}

/// Two variant-B runs differing only in `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KComparison {
    pub k1: f64,
    pub k2: f64,
    pub t_final: f64,
    /// `‖v_Q(T)‖²` for `K` and `K′`.
    pub energy_k1: f64,
    pub energy_k2: f64,
    /// `‖v_K‖² − ‖v_{K′}‖² − 3(K − K′)`.
    pub deviation: f64,
    /// `7 M_L Σ_q δ_{q+1} + 3 Σ_{q≠2} γ_{q+1}`.
    pub tolerance: f64,
    pub within_tolerance: bool,
    pub residual_max: f64,
}

/// Run the scheme twice with `K` and `K′` on the same noise.
pub fn compare_k(scheme: &Scheme, noise: &NoisePath, t_hi: f64, k1: f64, k2: f64, levels: u32) -> Result<KComparison> {
    let t_lo = scheme.b_window_start(levels)?;
    let opts = RunOptions::levels(levels);
    let r1 = scheme.with_k(k1)?.run(noise, t_lo, t_hi, &opts)?;
    let r2 = scheme.with_k(k2)?.run(noise, t_lo, t_hi, &opts)?;
    let last = |r: &SchemeRun| r.last_rows().last().map(|row| (row.t, row.v_norm.powi(2)));
    let ((t_final, e1), (_, e2)) = (
        last(&r1).ok_or_else(|| WnsError::WindowTooShort("no output".into()))?,
        last(&r2).ok_or_else(|| WnsError::WindowTooShort("no output".into()))?,
    );
    let b = scheme.b.as_ref().ok_or_else(|| WnsError::InvalidParams("K needs variant B".into()))?;
    let p = &scheme.params;
    let tolerance = 7.0 * b.m_l * (0..levels).map(|q| p.delta(q + 1)).sum::<f64>()
        + 3.0 * (0..levels).filter(|&q| q != 2).map(|q| ParamSet::gamma_b(q + 1, 1.0)).sum::<f64>();
    let deviation = e1 - e2 - 3.0 * (k1 - k2);
    Ok(KComparison {
        k1,
        k2,
        t_final,
        energy_k1: e1,
        energy_k2: e2,
        deviation,
        tolerance,
        within_tolerance: deviation.abs() <= tolerance,
        residual_max: r1.residual_max().max(r2.residual_max()),
    })
}

/// Concatenate solution segments `u_k` on `[0, T_k]` into one trajectory on
/// `[0, Σ T_k]`. Each seam must match to `tol` in `L²`.
pub fn extend_solution(
    segments: &[TimeTrajectory<SpectralVectorField>],
    tol: f64,
) -> Result<TimeTrajectory<SpectralVectorField>> {
    let first = segments.first().ok_or_else(|| WnsError::InvalidParams("no segments".into()))?;
    let dt = first.dt();
    let mut samples: Vec<SpectralVectorField> = first.samples().to_vec();
    for seg in &segments[1..] {
        if (seg.dt() - dt).abs() > 1e-15 {
            return Err(WnsError::InvalidParams("segments use different time steps".into()));
        }
        let jump = (samples.last().expect("non-empty") - &seg.samples()[0]).norm_l2();
        if !(jump <= tol) {
            return Err(WnsError::SeamMismatch(jump));
        }
        samples.extend(seg.samples()[1..].iter().cloned());
    }
    TimeTrajectory::new(first.t_lo(), dt, samples)
}

/// One segment of a restart chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    /// Global start time of the segment.
    pub t_start: f64,
    /// Stopping time `T_L` of the shifted noise.
    pub t_l: f64,
    pub stop_reason: StopReason,
    /// `N` used for the segment (`max(N, ‖u(t_start)‖)`).
    pub n: f64,
    pub datum_norm: f64,
    /// `L²` jump to the previous segment at the seam.
    pub seam_jump: f64,
    /// Largest residual of the last level over the segment.
    pub residual_max: f64,
    /// Largest residual at the samples adjacent to the segment's seams.
    pub seam_residual: f64,
}

/// Result of [`glue_segments`].
#[derive(Clone, Debug)]
pub struct GlueReport {
    pub segments: Vec<SegmentReport>,
    pub glued: TimeTrajectory<SpectralVectorField>,
    pub max_seam_jump: f64,
    pub max_seam_residual: f64,
    /// Every glued sample has a finite norm.
    pub finite: bool,
}

/// Build `segments` consecutive variant-B solutions: segment `k+1` starts
/// from the terminal value of segment `k` and is driven by the shifted noise
/// `Ẑ(t) = Z(t + T) − e^{tΔ}Z(T)`; the pieces are glued by
/// [`extend_solution`].
#[allow(clippy::too_many_arguments)]
pub fn glue_segments(
    scheme: &Scheme,
    spec: &NoiseSpec,
    noise_grid: &Grid3,
    schedule: &SeedSchedule,
    u0: &SpectralVectorField,
    segments: usize,
    c_s: f64,
    delta: f64,
    levels: u32,
) -> Result<GlueReport> {
    let b0 = scheme.b.clone().ok_or_else(|| WnsError::InvalidParams("gluing needs variant B".into()))?;
    let horizon_steps = (segments as f64 * b0.l / scheme.dt).round() as usize + 1;
    let big_z = simulate_noise(spec, noise_grid, scheme.dt, horizon_steps, schedule, 0)?;
    let stop = StoppingParams::variant_b(c_s, delta, b0.l)?;
    let mut datum = u0.clone();
    let mut t_start = 0.0;
    let mut pieces = Vec::new();
    let mut reports: Vec<SegmentReport> = Vec::new();
    let mut prev_end: Option<SpectralVectorField> = None;
    for _ in 0..segments {
        let shifted = if t_start == 0.0 { big_z.clone() } else { restart_shift(&big_z, t_start)? };
        let rec = stopping_time(&shifted, &stop)?;
        if rec.index == 0 {
            return Err(WnsError::OutOfRange("stopping time vanished".into()));
        }
        let noise = NoisePath::new(shifted.slice(0, rec.index)?, Some(datum.clone()))?;
        let datum_norm = datum.norm_l2();
        let n = b0.n.max(datum_norm.ceil());
        let seg_scheme = Scheme { b: Some(VariantB::new(b0.l, n, b0.k, None)?), ..scheme.clone() };
        let t_lo = seg_scheme.b_window_start(levels)?;
        let opts = RunOptions { levels, store_final: true, store_stress: false, max_outputs: None };
        let run = seg_scheme.run(&noise, t_lo, rec.time, &opts)?;
        let u = seg_scheme.solution(&run, &noise)?;
        let seam_jump = match &prev_end {
            Some(p) => (p - &u.samples()[0]).norm_l2(),
            None => 0.0,
        };
        let rows = run.last_rows();
        let dt = scheme.dt;
        let near = |t: f64, a: f64, b: f64| t >= a - 1e-9 && t <= b + 1e-9;
        let seam_residual = rows
            .iter()
            .filter(|r| near(r.t, 0.0, dt) || near(r.t, rec.time, rec.time))
            .filter_map(|r| r.residual)
            .fold(0.0, f64::max);
        reports.push(SegmentReport {
            t_start,
            t_l: rec.time,
            stop_reason: rec.reason,
            n,
            datum_norm,
            seam_jump,
            residual_max: run.residual_max(),
            seam_residual,
        });
        let end = u.samples().last().expect("non-empty").clone();
        prev_end = Some(end.clone());
        datum = end;
        t_start += rec.time;
        pieces.push(u);
    }
    let max_seam_jump = reports.iter().map(|r| r.seam_jump).fold(0.0, f64::max);
    let glued = extend_solution(&pieces, 1e-9)?;
    let finite = glued.samples().iter().all(|f| f.norm_l2().is_finite());
    Ok(GlueReport {
        max_seam_residual: reports.iter().map(|r| r.seam_residual).fold(0.0, f64::max),
        segments: reports,
        glued,
        max_seam_jump,
        finite,
    })
}
