//! Diagnostics: the energy processes `E^p`, their trajectory-wise
//! monotonicity check, and deterministic CSV/JSON emission of run ledgers.
//!
//! `E^p(t) = ‖x(t)‖^{2p} + 2p∫₀ᵗ‖x‖^{2p−2}‖x‖²_{H^γ} − (C_{p,1} + C_{p,2}C_G)∫₀ᵗ‖x‖^{2p−2}`
//! with trapezoid integrals on the trajectory grid. For `p = 1` the weight
//! `‖x‖^{2p−2}` is taken as 1 (also at `x = 0`). The monotonicity check is
//! the deterministic surrogate of the supermartingale property: it asks that
//! the sampled process never increases, which is what holds trajectory-wise
//! for solutions of the iteration; no expectations are estimated.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, WnsError};
use crate::field::{norm, NormKind, SpectralVectorField, TimeTrajectory};
use crate::scheme::{BoundRow, Level0Row, LevelSummary, ParamLedger, SampleRow, SchemeRun};

/// Absolute tolerance per step of the monotonicity check.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Penalty constants of `E^p`: the term is `(C_{p,1} + C_{p,2}C_G)∫‖x‖^{2p−2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessConstants {
    /// Deterministic constant `C_{p,1}` (default 0).
    pub c_p1: f64,
    /// Constant `C_{p,2}` multiplying the noise trace `C_G`.
    pub c_p2: f64,
    /// Noise trace `C_G = tr(GG*)`.
    pub c_g: f64,
}

impl ProcessConstants {
    /// `C_{p,1} = 0`, `C_{p,2} = C_p`.
    pub fn new(c_p: f64, c_g: f64) -> Self {
        Self { c_p1: 0.0, c_p2: c_p, c_g }
    }

    /// `C_{p,1} + C_{p,2}C_G`.
    pub fn penalty(&self) -> f64 {
        self.c_p1 + self.c_p2 * self.c_g
    }
}

/// A sampled energy process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyProcess {
    pub p: u32,
    pub constants: ProcessConstants,
    /// Sobolev exponent `γ` of the dissipation term.
    pub gamma: f64,
    pub times: Vec<f64>,
    /// `‖x(t)‖²_{L²}`.
    pub l2_sq: Vec<f64>,
    /// `‖x(t)‖²_{H^γ}`.
    pub hg_sq: Vec<f64>,
    /// `E^p(t)`.
    pub values: Vec<f64>,
}

/// `‖x‖^{2p−2}` from `‖x‖²`, with the `p = 1` weight fixed to 1.
fn weight(l2_sq: f64, p: u32) -> f64 {
    if p == 1 {
        1.0
    } else {
        l2_sq.powi(p as i32 - 1)
    }
}

/// `E^p` from sampled norms on the uniform grid `t_i = t0 + i·dt`.
pub fn energy_process_from_norms(
    t0: f64,
    dt: f64,
    l2_sq: &[f64],
    hg_sq: &[f64],
    p: u32,
    constants: ProcessConstants,
    gamma: f64,
) -> Result<EnergyProcess> {
    if p == 0 {
        return Err(WnsError::InvalidParams("energy process needs p ≥ 1".into()));
    }
    if l2_sq.len() != hg_sq.len() || l2_sq.is_empty() {
        return Err(WnsError::InvalidParams("norm series must be non-empty and of equal length".into()));
    }
    let pf = f64::from(p);
    let penalty = constants.penalty();
    let mut values = Vec::with_capacity(l2_sq.len());
    let (mut diss, mut pen) = (0.0, 0.0);
    for i in 0..l2_sq.len() {
        if i > 0 {
            let (w0, w1) = (weight(l2_sq[i - 1], p), weight(l2_sq[i], p));
            diss += 0.5 * dt * (w0 * hg_sq[i - 1] + w1 * hg_sq[i]);
            pen += 0.5 * dt * (w0 + w1);
        }
        values.push(l2_sq[i].powi(p as i32) + 2.0 * pf * diss - penalty * pen);
    }
    Ok(EnergyProcess {
        p,
        constants,
        gamma,
        times: (0..l2_sq.len()).map(|i| t0 + i as f64 * dt).collect(),
        l2_sq: l2_sq.to_vec(),
        hg_sq: hg_sq.to_vec(),
        values,
    })
}

/// `‖x‖²_{L²}` and `‖x‖²_{H^γ}` along a trajectory.
pub fn trajectory_norms(traj: &TimeTrajectory<SpectralVectorField>, gamma: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut l2 = Vec::with_capacity(traj.len());
    let mut hg = Vec::with_capacity(traj.len());
    for f in traj.samples() {
        l2.push(f.norm_l2_sq());
        hg.push(norm(f, &NormKind::Hs(gamma))?.powi(2));
    }
    Ok((l2, hg))
}

/// `E^p` along a trajectory.
pub fn energy_process(
    traj: &TimeTrajectory<SpectralVectorField>,
    p: u32,
    constants: ProcessConstants,
    gamma: f64,
) -> Result<EnergyProcess> {
    let (l2, hg) = trajectory_norms(traj, gamma)?;
    energy_process_from_norms(traj.t_lo(), traj.dt(), &l2, &hg, p, constants, gamma)
}

/// One row of the monotonicity table (`t, Ep, dEp, pass`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessRow {
    pub t: f64,
    #[serde(rename = "Ep")]
    pub ep: f64,
    /// `E^p(t_i) − E^p(t_{i−1})` (0 at the first sample).
    #[serde(rename = "dEp")]
    pub dep: f64,
    pub pass: bool,
}

/// Outcome of [`supermartingale_check`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneVerdict {
    pub p: u32,
    pub pass: bool,
    pub stop_t: f64,
    pub tolerance: f64,
    /// Largest increase over one step (negative if strictly decreasing).
    pub max_increase: f64,
    /// First time at which the process increased beyond the tolerance.
    pub first_violation: Option<f64>,
    pub rows: Vec<ProcessRow>,
}

/// Is `E^p(t ∧ stop_t)` non-increasing across samples (tolerance
/// [`MONOTONE_TOL`] per step)? Samples after `stop_t` are frozen at the
/// stopped value and therefore cannot fail.
pub fn supermartingale_check(proc: &EnergyProcess, stop_t: f64) -> MonotoneVerdict {
    let mut rows = Vec::new();
    let mut max_increase = f64::NEG_INFINITY;
    let mut first_violation = None;
    let mut prev: Option<f64> = None;
    for (&t, &e) in proc.times.iter().zip(&proc.values) {
        if t > stop_t + 1e-12 {
            break;
        }
        let dep = prev.map_or(0.0, |p| e - p);
        let ok = dep <= MONOTONE_TOL;
        if prev.is_some() {
            max_increase = max_increase.max(dep);
        }
        if !ok && first_violation.is_none() {
            first_violation = Some(t);
        }
        rows.push(ProcessRow { t, ep: e, dep, pass: ok });
        prev = Some(e);
    }
    MonotoneVerdict {
        p: proc.p,
        pass: first_violation.is_none(),
        stop_t,
        tolerance: MONOTONE_TOL,
        max_increase: if max_increase.is_finite() { max_increase } else { 0.0 },
        first_violation,
        rows,
    }
}

/// Trajectory constants entering the choice of `C_p`: `c₀ ≤ ‖x‖²`,
/// `d‖x‖²/dt ≤ c₁` (largest discrete slope, at least 0), `‖x‖²_{H^γ} ≤ c₂`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Measure [`TrajectoryConstants`] from sampled norms.
pub fn measure_constants(l2_sq: &[f64], hg_sq: &[f64], dt: f64) -> TrajectoryConstants {
    TrajectoryConstants {
        c0: l2_sq.iter().copied().fold(f64::INFINITY, f64::min),
        c1: l2_sq.windows(2).map(|w| (w[1] - w[0]) / dt).fold(0.0, f64::max),
        c2: hg_sq.iter().copied().fold(0.0, f64::max),
    }
}

/// Smallest `C_p` with `C_p C_G c₀^{p−1} ≥ 2p c₂^p + 2p(c₀+c₁)^{2p−1}c₁`.
pub fn min_c_p(p: u32, k: &TrajectoryConstants, c_g: f64) -> Result<f64> {
    if !(c_g > 0.0) || !(k.c0 > 0.0) {
        return Err(WnsError::InvalidParams(format!("C_p rule needs C_G > 0 and c₀ > 0 (C_G = {c_g}, c₀ = {})", k.c0)));
    }
    let pf = f64::from(p);
    let rhs = 2.0 * pf * k.c2.powi(p as i32) + 2.0 * pf * (k.c0 + k.c1).powi(2 * p as i32 - 1) * k.c1;
    Ok(rhs / (c_g * k.c0.powi(p as i32 - 1)))
}

/// Largest relative change of `E^p` at the common samples when the
/// sampling step is doubled (every other sample dropped).
pub fn refinement_change(
    t0: f64,
    dt: f64,
    l2_sq: &[f64],
    hg_sq: &[f64],
    p: u32,
    constants: ProcessConstants,
    gamma: f64,
) -> Result<f64> {
    let fine = energy_process_from_norms(t0, dt, l2_sq, hg_sq, p, constants, gamma)?;
    let take = |v: &[f64]| v.iter().step_by(2).copied().collect::<Vec<_>>();
    let coarse = energy_process_from_norms(t0, 2.0 * dt, &take(l2_sq), &take(hg_sq), p, constants, gamma)?;
    let scale = fine.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    Ok(coarse
        .values
        .iter()
        .enumerate()
        .map(|(i, c)| (c - fine.values[2 * i]).abs() / scale)
        .fold(0.0, f64::max))
}

/// Everything a scheme run reports, in a fixed order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub variant: String,
    pub params: ParamLedger,
    pub level0: Vec<Level0Row>,
    pub summaries: Vec<LevelSummary>,
    pub rows: Vec<SampleRow>,
    pub bounds: Vec<BoundRow>,
    pub residual_max: f64,
    pub div_max: f64,
}

impl IterationReport {
    pub fn from_run(variant: &str, run: &SchemeRun) -> Self {
        Self {
            variant: variant.into(),
            params: run.ledger.clone(),
            level0: run.level0.clone(),
            summaries: run.levels.iter().map(|l| l.summary.clone()).collect(),
            rows: run.levels.iter().flat_map(|l| l.rows.iter().cloned()).collect(),
            bounds: run.bounds.clone(),
            residual_max: run.residual_max(),
            div_max: run.levels.iter().map(|l| l.summary.div_max).fold(0.0, f64::max),
        }
    }
}

/// A CSV table: fixed header, rows of already formatted cells.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

/// Parameter-ledger table.
pub fn params_table(l: &ParamLedger) -> Table {
    Table {
        header: vec!["id", "condition", "lhs", "rhs", "log_scale", "pass"],
        rows: l
            .lines
            .iter()
            .map(|x| {
                vec![x.id.clone(), x.condition.clone(), num(x.lhs), num(x.rhs), x.log_scale.to_string(), x.pass.to_string()]
            })
            .collect(),
    }
}

/// Inductive-bound table (one row per family, zone and level).
pub fn bounds_table(rows: &[BoundRow]) -> Table {
    Table {
        header: vec!["level", "family", "zone", "samples", "lhs_max", "bound", "worst", "pass"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.level.to_string(),
                    r.family.clone(),
                    r.zone.clone(),
                    r.samples.to_string(),
                    num(r.lhs_max),
                    num(r.bound),
                    num(r.worst),
                    r.pass.to_string(),
                ]
            })
            .collect(),
    }
}

/// Level-0 table.
pub fn level0_table(rows: &[Level0Row]) -> Table {
    Table {
        header: vec!["t", "energy", "r_l1", "gap"],
        rows: rows.iter().map(|r| vec![num(r.t), num(r.energy), num(r.r_l1), opt(r.gap)]).collect(),
    }
}

/// Per-sample table of every level.
pub fn samples_table(rows: &[SampleRow]) -> Table {
    Table {
        header: vec![
            "level", "t", "chi", "e", "energy", "energy_prev", "gap", "delta_e", "v_norm", "v_prev_norm",
            "v_increment", "v_increment_w", "v_c1", "r_prev_l1", "r_prev_sup", "r_l1", "r_lin", "r_cor", "r_osc",
            "r_osc_x", "r_osc_t", "r_com", "r_com1", "r_cut", "r_rem", "osc_split_defect", "residual", "div_wpc",
            "div_v", "mean_v", "gamma", "gamma_clamped", "rho_mean", "max_ratio", "wp_norm", "wc_norm", "wt_norm",
            "jet_factor_max",
        ],
        rows: rows
            .iter()
            .map(|r| {
                let p = &r.parts_l1;
                vec![
                    r.level.to_string(),
                    num(r.t),
                    num(r.chi),
                    opt(r.e),
                    num(r.energy),
                    num(r.energy_prev),
                    opt(r.gap),
                    opt(r.delta_e),
                    num(r.v_norm),
                    num(r.v_prev_norm),
                    num(r.v_increment),
                    num(r.v_increment_w),
                    opt(r.v_c1),
                    num(r.r_prev_l1),
                    num(r.r_prev_sup),
                    num(r.r_l1),
                    num(p.r_lin),
                    num(p.r_cor),
                    num(p.r_osc),
                    num(p.r_osc_x),
                    num(p.r_osc_t),
                    num(p.r_com),
                    num(p.r_com1),
                    num(p.r_cut),
                    num(p.r_rem),
                    num(r.osc_split_defect),
                    opt(r.residual),
                    num(r.div_wpc),
                    num(r.div_v),
                    num(r.mean_v),
                    num(r.gamma),
                    r.gamma_clamped.to_string(),
                    num(r.rho_mean),
                    num(r.max_ratio),
                    num(r.wp_norm),
                    num(r.wc_norm),
                    num(r.wt_norm),
                    num(r.jet_factor_max),
                ]
            })
            .collect(),
    }
}

/// Monotonicity table with the documented columns `t, Ep, dEp, pass`.
pub fn process_table(v: &MonotoneVerdict) -> Table {
    Table {
        header: vec!["t", "Ep", "dEp", "pass"],
        rows: v.rows.iter().map(|r| vec![num(r.t), num(r.ep), num(r.dep), r.pass.to_string()]).collect(),
    }
}

/// Write a table; the header is written even when there are no rows.
pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(&table.header)?;
    for r in &table.rows {
        if r.len() != table.header.len() {
            return Err(WnsError::Format(format!("row of {} cells under a header of {}", r.len(), table.header.len())));
        }
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Write pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Emit an [`IterationReport`] into `dir`: `params.csv`, `level0.csv`,
/// `samples.csv`, `bounds.csv` and `summary.json`. Returns the written paths
/// in emission order. The output depends only on the report, so emitting
/// twice gives identical bytes.
pub fn report_emit(report: &IterationReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let tables = [
        ("params.csv", params_table(&report.params)),
        ("level0.csv", level0_table(&report.level0)),
        ("samples.csv", samples_table(&report.rows)),
        ("bounds.csv", bounds_table(&report.bounds)),
    ];
    let mut out = Vec::new();
    for (name, t) in &tables {
        let p = dir.join(name);
        write_table(&p, t)?;
        out.push(p);
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        variant: &'a str,
        levels: usize,
        residual_max: f64,
        div_max: f64,
        params_all_pass: bool,
        bounds_failed: usize,
        summaries: &'a [LevelSummary],
    }
    let p = dir.join("summary.json");
    write_json(
        &p,
        &Summary {
            variant: &report.variant,
            levels: report.summaries.len(),
            residual_max: report.residual_max,
            div_max: report.div_max,
            params_all_pass: report.params.all_pass(),
            bounds_failed: report.bounds.iter().filter(|b| !b.pass).count(),
            summaries: &report.summaries,
        },
    )?;
    out.push(p);
    Ok(out)
}
