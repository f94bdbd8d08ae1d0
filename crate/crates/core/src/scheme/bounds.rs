//! Inductive inequalities of both constructions, evaluated on the rows of
//! a level step.

use serde::{Deserialize, Serialize};

use super::params::{EnergyProfile, ParamSet, Regime};
use super::step::SampleRow;
use super::VariantB;
use crate::error::{Result, WnsError};
use crate::field::{SpectralVectorField, TimeTrajectory};
use crate::noise::Variant;

/// One inductive inequality on one time zone of one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    /// New level `q+1`.
    pub level: u32,
    /// Inequality family, e.g. `iteration` or `iteration-R`.
    pub family: String,
    /// Time zone the family applies to.
    pub zone: String,
    /// Number of samples in the zone.
    pub samples: usize,
    /// Largest left side over the zone.
    pub lhs_max: f64,
    /// Bound at the worst sample.
    pub bound: f64,
    /// Worst `lhs / bound` (or `lhs − bound` if the bound is zero).
    pub worst: f64,
    pub pass: bool,
}

#[derive(Clone, Copy)]
struct Acc {
    samples: usize,
    lhs_max: f64,
    bound: f64,
    worst: f64,
    pass: bool,
    zero_bound: bool,
}

impl Acc {
    fn new(zero_bound: bool) -> Self {
        Self { samples: 0, lhs_max: 0.0, bound: 0.0, worst: if zero_bound { 0.0 } else { f64::NEG_INFINITY }, pass: true, zero_bound }
    }

    /// Record `lhs ≤ bound`.
    fn push(&mut self, lhs: f64, bound: f64) {
        self.samples += 1;
        self.lhs_max = self.lhs_max.max(lhs);
        let score = if self.zero_bound { lhs - bound } else { lhs / bound };
        if score > self.worst || self.samples == 1 {
            self.worst = score;
            self.bound = bound;
        }
        if !(lhs <= bound) {
            self.pass = false;
        }
    }

    fn row(self, level: u32, family: &str, zone: &str) -> BoundRow {
        BoundRow {
            level,
            family: family.into(),
            zone: zone.into(),
            samples: self.samples,
            lhs_max: self.lhs_max,
            bound: self.bound,
            worst: if self.samples == 0 { 0.0 } else { self.worst },
            pass: self.pass,
        }
    }
}

/// Variant-A inequalities at level `q+1` on `[t_{q+1}, 𝔱]`.
pub fn bounds_variant_a(p: &ParamSet, profile: &EnergyProfile, rows: &[SampleRow]) -> Vec<BoundRow> {
    let Some(first) = rows.first() else { return Vec::new() };
    let level = first.level;
    let q = level - 1;
    let t_from = p.t_q(level);
    let e_bar = profile.e_bar;
    let sum_delta: f64 = (1..=level).map(|r| p.delta(r).sqrt()).sum();
    let mut v_l2 = Acc::new(false);
    let mut v_c1 = Acc::new(false);
    let mut r_l1 = Acc::new(false);
    let mut win_lo = Acc::new(false);
    let mut win_hi = Acc::new(false);
    let mut iter = Acc::new(false);
    let mut de = Acc::new(false);
    for r in rows.iter().filter(|r| r.t >= t_from - 1e-12) {
        let e = profile.e(r.t);
        v_l2.push(r.v_norm, p.m0 * (1.0 + sum_delta) * e_bar.sqrt());
        if let Some(c1) = r.v_c1 {
            v_c1.push(c1, p.lambda(level).powi(4) * e_bar.sqrt());
        }
        r_l1.push(r.r_l1, p.delta(level + 2) * e / 48.0);
        let gap = e - r.energy;
        win_lo.push(0.75 * p.delta(level + 1) * e, gap);
        win_hi.push(gap, 1.25 * p.delta(level + 1) * e);
        iter.push(r.v_increment, p.m0 * e_bar.sqrt() * p.delta(q + 1).sqrt());
        de.push((e * (1.0 - p.delta(q + 2)) - r.energy).abs(), 0.25 * p.delta(q + 2) * e);
    }
    let zone = format!("[t_{level}, stop] = [{t_from:.4}, stop]");
    vec![
        v_l2.row(level, "inductionv-L2", &zone),
        v_c1.row(level, "inductionv-C1", &zone),
        r_l1.row(level, "inductionv-R", &zone),
        win_lo.row(level, "inductionve-lower", &zone),
        win_hi.row(level, "inductionve-upper", &zone),
        iter.row(level, "iteration", &zone),
        de.row(level, "energy-deltaE", &zone),
    ]
}

/// Variant-B inequalities at level `q+1` on `[0, T_L]`.
pub fn bounds_variant_b(p: &ParamSet, b: &VariantB, rows: &[SampleRow], t_l: f64) -> Vec<BoundRow> {
    let Some(first) = rows.first() else { return Vec::new() };
    let level = first.level;
    let q = level - 1;
    let sq = ParamSet::sigma(q as i32);
    let (ml, a) = (b.m_l, b.a_const);
    let gamma = ParamSet::gamma_b(q + 1, b.k);
    let d1 = p.delta(q + 1);
    let d2 = p.delta(q + 2);
    let mut ps = [Acc::new(false), Acc::new(false), Acc::new(true)];
    let mut rr = [Acc::new(false), Acc::new(false), Acc::new(false)];
    let mut zero = Acc::new(true);
    let mut w = Acc::new(false);
    let mut pg = Acc::new(false);
    let mut c1 = Acc::new(false);
    let mut eq_r = Acc::new(false);
    let mut bd_r = Acc::new(false);
    for r in rows.iter().filter(|r| r.t >= -1e-12 && r.t <= t_l + 1e-12) {
        let t = r.t;
        // (iteration ps)
        if t > (4.0 * sq).min(t_l) {
            ps[0].push(r.v_increment, p.m0 * ((ml * d1).sqrt() + gamma.sqrt()));
        } else if t > (0.5 * sq).min(t_l) {
            ps[1].push(r.v_increment, p.m0 * ((ml + q as f64 * a).sqrt() + gamma.sqrt()));
        } else {
            ps[2].push(r.v_increment, 0.0);
        }
        // (iteration R)
        if t > sq.min(t_l) {
            rr[0].push(r.r_l1, ml * d2);
        } else if t > (0.5 * sq).min(t_l) {
            rr[1].push(r.r_l1, ml * d2 + r.r_prev_sup);
        } else {
            rr[2].push(r.r_l1, r.r_prev_sup + a);
        }
        // (inductionv ps) zero zone of the new level
        if t <= (0.5 * sq).min(t_l) {
            zero.push(r.v_norm, 0.0);
        }
        w.push(r.v_increment_w, p.m0 * (ml * d1).sqrt());
        if t > (4.0 * sq).min(t_l) {
            pg.push((r.v_norm.powi(2) - r.v_prev_norm.powi(2) - 3.0 * gamma).abs(), 7.0 * ml * d1);
        }
        if let Some(v) = r.v_c1 {
            c1.push(v, p.lambda(level).powi(4) * ml.sqrt());
        }
        if t > sq.min(t_l) {
            eq_r.push(r.r_l1, d2 * ml);
        }
        bd_r.push(r.r_l1, ml + level as f64 * a);
    }
    let z = |lo: &str, hi: &str| format!("({lo}, {hi}]");
    vec![
        ps[0].row(level, "iteration-ps", &z("4σ_q∧T_L", "T_L")),
        ps[1].row(level, "iteration-ps", &z("σ_q/2∧T_L", "4σ_q∧T_L")),
        ps[2].row(level, "iteration-ps", "[0, σ_q/2∧T_L]"),
        rr[0].row(level, "iteration-R", &z("σ_q∧T_L", "T_L")),
        rr[1].row(level, "iteration-R", &z("σ_q/2∧T_L", "σ_q∧T_L")),
        rr[2].row(level, "iteration-R", "[0, σ_q/2∧T_L]"),
        zero.row(level, "inductionv-ps-zero", "[0, σ_q/2∧T_L]"),
        w.row(level, "induction-w", "[0, T_L]"),
        pg.row(level, "p-gamma", &z("4σ_q∧T_L", "T_L")),
        c1.row(level, "inductionv-C1", "[0, T_L]"),
        eq_r.row(level, "eq-R", &z("σ_q∧T_L", "T_L")),
        bd_r.row(level, "bd-R", "[0, T_L]"),
    ]
}

/// Bounds of one level for either variant.
pub fn level_bounds(
    variant: Variant,
    p: &ParamSet,
    profile: Option<&EnergyProfile>,
    b: Option<&VariantB>,
    rows: &[SampleRow],
    t_hi: f64,
) -> Vec<BoundRow> {
    match (variant, profile, b) {
        (Variant::A, Some(e), _) => bounds_variant_a(p, e, rows),
        (Variant::B, _, Some(b)) => bounds_variant_b(p, b, rows, t_hi),
        _ => Vec::new(),
    }
}

/// Paper regime: every inequality must hold. Desk regime: recorded only.
pub fn enforce(regime: Regime, rows: &[BoundRow]) -> Result<()> {
    if regime == Regime::Paper {
        if let Some(r) = rows.iter().find(|r| !r.pass) {
            return Err(WnsError::BoundViolated(format!(
                "level {} {} on {}: {} vs {}",
                r.level, r.family, r.zone, r.lhs_max, r.bound
            )));
        }
    }
    Ok(())
}

/// `δE(t) = |e(t)(1 − δ_{q+2}) − ‖u(t)‖²|` along a trajectory of
/// `u = v_{q+1} + z_{q+1}`.
pub fn energy_gap(
    u: &TimeTrajectory<SpectralVectorField>,
    profile: &EnergyProfile,
    delta_q2: f64,
) -> Result<TimeTrajectory<f64>> {
    let vals = u
        .samples()
        .iter()
        .enumerate()
        .map(|(i, f)| (profile.e(u.time(i)) * (1.0 - delta_q2) - f.norm_l2_sq()).abs())
        .collect();
    TimeTrajectory::new(u.t_lo(), u.dt(), vals)
}
