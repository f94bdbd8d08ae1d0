//! The convex-integration drivers.
//!
//! * [`params`] — the parameter ladder `λ_q, δ_q, ℓ`, its inequality ledger
//!   and the prescribed energy profile;
//! * [`source`] — the noise path and the level-`q` data;
//! * [`step`] — the level step `q → q+1` (mollification, energy pumping,
//!   amplitudes, perturbations, stress assembly, residual contract);
//! * [`bounds`] — the inductive inequalities of both constructions;
//! * [`run`] — multi-level runs, K comparison and restart gluing.

pub mod bounds;
pub mod params;
pub mod run;
pub mod source;
pub mod step;

use serde::{Deserialize, Serialize};

pub use bounds::{energy_gap, enforce, level_bounds, BoundRow};
pub use params::{validate_params, EnergyKind, EnergyProfile, LedgerLine, ParamLedger, ParamSet, Regime};
pub use run::{
    calibrate_m0, compare_k, extend_solution, glue_segments, init_state, GlueReport, KComparison, Level0Row, RunOptions, Scheme,
    SchemeRun, SegmentReport,
};
pub use source::{IterationState, Level0, LevelSource, NoisePath, RULE};
pub use step::{rho_factor, step_level, LevelOutput, LevelSummary, SampleRow, StepConfig, StressParts};

use crate::error::{Result, WnsError};
use crate::noise::Variant;

/// Constants of the prescribed-datum construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantB {
    /// Stopping level `L ≥ 1`.
    pub l: f64,
    /// Datum bound `N ≥ 1` (`‖u₀‖ ≤ N`).
    pub n: f64,
    /// Pumping constant `γ₃ = K ≥ 1`.
    pub k: f64,
    /// `M_L ≥ (L + N)²`.
    pub m_l: f64,
    /// `A = 4 M_L`.
    pub a_const: f64,
}

impl VariantB {
    /// Constants with `M_L = (L + N)²` unless a larger value is given.
    pub fn new(l: f64, n: f64, k: f64, m_l: Option<f64>) -> Result<Self> {
        if !(l >= 1.0 && n >= 1.0 && k >= 1.0) {
            return Err(WnsError::InvalidParams(format!("need L, N, K ≥ 1 (got {l}, {n}, {k})")));
        }
        let floor = (l + n).powi(2);
        let m_l = m_l.unwrap_or(floor);
        if m_l < floor {
            return Err(WnsError::InvalidParams(format!("M_L = {m_l} < (L+N)² = {floor}")));
        }
        Ok(Self { l, n, k, m_l, a_const: 4.0 * m_l })
    }
}

fn smooth_f(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth step `h(x) = f(x)/(f(x)+f(1−x))`, `f(x) = e^{−1/x}`: 0 for
/// `x ≤ 0`, 1 for `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let (a, b) = (smooth_f(x), smooth_f(1.0 - x));
        a / (a + b)
    }
}

/// Cut-off of the step `q → q+1`: identically 1 for variant A; for variant B
/// `χ(t) = 0` for `t ≤ σ_q/2`, `1` for `t ≥ σ_q`, smooth in between.
pub fn chi(variant: Variant, q: u32, t: f64) -> f64 {
    match variant {
        Variant::A => 1.0,
        Variant::B => {
            let s = ParamSet::sigma(q as i32);
            smooth_step((t - 0.5 * s) / (0.5 * s))
        }
    }
}
