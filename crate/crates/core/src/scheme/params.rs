//! The parameter ladder, its inequality ledger and the energy profile.
//!
//! All ladder quantities are evaluated through logarithms
//! (`ln λ_q = b^q ln a`), so astronomically large paper-regime values of `a`
//! remain representable.

use serde::{Deserialize, Serialize};

use crate::error::{Result, WnsError};

/// Whether inductive inequalities are asserted or only recorded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Paper,
    Desk,
}

/// Determining parameters `a, b, α, β` plus the constant slot `M₀`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    /// `log₂ a` (so `a = 2^{log2_a}` may be far beyond `f64`).
    pub log2_a: f64,
    pub b: u64,
    pub alpha: f64,
    pub beta: f64,
    /// Universal constant `M₀` (calibrated, see [`calibrate_m0`](crate::scheme::calibrate_m0)).
    pub m0: f64,
    pub regime: Regime,
}

impl ParamSet {
    pub fn new(a: f64, b: u64, alpha: f64, beta: f64, regime: Regime) -> Result<Self> {
        if !(a > 1.0) {
            return Err(WnsError::InvalidParams(format!("a = {a} must exceed 1")));
        }
        Self::with_log2_a(a.log2(), b, alpha, beta, regime)
    }

    pub fn with_log2_a(log2_a: f64, b: u64, alpha: f64, beta: f64, regime: Regime) -> Result<Self> {
        if !(log2_a > 0.0) || b < 2 {
            return Err(WnsError::InvalidParams(format!("need a > 1 and b ≥ 2 (log2 a = {log2_a}, b = {b})")));
        }
        if !(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0) {
            return Err(WnsError::InvalidParams(format!("alpha = {alpha}, beta = {beta} must lie in (0,1)")));
        }
        Ok(Self { log2_a, b, alpha, beta, m0: 1.0, regime })
    }

    pub fn a(&self) -> f64 {
        self.log2_a.exp2()
    }

    pub fn ln_a(&self) -> f64 {
        self.log2_a * std::f64::consts::LN_2
    }

    /// `ln λ_q = b^q ln a`.
    pub fn ln_lambda(&self, q: u32) -> f64 {
        (self.b as f64).powi(q as i32) * self.ln_a()
    }

    /// `λ_q = a^{b^q}` (may be `+∞` in `f64`).
    pub fn lambda(&self, q: u32) -> f64 {
        self.ln_lambda(q).exp()
    }

    /// `δ_q = λ₁^{2β} λ_q^{−2β}`.
    pub fn delta(&self, q: u32) -> f64 {
        (2.0 * self.beta * (self.ln_lambda(1) - self.ln_lambda(q))).exp()
    }

    /// `ℓ = λ_{q+1}^{−3α/2} λ_q^{−2}` for the step `q → q+1`.
    pub fn ell(&self, q: u32) -> f64 {
        self.ln_ell(q).exp()
    }

    /// `ln ℓ` (finite even when `ℓ` underflows).
    pub fn ln_ell(&self, q: u32) -> f64 {
        -1.5 * self.alpha * self.ln_lambda(q + 1) - 2.0 * self.ln_lambda(q)
    }

    /// `t_q = −2 + Σ_{1≤r≤q} δ_r^{1/2}`.
    pub fn t_q(&self, q: u32) -> f64 {
        -2.0 + (1..=q).map(|r| self.delta(r).sqrt()).sum::<f64>()
    }

    /// Frequency cutoff `f(q) = λ_{q+1}^{α/8}` of `z_q`.
    pub fn cutoff(&self, q: u32) -> f64 {
        (self.alpha / 8.0 * self.ln_lambda(q + 1)).exp()
    }

    /// `σ_q = 2^{−q}` (`q ≥ −1`).
    pub fn sigma(q: i32) -> f64 {
        2f64.powi(-q)
    }

    /// `γ_q = 2^{−q}` except `γ₃ = K`.
    pub fn gamma_b(q: u32, k: f64) -> f64 {
        if q == 3 {
            k
        } else {
            2f64.powi(-(q as i32))
        }
    }
}

/// One inequality of the parameter ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerLine {
    /// Short identifier, e.g. `aaa`.
    pub id: String,
    /// Human-readable condition.
    pub condition: String,
    /// Left and right sides in the form `lhs ≤ rhs` (or `lhs < rhs`), in
    /// natural logarithms when `log_scale` is set.
    pub lhs: f64,
    pub rhs: f64,
    pub log_scale: bool,
    pub pass: bool,
}

fn line(id: &str, condition: &str, lhs: f64, rhs: f64, strict: bool, log_scale: bool) -> LedgerLine {
    let pass = if strict { lhs < rhs } else { lhs <= rhs };
    LedgerLine { id: id.into(), condition: condition.into(), lhs, rhs, log_scale, pass }
}

/// Result of [`validate_params`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamLedger {
    pub regime: Regime,
    pub lines: Vec<LedgerLine>,
}

impl ParamLedger {
    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    pub fn failures(&self) -> Vec<&LedgerLine> {
        self.lines.iter().filter(|l| !l.pass).collect()
    }

    /// Lines belonging to the prescribed-energy construction.
    pub fn energy_scheme_lines(&self) -> impl Iterator<Item = &LedgerLine> {
        self.lines.iter().filter(|l| !l.id.starts_with("datum"))
    }
}

/// Evaluate every parameter inequality of both constructions. Without an
/// energy profile (prescribed-datum runs) the energy lines are omitted.
pub fn validate_params(p: &ParamSet, profile: Option<&EnergyProfile>) -> ParamLedger {
    let (a, b, be) = (p.alpha, p.b as f64, p.beta);
    let ln_a = p.ln_a();
    let ln_l1 = p.ln_lambda(1);
    let ab = a * b;
    let mut lines = vec![
        line("alpha-beta", "18 β b² < α", 18.0 * be * b * b, a, true, false),
        line("alpha-50", "2 β b² < 1/7 − 50α", 2.0 * be * b * b, 1.0 / 7.0 - 50.0 * a, true, false),
        line("alpha-160", "2 β b < 1/7 − 160α", 2.0 * be * b, 1.0 / 7.0 - 160.0 * a, true, false),
        line("b-56", "b ∈ 7·8ℕ (b mod 56 = 0)", (p.b % 56) as f64, 0.0, false, false),
        line(
            "alpha-b-8",
            "α b ∈ 8ℕ (distance of αb/8 to a positive integer)",
            if (ab / 8.0).round() >= 1.0 { (ab / 8.0 - (ab / 8.0).round()).abs() } else { f64::INFINITY },
            1e-9,
            false,
            false,
        ),
        line("alpha-b-4", "4 < α b", 4.0, ab, true, false),
        line("aaa", "ln 2 ≤ βb ln a   (a^{βb} ≥ 2)", std::f64::consts::LN_2, be * b * ln_a, false, true),
    ];
    if let Some(profile) = profile {
        lines.extend([
            line("aaa2-lower", "4 ≤ e_lower", 4.0, profile.e_lower, false, false),
            line("aaa2-order", "e_lower ≤ ē", profile.e_lower, profile.e_bar, false, false),
            line(
                "aaa2-upper",
                "ln ē ≤ (3bα/2 + 2) ln a",
                profile.e_bar.ln(),
                (1.5 * b * a + 2.0) * ln_a,
                false,
                true,
            ),
            line(
                "aaa20",
                "ln(10 M₀ ē) ≤ (11α/96 − 2b²β) ln λ₁",
                (10.0 * p.m0 * profile.e_bar).ln(),
                (11.0 * a / 96.0 - 2.0 * b * b * be) * ln_l1,
                false,
                true,
            ),
        ]);
    }
    for q in 0..2u32 {
        let ln_ell = p.ln_ell(q);
        lines.push(line(
            &format!("ell-1-q{q}"),
            "ln(ℓ λ_q⁴) ≤ −α ln λ_{q+1}",
            ln_ell + 4.0 * p.ln_lambda(q),
            -a * p.ln_lambda(q + 1),
            false,
            true,
        ));
        lines.push(line(
            &format!("ell-2-q{q}"),
            "ln ℓ^{−1} ≤ 2α ln λ_{q+1}",
            -ln_ell,
            2.0 * a * p.ln_lambda(q + 1),
            false,
            true,
        ));
        if let Some(profile) = profile {
            lines.push(line(&format!("ell-3-q{q}"), "ln ē ≤ ln ℓ^{−1}", profile.e_bar.ln(), -ln_ell, false, true));
        }
    }
    lines.extend([
        line("datum-1", "12 < b(3α − 4β)", 12.0, b * (3.0 * a - 4.0 * be), true, false),
        line("datum-2", "16 β b < 3α", 16.0 * be * b, 3.0 * a, true, false),
        line("datum-3", "18 β b < α", 18.0 * be * b, a, true, false),
        line("datum-4", "161 α < 1/7", 161.0 * a, 1.0 / 7.0, true, false),
    ]);
    ParamLedger { regime: p.regime, lines }
}

/// Prescribed energy `e(t)` on `[0, 1]`, extended by `e(0)` to negative times
/// and by `e(1)` beyond 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum EnergyKind {
    /// `e(t) = c₀ + c₁ t`.
    Affine { c0: f64, c1: f64 },
    /// Cubic Hermite interpolation (C¹) of tabulated values on `[0, 1]`.
    Table { times: Vec<f64>, values: Vec<f64> },
}

/// Energy profile with its bounds `e_lower`, `ē`, `ẽ = ‖e′‖_{C⁰}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyProfile {
    pub kind: EnergyKind,
    pub e_lower: f64,
    pub e_bar: f64,
    pub e_tilde: f64,
}

impl EnergyProfile {
    /// Build and enforce `e ≥ e_lower ≥ 4`.
    pub fn new(kind: EnergyKind) -> Result<Self> {
        if let EnergyKind::Table { times, values } = &kind {
            if times.len() < 2 || times.len() != values.len() || times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(WnsError::Config("energy table needs ≥ 2 increasing times".into()));
            }
        }
        let mut p = Self { kind, e_lower: 0.0, e_bar: 0.0, e_tilde: 0.0 };
        let samples = 4096;
        let (mut lo, mut hi, mut der) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for i in 0..=samples {
            let t = i as f64 / samples as f64;
            let e = p.e(t);
            lo = lo.min(e);
            hi = hi.max(e);
            der = der.max(p.de(t).abs());
        }
        p.e_lower = lo;
        p.e_bar = hi;
        p.e_tilde = der;
        if !(lo >= 4.0) {
            return Err(WnsError::EnergyConstraintViolated(format!(
                "min e = {lo} < 4 (needed for 3e/4 ≤ e − 1 ≤ 5e/4)"
            )));
        }
        Ok(p)
    }

    pub fn affine(c0: f64, c1: f64) -> Result<Self> {
        Self::new(EnergyKind::Affine { c0, c1 })
    }

    fn hermite(times: &[f64], values: &[f64], t: f64) -> (f64, f64) {
        let n = times.len();
        let t = t.clamp(times[0], times[n - 1]);
        let j = times.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        let slope = |i: usize| {
            if i == 0 {
                (values[1] - values[0]) / (times[1] - times[0])
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / (times[n - 1] - times[n - 2])
            } else {
                (values[i + 1] - values[i - 1]) / (times[i + 1] - times[i - 1])
            }
        };
        let h = times[j + 1] - times[j];
        let s = (t - times[j]) / h;
        let (m0, m1) = (slope(j) * h, slope(j + 1) * h);
        let (y0, y1) = (values[j], values[j + 1]);
        let v = (2.0 * s.powi(3) - 3.0 * s * s + 1.0) * y0
            + (s.powi(3) - 2.0 * s * s + s) * m0
            + (-2.0 * s.powi(3) + 3.0 * s * s) * y1
            + (s.powi(3) - s * s) * m1;
        let d = ((6.0 * s * s - 6.0 * s) * y0
            + (3.0 * s * s - 4.0 * s + 1.0) * m0
            + (-6.0 * s * s + 6.0 * s) * y1
            + (3.0 * s * s - 2.0 * s) * m1)
            / h;
        (v, d)
    }

    /// `e(t)`.
    pub fn e(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match &self.kind {
            EnergyKind::Affine { c0, c1 } => c0 + c1 * t,
            EnergyKind::Table { times, values } => Self::hermite(times, values, t).0,
        }
    }

    /// `e′(t)` on `(0, 1)` (zero on the constant extensions).
    pub fn de(&self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        match &self.kind {
            EnergyKind::Affine { c1, .. } => *c1,
            EnergyKind::Table { times, values } => Self::hermite(times, values, t).1,
        }
    }
}
