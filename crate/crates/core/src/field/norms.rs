//! Function-space norms on T³ and on time trajectories.
//!
//! `H^s` is normalized as `‖f‖_{H^s} = 2^{-s/2}‖(I−Δ)^{s/2} f‖_{L²}`, which
//! makes `‖f‖_{H^s} ≤ ‖∇f‖_{L²}` for every mean-zero `f` and every `s ≤ 1`
//! (mode-wise `((1+|k|²)/2)^s ≤ |k|^{2s} ≤ |k|²` for `|k| ≥ 1`). For `s > 1`
//! no rescaling by a constant can give that inequality on all modes.

use super::ops::partial;
use super::spectral::{component_weight, SpectralField};
use super::trajectory::TimeTrajectory;
use crate::error::{Result, WnsError};

/// Which norm to evaluate.
#[derive(Clone, Debug, PartialEq)]
pub enum NormKind {
    /// `L^p`, `p ∈ [1, ∞]`, by physical-grid quadrature (`p = ∞` is the grid max).
    Lp(f64),
    /// Sobolev `H^s` via the spectral multiplier (any real `s`).
    Hs(f64),
    /// Bessel-potential `W^{s,p}`: multiplier `(I−Δ)^{s/2}` then `L^p` quadrature.
    Wsp(f64, f64),
    /// `C^N`: sum over multi-indices `|β| ≤ N` of grid maxima of `∂^β f`.
    CN(u32),
    /// Time Hölder norm over all discrete pairs, with a spatial base norm.
    HolderTime { alpha: f64, base: Box<NormKind> },
}

fn pointwise_magnitudes<const C: usize>(phys: &[Vec<f64>; C]) -> Vec<f64> {
    let np = phys[0].len();
    (0..np)
        .map(|x| {
            let mut s = 0.0;
            for c in 0..C {
                s += component_weight(c, C) * phys[c][x] * phys[c][x];
            }
            s.sqrt()
        })
        .collect()
}

fn lp_of_samples(mag: &[f64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        mag.iter().fold(0.0, |m, &v| m.max(v))
    } else {
        let s: f64 = mag.iter().map(|v| v.powf(p)).sum();
        (s * cell).powf(1.0 / p)
    }
}

/// Bessel-potential multiplier `(1+|k|²)^{s/2}`.
pub fn bessel<const C: usize>(f: &SpectralField<C>, s: f64) -> SpectralField<C> {
    f.multiply(|k| {
        let kk = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        (1.0 + kk).powf(0.5 * s)
    })
}

/// Norm of a single field snapshot.
pub fn norm<const C: usize>(f: &SpectralField<C>, kind: &NormKind) -> Result<f64> {
    let cell = f.grid().cell_volume();
    match kind {
        NormKind::Lp(p) => {
            if !(*p >= 1.0) {
                return Err(WnsError::UnsupportedKind(format!("L^p with p = {p}")));
            }
            Ok(lp_of_samples(&pointwise_magnitudes(&f.to_physical()), *p, cell))
        }
        NormKind::Hs(s) => Ok(2f64.powf(-0.5 * s) * bessel(f, *s).norm_l2()),
        NormKind::Wsp(s, p) => {
            if !(*p >= 1.0) {
                return Err(WnsError::UnsupportedKind(format!("W^(s,p) with p = {p}")));
            }
            Ok(lp_of_samples(&pointwise_magnitudes(&bessel(f, *s).to_physical()), *p, cell))
        }
        NormKind::CN(n) => {
            let mut total = 0.0;
            let mut frontier = vec![f.clone()];
            total += lp_of_samples(&pointwise_magnitudes(&f.to_physical()), f64::INFINITY, cell);
            // Enumerate multi-indices by non-decreasing axis order (each ∂^β once).
            let mut axes_of: Vec<usize> = vec![0];
            for _ in 0..*n {
                let mut next = Vec::new();
                let mut next_axes = Vec::new();
                for (g, &min_axis) in frontier.iter().zip(&axes_of) {
                    for a in min_axis..3 {
                        let d = partial(g, a);
                        total += lp_of_samples(
                            &pointwise_magnitudes(&d.to_physical()),
                            f64::INFINITY,
                            cell,
                        );
                        next.push(d);
                        next_axes.push(a);
                    }
                }
                frontier = next;
                axes_of = next_axes;
            }
            Ok(total)
        }
        NormKind::HolderTime { .. } => {
            Err(WnsError::UnsupportedKind("time Hölder norm needs a trajectory".into()))
        }
    }
}

/// Norm of a trajectory: the time Hölder norm over all discrete pairs, or the
/// supremum in time of a spatial norm (`C_t X`).
pub fn trajectory_norm<const C: usize>(
    traj: &TimeTrajectory<SpectralField<C>>,
    kind: &NormKind,
) -> Result<f64> {
    match kind {
        NormKind::HolderTime { alpha, base } => {
            if !(*alpha > 0.0 && *alpha < 1.0) {
                return Err(WnsError::UnsupportedKind(format!("Hölder exponent {alpha}")));
            }
            let values: Vec<&SpectralField<C>> = traj.samples().iter().collect();
            let mut sup = 0.0f64;
            for v in &values {
                sup = sup.max(norm(*v, base)?);
            }
            let mut semi = 0.0f64;
            for i in 0..values.len() {
                for j in 0..i {
                    let d = values[i] - values[j];
                    let dt = (i - j) as f64 * traj.dt();
                    semi = semi.max(norm(&d, base)? / dt.powf(*alpha));
                }
            }
            Ok(semi + sup)
        }
        other => {
            let mut sup = 0.0f64;
            for v in traj.samples() {
                sup = sup.max(norm(v, other)?);
            }
            Ok(sup)
        }
    }
}

/// Incremental evaluator of the time Hölder norm in `L²` along a growing
/// trajectory: `push` returns the norm of the prefix seen so far.
#[derive(Clone, Debug, Default)]
pub struct HolderL2Tracker {
    alpha: f64,
    dt: f64,
    history: Vec<Vec<num_complex::Complex64>>,
    weights: Vec<f64>,
    sup: f64,
    semi: f64,
}

impl HolderL2Tracker {
    pub fn new(alpha: f64, dt: f64) -> Self {
        Self { alpha, dt, ..Default::default() }
    }

    /// Add the next sample, given as flattened coefficients with Parseval weights.
    pub fn push(&mut self, coeffs: Vec<num_complex::Complex64>, weights: &[f64]) -> f64 {
        if self.weights.is_empty() {
            self.weights = weights.to_vec();
        }
        let vol = (2.0 * std::f64::consts::PI).powi(3);
        let own: f64 = coeffs.iter().zip(&self.weights).map(|(c, w)| w * c.norm_sqr()).sum::<f64>() * vol;
        self.sup = self.sup.max(own.sqrt());
        let n = self.history.len();
        for (j, old) in self.history.iter().enumerate() {
            let d: f64 = coeffs
                .iter()
                .zip(old)
                .zip(&self.weights)
                .map(|((a, b), w)| w * (a - b).norm_sqr())
                .sum::<f64>()
                * vol;
            let lag = (n - j) as f64 * self.dt;
            self.semi = self.semi.max(d.sqrt() / lag.powf(self.alpha));
        }
        self.history.push(coeffs);
        self.semi + self.sup
    }

    pub fn value(&self) -> f64 {
        self.semi + self.sup
    }
}
