//! Space–time mollification with a causal (one-sided) time kernel.
//!
//! The time kernel is a bump supported in `(0, ℓ)`: the mollified value at
//! time `t` is a weighted sum of inputs at lags `0, dt, …, ℓ`, so it never
//! looks into the future. `ℓ` is rounded up to a whole number of steps. The
//! space kernel is the radial bump `exp(−1/(1−|x|²/ℓ²))` of radius `ℓ`,
//! applied as its exact Fourier multiplier.

use std::sync::Mutex;

use super::spectral::SpectralField;
use super::trajectory::TimeTrajectory;
use crate::error::{Result, WnsError};

/// Smooth bump on (−1, 1), zero outside.
#[inline]
pub fn bump(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + (n % 2);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Discrete causal time kernel.
#[derive(Clone, Debug)]
pub struct TimeMollifier {
    steps: usize,
    dt: f64,
    weights: Vec<f64>,
}

impl TimeMollifier {
    /// Kernel of width `ℓ` rounded up to a multiple of `dt` (at least one step).
    pub fn new(ell: f64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !(ell > 0.0) {
            return Err(WnsError::InvalidParams(format!("mollifier width {ell}, step {dt}")));
        }
        let steps = ((ell / dt) - 1e-9).ceil().max(1.0) as usize;
        let width = steps as f64 * dt;
        let eta = |s: f64| bump(2.0 * s / width - 1.0);
        let mut weights: Vec<f64> = (0..=steps)
            .map(|j| {
                let lo = ((j as f64 - 0.5) * dt).max(0.0);
                let hi = ((j as f64 + 0.5) * dt).min(width);
                simpson(eta, lo, hi, 256)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(Self { steps, dt, weights })
    }

    /// Number of steps of history the kernel consumes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Effective width `steps · dt`.
    pub fn width(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    /// Weight of lag `j` (`j = 0` is the current time).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Causal convolution of a scalar sequence: value at index `i` uses `i−steps..=i`.
    pub fn apply_scalar(&self, series: &[f64], i: usize) -> Result<f64> {
        if i < self.steps || i >= series.len() {
            return Err(WnsError::WindowTooShort(format!(
                "index {i} needs {} steps of history",
                self.steps
            )));
        }
        Ok(self.weights.iter().enumerate().map(|(j, w)| w * series[i - j]).sum())
    }
}

/// Radial space mollifier of radius `ℓ`.
#[derive(Debug)]
pub struct SpaceMollifier {
    ell: f64,
    table: Mutex<Vec<f64>>,
}

impl Clone for SpaceMollifier {
    fn clone(&self) -> Self {
        Self { ell: self.ell, table: Mutex::new(self.table.lock().expect("mollifier table").clone()) }
    }
}

impl SpaceMollifier {
    pub fn new(ell: f64) -> Self {
        Self { ell, table: Mutex::new(Vec::new()) }
    }

    pub fn radius(&self) -> f64 {
        self.ell
    }

    /// Fourier multiplier at squared wavenumber `k2` (normalized so `m(0) = 1`).
    pub fn multiplier(&self, k2: i64) -> f64 {
        let mut table = self.table.lock().expect("mollifier table");
        let need = k2 as usize + 1;
        if table.len() < need {
            let norm = simpson(|r| bump(r) * r * r, 0.0, 1.0, 2000);
            for q in table.len()..need {
                let kappa = (q as f64).sqrt() * self.ell;
                let m = if kappa == 0.0 {
                    1.0
                } else {
                    simpson(
                        |r| {
                            let x = kappa * r;
                            let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                            bump(r) * sinc * r * r
                        },
                        0.0,
                        1.0,
                        2000,
                    ) / norm
                };
                table.push(m);
            }
        }
        table[k2 as usize]
    }

    /// Convolve a field in space.
    pub fn apply<const C: usize>(&self, f: &SpectralField<C>) -> SpectralField<C> {
        let kmax = 3 * (f.grid().n() as i64 / 2).pow(2);
        self.multiplier(kmax);
        f.multiply(|k| self.multiplier(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]))
    }
}

/// Mollify a trajectory in space and (causally) in time. The input must
/// carry `ℓ` of history before the output window: output sample `i` sits at
/// input index `i + steps` and depends on input indices `i..=i + steps` only.
pub fn mollify_onesided<const C: usize>(
    traj: &TimeTrajectory<SpectralField<C>>,
    ell: f64,
) -> Result<TimeTrajectory<SpectralField<C>>> {
    let tm = TimeMollifier::new(ell, traj.dt())?;
    let sm = SpaceMollifier::new(ell);
    let m = tm.steps();
    if traj.len() <= m {
        return Err(WnsError::WindowTooShort(format!(
            "{} samples cannot supply {m} steps of history",
            traj.len()
        )));
    }
    let mut out = Vec::with_capacity(traj.len() - m);
    for i in m..traj.len() {
        let mut acc = SpectralField::<C>::zeros(traj.samples()[0].grid());
        for (j, w) in tm.weights().iter().enumerate() {
            acc.axpy(*w, &traj.samples()[i - j]);
        }
        out.push(sm.apply(&acc));
    }
    TimeTrajectory::new(traj.time(m), traj.dt(), out)
}
