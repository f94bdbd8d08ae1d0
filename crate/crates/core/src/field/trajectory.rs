//! Uniformly sampled time trajectories.

use crate::error::{Result, WnsError};

/// Samples at `t_lo + i·dt`, `i = 0..=steps`.
#[derive(Clone, Debug)]
pub struct TimeTrajectory<T> {
    t_lo: f64,
    dt: f64,
    samples: Vec<T>,
}

impl<T> TimeTrajectory<T> {
    pub fn new(t_lo: f64, dt: f64, samples: Vec<T>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(WnsError::InvalidParams(format!("time step {dt} must be positive")));
        }
        if samples.is_empty() {
            return Err(WnsError::WindowTooShort("trajectory without samples".into()));
        }
        Ok(Self { t_lo, dt, samples })
    }

    /// Trajectory on `[t_lo, t_hi]`; fails unless `(t_hi − t_lo)/dt` is integral.
    pub fn on_window(t_lo: f64, t_hi: f64, dt: f64, samples: Vec<T>) -> Result<Self> {
        let steps = (t_hi - t_lo) / dt;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(WnsError::InvalidParams(format!(
                "window [{t_lo}, {t_hi}] is not a multiple of dt = {dt}"
            )));
        }
        if samples.len() != steps.round() as usize + 1 {
            return Err(WnsError::InvalidParams(format!(
                "{} samples for {} steps",
                samples.len(),
                steps.round()
            )));
        }
        Self::new(t_lo, dt, samples)
    }

    pub fn t_lo(&self) -> f64 {
        self.t_lo
    }

    pub fn t_hi(&self) -> f64 {
        self.t_lo + self.steps() as f64 * self.dt
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_lo + i as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples.len()).map(|i| self.time(i)).collect()
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        self.samples.get(i)
    }

    /// Index of the sample at time `t` (must lie on the grid within 1e-9·dt).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t_lo) / self.dt;
        let r = x.round();
        if (x - r).abs() > 1e-9 || r < 0.0 || r as usize >= self.samples.len() {
            return Err(WnsError::OutOfRange(format!(
                "t = {t} not a sample of [{}, {}]",
                self.t_lo,
                self.t_hi()
            )));
        }
        Ok(r as usize)
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> TimeTrajectory<U> {
        TimeTrajectory { t_lo: self.t_lo, dt: self.dt, samples: self.samples.iter().map(f).collect() }
    }

    /// Sub-trajectory of samples `from..=to`.
    pub fn slice(&self, from: usize, to: usize) -> Result<TimeTrajectory<T>>
    where
        T: Clone,
    {
        if from > to || to >= self.samples.len() {
            return Err(WnsError::OutOfRange(format!("slice {from}..={to}")));
        }
        Ok(TimeTrajectory {
            t_lo: self.time(from),
            dt: self.dt,
            samples: self.samples[from..=to].to_vec(),
        })
    }
}
