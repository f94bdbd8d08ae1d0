//! Inputs of a level step: the noise path and the level-`q` triple
//! `(v_q, R̊_q, z_q)` sampled on the window.

use crate::error::{Result, WnsError};
use crate::field::ops::{heat_semigroup, spectral_filter, Filter};
use crate::field::{traceless_product_with, Grid3, ProductRule, SpectralVectorField, SymmetricTensorField, TimeTrajectory};
use crate::noise::Variant;

/// Products inside the scheme are collocated on the run grid.
pub const RULE: ProductRule = ProductRule::Collocation;

/// The stochastic Stokes convolution in split form `z = z_in + Z`.
///
/// `Z` is stored on its own (small) grid — it has finitely many modes — and
/// transferred to the run grid on demand. For negative times `z` is frozen
/// at its `t = 0` value.
#[derive(Clone, Debug)]
pub struct NoisePath {
    /// `Z` on `[0, T]`, `Z(0) = 0`.
    pub big_z: TimeTrajectory<SpectralVectorField>,
    /// Initial datum `u₀` (variant B) on the run grid; `z_in(t) = e^{tΔ}u₀`.
    pub u0: Option<SpectralVectorField>,
}

impl NoisePath {
    pub fn new(big_z: TimeTrajectory<SpectralVectorField>, u0: Option<SpectralVectorField>) -> Result<Self> {
        if big_z.t_lo().abs() > 1e-12 {
            return Err(WnsError::OutOfRange(format!("noise path starts at {} ≠ 0", big_z.t_lo())));
        }
        Ok(Self { big_z, u0 })
    }

    /// A path with `Z ≡ 0` on `[0, t_end]`.
    pub fn quiet(grid: &Grid3, dt: f64, t_end: f64, u0: Option<SpectralVectorField>) -> Result<Self> {
        let steps = (t_end / dt).round() as usize;
        Self::new(TimeTrajectory::new(0.0, dt, vec![SpectralVectorField::zeros(grid); steps + 1])?, u0)
    }

    pub fn dt(&self) -> f64 {
        self.big_z.dt()
    }

    pub fn t_hi(&self) -> f64 {
        self.big_z.t_hi()
    }

    fn index(&self, t: f64) -> Result<usize> {
        self.big_z.index_of(t.max(0.0))
    }

    /// `Z(t)` (frozen for `t < 0`) on `grid`, filtered to `|k| ≤ f`.
    pub fn big_z_at(&self, t: f64, f: f64, grid: &Grid3) -> Result<SpectralVectorField> {
        let z = &self.big_z.samples()[self.index(t)?];
        Ok(spectral_filter(&z.to_grid(grid), Filter::Leq(f)))
    }

    /// `z_in(t) = e^{t⁺Δ}u₀` (zero for variant A).
    pub fn z_in_at(&self, t: f64, grid: &Grid3) -> Result<SpectralVectorField> {
        match &self.u0 {
            Some(u0) => heat_semigroup(&u0.to_grid(grid), t.max(0.0)),
            None => Ok(SpectralVectorField::zeros(grid)),
        }
    }

    /// `z_q(t) = z_in(t) + P_{≤f}Z(t)`.
    pub fn z_at(&self, t: f64, f: f64, grid: &Grid3) -> Result<SpectralVectorField> {
        let mut z = self.big_z_at(t, f, grid)?;
        if self.u0.is_some() {
            z = &z + &self.z_in_at(t, grid)?;
        }
        Ok(z)
    }

    /// `z(t)` without frequency cut-off.
    pub fn z_full_at(&self, t: f64, grid: &Grid3) -> Result<SpectralVectorField> {
        self.z_at(t, f64::INFINITY, grid)
    }
}

/// One input sample of a level step.
#[derive(Clone, Debug)]
pub struct InputSample {
    pub v: SpectralVectorField,
    pub r: SymmetricTensorField,
    pub z: SpectralVectorField,
}

/// Level-`q` data consumed by the step `q → q+1`, sampled on a uniform
/// time grid `t_j = t_lo + j·dt`.
pub trait LevelSource {
    fn q(&self) -> u32;
    fn grid(&self) -> &Grid3;
    fn t_lo(&self) -> f64;
    fn dt(&self) -> f64;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn time(&self, j: usize) -> f64 {
        self.t_lo() + j as f64 * self.dt()
    }
    /// `(v_q, R̊_q, z_q)` at index `j`.
    fn sample(&self, j: usize) -> Result<InputSample>;
}

/// Level 0: `v₀ ≡ 0`, `R̊₀ = z₀ ⊗̊ z₀`, computed on demand from the noise.
#[derive(Clone, Debug)]
pub struct Level0<'a> {
    pub noise: &'a NoisePath,
    pub grid: Grid3,
    pub t_lo: f64,
    pub len: usize,
    /// Cut-off `f(0)` of `z₀`.
    pub cutoff: f64,
}

impl<'a> Level0<'a> {
    /// Level-0 data on `[t_lo, t_hi]` with the noise's time step.
    pub fn new(noise: &'a NoisePath, grid: &Grid3, t_lo: f64, t_hi: f64, cutoff: f64) -> Result<Self> {
        let dt = noise.dt();
        let steps = ((t_hi - t_lo) / dt).round();
        let on_grid = |t: f64| ((t / dt).round() * dt - t).abs() <= 1e-9 * dt.max(t.abs());
        if steps < 1.0 || !on_grid(t_lo) || !on_grid(t_hi) {
            return Err(WnsError::InvalidParams(format!(
                "window [{t_lo}, {t_hi}] is not aligned to dt = {dt}"
            )));
        }
        if t_hi > noise.t_hi() + 1e-9 {
            return Err(WnsError::OutOfRange(format!("window ends at {t_hi} after the noise ({})", noise.t_hi())));
        }
        Ok(Self { noise, grid: grid.clone(), t_lo, len: steps as usize + 1, cutoff })
    }
}

impl LevelSource for Level0<'_> {
    fn q(&self) -> u32 {
        0
    }
    fn grid(&self) -> &Grid3 {
        &self.grid
    }
    fn t_lo(&self) -> f64 {
        self.t_lo
    }
    fn dt(&self) -> f64 {
        self.noise.dt()
    }
    fn len(&self) -> usize {
        self.len
    }
    fn sample(&self, j: usize) -> Result<InputSample> {
        let z = self.noise.z_at(self.time(j), self.cutoff, &self.grid)?;
        let r = traceless_product_with(&z, &z, RULE)?;
        Ok(InputSample { v: SpectralVectorField::zeros(&self.grid), r, z })
    }
}

/// A level produced by a previous step and kept in memory.
#[derive(Clone, Debug)]
pub struct IterationState<'a> {
    pub q: u32,
    pub v: TimeTrajectory<SpectralVectorField>,
    pub r: TimeTrajectory<SymmetricTensorField>,
    pub noise: &'a NoisePath,
    /// Cut-off `f(q)` of `z_q`.
    pub cutoff: f64,
}

impl LevelSource for IterationState<'_> {
    fn q(&self) -> u32 {
        self.q
    }
    fn grid(&self) -> &Grid3 {
        self.v.samples()[0].grid()
    }
    fn t_lo(&self) -> f64 {
        self.v.t_lo()
    }
    fn dt(&self) -> f64 {
        self.v.dt()
    }
    fn len(&self) -> usize {
        self.v.len()
    }
    fn sample(&self, j: usize) -> Result<InputSample> {
        let z = self.noise.z_at(self.time(j), self.cutoff, self.grid())?;
        Ok(InputSample { v: self.v.samples()[j].clone(), r: self.r.samples()[j].clone(), z })
    }
}

/// Convenience: which construction a run follows.
pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::A => "A",
        Variant::B => "B",
    }
}
