//! Spectral field containers: scalars, vectors and symmetric 3×3 tensors.
//!
//! All three are `SpectralField<C>` with `C` components of half-spectrum
//! coefficients. Symmetric tensors store the six entries
//! `[xx, xy, xz, yy, yz, zz]`, so symmetry is exact by construction.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use super::grid::Grid3;
use crate::error::{Result, WnsError};

/// Fourier coefficients of a real `C`-component field on T³.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<const C: usize> {
    grid: Grid3,
    comps: [Vec<Complex64>; C],
}

pub type SpectralScalarField = SpectralField<1>;
pub type SpectralVectorField = SpectralField<3>;
pub type SymmetricTensorField = SpectralField<6>;

/// Storage order of symmetric tensor entries.
pub const SYM_INDEX: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

/// Position of entry `(a, b)` in the six-entry storage.
#[inline]
pub fn sym(a: usize, b: usize) -> usize {
    match (a.min(b), a.max(b)) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

/// Frobenius weight of a stored component (off-diagonal entries appear twice).
#[inline]
pub fn component_weight(c: usize, ncomp: usize) -> f64 {
    if ncomp == 6 && matches!(c, 1 | 2 | 4) {
        2.0
    } else {
        1.0
    }
}

fn zeros(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(0.0, 0.0); n]
}

impl<const C: usize> SpectralField<C> {
    pub fn zeros(grid: &Grid3) -> Self {
        Self { grid: grid.clone(), comps: std::array::from_fn(|_| zeros(grid.n_spec())) }
    }

    /// Wrap raw coefficient arrays; Nyquist modes are stripped.
    pub fn from_coeffs(grid: &Grid3, mut comps: [Vec<Complex64>; C]) -> Result<Self> {
        for c in comps.iter_mut() {
            if c.len() != grid.n_spec() {
                return Err(WnsError::GridMismatch(format!(
                    "coefficient block of length {} on grid n={}",
                    c.len(),
                    grid.n()
                )));
            }
            grid.strip_nyquist(c);
        }
        Ok(Self { grid: grid.clone(), comps })
    }

    /// Transform physical samples (one array per component).
    pub fn from_physical(grid: &Grid3, phys: &[Vec<f64>; C]) -> Self {
        Self { grid: grid.clone(), comps: std::array::from_fn(|c| grid.forward(&phys[c])) }
    }

    /// Sample an analytic function at the grid points and transform.
    pub fn from_fn(grid: &Grid3, f: impl Fn([f64; 3]) -> [f64; C]) -> Self {
        let mut phys: [Vec<f64>; C] = std::array::from_fn(|_| vec![0.0; grid.n_phys()]);
        for idx in 0..grid.n_phys() {
            let v = f(grid.x_at(idx));
            for c in 0..C {
                phys[c][idx] = v[c];
            }
        }
        Self::from_physical(grid, &phys)
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn comps(&self) -> &[Vec<Complex64>; C] {
        &self.comps
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut Vec<Complex64> {
        &mut self.comps[c]
    }

    pub fn into_comps(self) -> [Vec<Complex64>; C] {
        self.comps
    }

    /// Physical samples of every component.
    pub fn to_physical(&self) -> [Vec<f64>; C] {
        std::array::from_fn(|c| self.grid.inverse(&self.comps[c]))
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(WnsError::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// Apply a per-mode linear map `(k, coefficients) -> coefficients`.
    pub fn map_modes(&self, f: impl Fn([i64; 3], [Complex64; C]) -> [Complex64; C]) -> Self {
        let mut out = Self::zeros(&self.grid);
        for idx in 0..self.grid.n_spec() {
            let k = self.grid.k_at(idx);
            let v = f(k, std::array::from_fn(|c| self.comps[c][idx]));
            for c in 0..C {
                out.comps[c][idx] = v[c];
            }
        }
        out
    }

    /// Multiply every mode by a real scalar depending on `k`.
    pub fn multiply(&self, m: impl Fn([i64; 3]) -> f64) -> Self {
        let mut out = self.clone();
        for idx in 0..self.grid.n_spec() {
            let s = m(self.grid.k_at(idx));
            for c in 0..C {
                out.comps[c][idx] *= s;
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale_mut(s);
        out
    }

    pub fn scale_mut(&mut self, s: f64) {
        for comp in self.comps.iter_mut() {
            for c in comp.iter_mut() {
                *c *= s;
            }
        }
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert!(self.grid == other.grid, "axpy on mismatched grids");
        for c in 0..C {
            for (a, b) in self.comps[c].iter_mut().zip(&other.comps[c]) {
                *a += b * s;
            }
        }
    }

    /// L² inner product `∫ f·g dx` (Frobenius for tensors).
    pub fn inner(&self, other: &Self) -> f64 {
        assert!(self.grid == other.grid, "inner product on mismatched grids");
        let vol = (2.0 * std::f64::consts::PI).powi(3);
        let mut acc = 0.0;
        for c in 0..C {
            let w = component_weight(c, C);
            for (idx, (a, b)) in self.comps[c].iter().zip(&other.comps[c]).enumerate() {
                acc += w * self.grid.multiplicity(idx) * (a * b.conj()).re;
            }
        }
        acc * vol
    }

    /// Squared L² norm via Parseval.
    pub fn norm_l2_sq(&self) -> f64 {
        self.inner(self)
    }

    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_sq().max(0.0).sqrt()
    }

    /// Euclidean size of the mean (k = 0) coefficient.
    pub fn mean_abs(&self) -> f64 {
        let mut s = 0.0;
        for c in 0..C {
            s += component_weight(c, C) * self.comps[c][0].norm_sqr();
        }
        s.sqrt()
    }

    /// Mean value of each component.
    pub fn mean(&self) -> [f64; C] {
        std::array::from_fn(|c| self.comps[c][0].re)
    }

    /// Largest violation of `û_{-k} = conj(û_k)` inside the self-paired plane `k₃ = 0`,
    /// relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let n = g.n();
        let nh = g.nh();
        let mut defect: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for c in 0..C {
            for i in 0..n {
                for j in 0..n {
                    let a = self.comps[c][(i * n + j) * nh];
                    let ii = (n - i) % n;
                    let jj = (n - j) % n;
                    let b = self.comps[c][(ii * n + jj) * nh];
                    defect = defect.max((a - b.conj()).norm());
                }
            }
            for v in &self.comps[c] {
                scale = scale.max(v.norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }

    /// Largest coefficient magnitude.
    pub fn max_coeff(&self) -> f64 {
        self.comps.iter().flat_map(|c| c.iter()).fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Relative L² distance `‖self − other‖ / max(‖other‖, tiny)`.
    pub fn rel_diff(&self, other: &Self) -> f64 {
        let d = (self - other).norm_l2();
        let s = other.norm_l2().max(self.norm_l2());
        if s == 0.0 {
            d
        } else {
            d / s
        }
    }

    /// Transfer to another grid (truncating or zero-padding modes).
    pub fn to_grid(&self, target: &Grid3) -> Self {
        Self {
            grid: target.clone(),
            comps: std::array::from_fn(|c| self.grid.transfer(&self.comps[c], target)),
        }
    }
}

impl SpectralVectorField {
    /// Largest `|k·û_k|` relative to the largest `|k||û_k|`.
    pub fn divergence_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for idx in 0..self.grid().n_spec() {
            let k = self.grid().k_at(idx);
            let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
            let kn = (kf[0] * kf[0] + kf[1] * kf[1] + kf[2] * kf[2]).sqrt();
            let u = [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]];
            let d = u[0] * kf[0] + u[1] * kf[1] + u[2] * kf[2];
            let un = (u[0].norm_sqr() + u[1].norm_sqr() + u[2].norm_sqr()).sqrt();
            defect = defect.max(d.norm());
            scale = scale.max(kn * un);
        }
        if scale == 0.0 {
            0.0
        } else {
            defect / scale
        }
    }
}

impl SymmetricTensorField {
    /// Largest pointwise |trace| relative to the largest pointwise Frobenius norm.
    pub fn trace_defect(&self) -> f64 {
        let p = self.to_physical();
        let mut tr: f64 = 0.0;
        let mut sc: f64 = 0.0;
        for idx in 0..self.grid().n_phys() {
            tr = tr.max((p[0][idx] + p[3][idx] + p[5][idx]).abs());
            let mut f = 0.0;
            for c in 0..6 {
                f += component_weight(c, 6) * p[c][idx] * p[c][idx];
            }
            sc = sc.max(f.sqrt());
        }
        if sc == 0.0 {
            0.0
        } else {
            tr / sc
        }
    }

    /// Remove the trace part: `T − (tr T/3) Id`.
    pub fn traceless_part(&self) -> Self {
        let mut out = self.clone();
        for idx in 0..self.grid().n_spec() {
            let tr = (self.comps[0][idx] + self.comps[3][idx] + self.comps[5][idx]) / 3.0;
            out.comps[0][idx] -= tr;
            out.comps[3][idx] -= tr;
            out.comps[5][idx] -= tr;
        }
        out
    }
}

impl<const C: usize> Add for &SpectralField<C> {
    type Output = SpectralField<C>;
    fn add(self, rhs: Self) -> SpectralField<C> {
        let mut out = self.clone();
        out.axpy(1.0, rhs);
        out
    }
}

impl<const C: usize> Sub for &SpectralField<C> {
    type Output = SpectralField<C>;
    fn sub(self, rhs: Self) -> SpectralField<C> {
        let mut out = self.clone();
        out.axpy(-1.0, rhs);
        out
    }
}

impl<const C: usize> Neg for &SpectralField<C> {
    type Output = SpectralField<C>;
    fn neg(self) -> SpectralField<C> {
        self.scale(-1.0)
    }
}

impl<const C: usize> Mul<f64> for &SpectralField<C> {
    type Output = SpectralField<C>;
    fn mul(self, rhs: f64) -> SpectralField<C> {
        self.scale(rhs)
    }
}
