//! The periodic grid on T³ = [0, 2π)³ and its real-to-complex FFT.
//!
//! Physical samples live at `x = 2π (i, j, l) / n`, stored row-major with the
//! last axis contiguous. Spectral coefficients use the half-spectrum layout of
//! a real-to-complex transform: shape `n × n × (n/2 + 1)`, the last axis holding
//! the non-negative wavenumbers `k₃ = 0..=n/2`. Coefficients are Fourier-series
//! coefficients, `u(x) = Σ_k û_k e^{ik·x}`, so the forward transform carries
//! the `1/n³` factor. Nyquist modes (`|k_i| = n/2` on any axis) are always
//! zero in spectral storage: they have no unambiguous real derivative, and
//! keeping them out makes every spectral identity exact.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, WnsError};

/// Periodic cubic grid with `n` points per axis.
#[derive(Clone)]
pub struct Grid3 {
    n: usize,
    dealias_num: u32,
    dealias_den: u32,
    plans: Arc<Plans>,
}

struct Plans {
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid3(n={}, dealias={}/{})", self.n, self.dealias_num, self.dealias_den)
    }
}

impl PartialEq for Grid3 {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.dealias_num == other.dealias_num
            && self.dealias_den == other.dealias_den
    }
}

impl Grid3 {
    /// Grid with the default 2/3 dealiasing fraction.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_dealias(n, 2, 3)
    }

    /// Grid whose dealiased products keep modes with `|k_i| ≤ (num/den)·n/2`.
    pub fn with_dealias(n: usize, num: u32, den: u32) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(WnsError::InvalidGrid(format!("n = {n} must be even and >= 8")));
        }
        if num == 0 || den == 0 || num > den {
            return Err(WnsError::InvalidGrid(format!("dealias fraction {num}/{den} not in (0,1]")));
        }
        let mut rp = RealFftPlanner::<f64>::new();
        let mut cp = FftPlanner::<f64>::new();
        let plans = Plans {
            r2c: rp.plan_fft_forward(n),
            c2r: rp.plan_fft_inverse(n),
            fwd: cp.plan_fft_forward(n),
            inv: cp.plan_fft_inverse(n),
        };
        Ok(Self { n, dealias_num: num, dealias_den: den, plans: Arc::new(plans) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Length of the contiguous spectral axis, `n/2 + 1`.
    pub fn nh(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn n_phys(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn n_spec(&self) -> usize {
        self.n * self.n * self.nh()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    /// Volume of one grid cell, `(2π/n)³`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn dealias_fraction(&self) -> (u32, u32) {
        (self.dealias_num, self.dealias_den)
    }

    /// Largest wavenumber per axis kept by dealiased products.
    pub fn dealias_cutoff(&self) -> i64 {
        ((self.dealias_num as usize * (self.n / 2)) / self.dealias_den as usize) as i64
    }

    /// Signed wavenumber of spectral index `i` on a full axis (Nyquist maps to `n/2`).
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Wavevector of the spectral index triple.
    #[inline]
    pub fn k_of(&self, i: usize, j: usize, l: usize) -> [i64; 3] {
        [self.wavenumber(i), self.wavenumber(j), l as i64]
    }

    /// Wavevector of a flat spectral index.
    #[inline]
    pub fn k_at(&self, idx: usize) -> [i64; 3] {
        let nh = self.nh();
        let l = idx % nh;
        let j = (idx / nh) % self.n;
        let i = idx / (nh * self.n);
        self.k_of(i, j, l)
    }

    /// True for modes with some component equal to the Nyquist wavenumber.
    #[inline]
    pub fn is_nyquist(&self, k: [i64; 3]) -> bool {
        let h = (self.n / 2) as i64;
        k.iter().any(|&c| c.abs() == h)
    }

    /// Hermitian multiplicity of a stored mode: modes with `0 < k₃ < n/2`
    /// stand for themselves and their conjugate partner.
    #[inline]
    pub fn multiplicity(&self, idx: usize) -> f64 {
        let l = idx % self.nh();
        if l == 0 || l == self.n / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// Flat spectral index of a wavevector, if representable (`|k_i| < n/2`).
    /// Negative `k₃` is not stored; callers conjugate through `-k` instead.
    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        let h = (self.n / 2) as i64;
        if k.iter().any(|c| c.abs() >= h) || k[2] < 0 {
            return None;
        }
        let wrap = |c: i64| if c < 0 { (c + self.n as i64) as usize } else { c as usize };
        Some((wrap(k[0]) * self.n + wrap(k[1])) * self.nh() + k[2] as usize)
    }

    /// Physical coordinate of a flat physical index.
    #[inline]
    pub fn x_at(&self, idx: usize) -> [f64; 3] {
        let n = self.n;
        let h = self.spacing();
        [(idx / (n * n)) as f64 * h, ((idx / n) % n) as f64 * h, (idx % n) as f64 * h]
    }

    /// Forward transform of real samples to Fourier coefficients (Nyquist stripped).
    pub fn forward(&self, phys: &[f64]) -> Vec<Complex64> {
        assert_eq!(phys.len(), self.n_phys(), "physical array size");
        let n = self.n;
        let nh = self.nh();
        let mut spec = vec![Complex64::new(0.0, 0.0); self.n_spec()];
        let mut row = vec![0.0; n];
        let mut out = vec![Complex64::new(0.0, 0.0); nh];
        let mut scratch = self.plans.r2c.make_scratch_vec();
        for line in 0..n * n {
            row.copy_from_slice(&phys[line * n..(line + 1) * n]);
            self.plans
                .r2c
                .process_with_scratch(&mut row, &mut out, &mut scratch)
                .expect("r2c sizes are consistent");
            spec[line * nh..(line + 1) * nh].copy_from_slice(&out);
        }
        self.complex_axes(&mut spec, true);
        let norm = 1.0 / (n * n * n) as f64;
        for c in spec.iter_mut() {
            *c *= norm;
        }
        self.strip_nyquist(&mut spec);
        spec
    }

    /// Inverse transform of Fourier coefficients to real samples.
    pub fn inverse(&self, spec: &[Complex64]) -> Vec<f64> {
        assert_eq!(spec.len(), self.n_spec(), "spectral array size");
        let n = self.n;
        let nh = self.nh();
        let mut work = spec.to_vec();
        self.complex_axes(&mut work, false);
        let mut phys = vec![0.0; self.n_phys()];
        let mut line_c = vec![Complex64::new(0.0, 0.0); nh];
        let mut line_r = vec![0.0; n];
        let mut scratch = self.plans.c2r.make_scratch_vec();
        for line in 0..n * n {
            line_c.copy_from_slice(&work[line * nh..(line + 1) * nh]);
            // A real signal has real zero and Nyquist coefficients along the
            // last axis; rounding noise there is projected away.
            line_c[0].im = 0.0;
            line_c[nh - 1].im = 0.0;
            self.plans
                .c2r
                .process_with_scratch(&mut line_c, &mut line_r, &mut scratch)
                .expect("c2r sizes are consistent");
            phys[line * n..(line + 1) * n].copy_from_slice(&line_r);
        }
        phys
    }

    /// Complex FFTs along the first two axes of the half-spectrum array.
    fn complex_axes(&self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        let nh = self.nh();
        let plan = if forward { &self.plans.fwd } else { &self.plans.inv };
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        // axis 1 (stride nh)
        for i in 0..n {
            let base = i * n * nh;
            for l in 0..nh {
                for j in 0..n {
                    buf[j] = data[base + j * nh + l];
                }
                plan.process_with_scratch(&mut buf, &mut scratch);
                for j in 0..n {
                    data[base + j * nh + l] = buf[j];
                }
            }
        }
        // axis 0 (stride n*nh)
        let stride = n * nh;
        for off in 0..stride {
            for i in 0..n {
                buf[i] = data[i * stride + off];
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for i in 0..n {
                data[i * stride + off] = buf[i];
            }
        }
    }

    /// Zero every Nyquist mode.
    pub fn strip_nyquist(&self, spec: &mut [Complex64]) {
        let n = self.n;
        let nh = self.nh();
        let h = n / 2;
        for i in 0..n {
            for j in 0..n {
                let base = (i * n + j) * nh;
                if i == h || j == h {
                    for c in &mut spec[base..base + nh] {
                        *c = Complex64::new(0.0, 0.0);
                    }
                } else {
                    spec[base + h] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Grid used for exact (zero-padded) products: the smallest even size ≥ 3n/2.
    pub fn padded(&self) -> Result<Grid3> {
        let m = (3 * self.n).div_ceil(2);
        let m = m + (m % 2);
        Grid3::with_dealias(m, self.dealias_num, self.dealias_den)
    }

    /// Copy coefficients between grids, dropping modes the target cannot hold.
    pub fn transfer(&self, spec: &[Complex64], target: &Grid3) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); target.n_spec()];
        for (idx, c) in spec.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let k = self.k_at(idx);
            if let Some(t) = target.index_of(k) {
                out[t] = *c;
            }
        }
        out
    }
}
