//! Pointwise and grid evaluation of the jets `W_(ξ)`, correctors `W^(c)_(ξ)`
//! and potentials `V_(ξ)`.
//!
//! In the frame coordinates `s₁ = c(x·ξ + μt)`, `s_A = c(x−α)·A`,
//! `s_B = c(x−α)·B` (each wrapped to `(−π, π]`, `c = n_* λ r_⊥`):
//!
//! * `W = ξ ψ_{r∥}(s₁) φ_{r⊥}(s_A, s_B)`,
//! * `V = ξ ψ_{r∥}(s₁) Φ_{r⊥}(s_A, s_B) / (n_* λ)²`,
//! * `W^(c) = ∇ψ × curl(Φξ) / (n_* λ)² = c² ψ′_{r∥}(s₁) (∂_AΦ A + ∂_BΦ B) / (n_* λ)²`,
//!
//! the last form following from `ξ × (∇Φ × ξ) = ∇Φ` for `∇Φ ⊥ ξ`. The time
//! phase `cμt` is reduced modulo `2π` before use.

use std::f64::consts::PI;

use super::params::JetParams;
use super::profiles::Profiles;
use crate::error::Result;
use crate::field::ops::curl;
use crate::field::{Grid3, SpectralScalarField, SpectralVectorField};
use crate::geometry::DirectionSet;

#[inline]
fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Values of the jet ingredients at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JetPoint {
    pub psi: f64,
    pub dpsi: f64,
    pub phi: f64,
    pub big_phi: f64,
    /// `∇_s Φ_{r⊥}` in the `(A, B)` basis.
    pub grad_big_phi: [f64; 2],
}

/// Evaluator of one direction's jet.
#[derive(Clone, Debug)]
pub struct Jet<'a> {
    pub params: &'a JetParams,
    pub profiles: &'a Profiles,
    pub xi: [f64; 3],
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub alpha: [f64; 3],
    c: f64,
}

impl<'a> Jet<'a> {
    /// Jet of the `index`-th direction of `set`.
    pub fn new(set: &DirectionSet, index: usize, params: &'a JetParams, profiles: &'a Profiles) -> Self {
        let f = &set.frames[index];
        Self {
            params,
            profiles,
            xi: f.xi_f64(),
            a: f.a_f64(),
            b: f.b_f64(),
            alpha: params.shifts[index],
            c: params.c() as f64,
        }
    }

    /// Time phase `cμt` reduced modulo `2π`.
    pub fn phase(&self, t: f64) -> f64 {
        (self.c * self.params.mu * t).rem_euclid(2.0 * PI)
    }

    /// Frame coordinates `(s₁, s_A, s_B)` of `x` at phase `phase`.
    #[inline]
    pub fn coords(&self, x: [f64; 3], phase: f64) -> [f64; 3] {
        let d = [x[0] - self.alpha[0], x[1] - self.alpha[1], x[2] - self.alpha[2]];
        let dotv = |v: &[f64; 3], w: &[f64; 3]| v[0] * w[0] + v[1] * w[1] + v[2] * w[2];
        [
            wrap(self.c * dotv(&x, &self.xi) + phase),
            wrap(self.c * dotv(&d, &self.a)),
            wrap(self.c * dotv(&d, &self.b)),
        ]
    }

    /// Profile values at `x` for the phase of time `t`.
    #[inline]
    pub fn point(&self, x: [f64; 3], phase: f64) -> JetPoint {
        let s = self.coords(x, phase);
        let p = self.profiles;
        let (rp, rl) = (self.params.r_perp, self.params.r_par);
        let y = [s[1], s[2]];
        JetPoint {
            psi: p.psi_r(s[0], rl),
            dpsi: p.dpsi_r(s[0], rl),
            phi: p.phi_r(y, rp),
            big_phi: p.big_phi_r(y, rp),
            grad_big_phi: p.grad_big_phi_r(y, rp),
        }
    }

    /// Support indicator of `φ_(ξ)` at `x`.
    pub fn in_tube(&self, x: [f64; 3]) -> bool {
        let s = self.coords(x, 0.0);
        s[1] * s[1] + s[2] * s[2] < self.params.r_perp * self.params.r_perp
    }

    /// `W(x)`.
    pub fn w(&self, x: [f64; 3], phase: f64) -> [f64; 3] {
        let j = self.point(x, phase);
        self.xi.map(|e| e * j.psi * j.phi)
    }

    /// `W^(c)(x)` from the closed form.
    pub fn wc(&self, x: [f64; 3], phase: f64) -> [f64; 3] {
        let j = self.point(x, phase);
        let s = self.params.corrector_scale() * self.c * self.c * j.dpsi;
        std::array::from_fn(|k| s * (j.grad_big_phi[0] * self.a[k] + j.grad_big_phi[1] * self.b[k]))
    }

    /// `V(x)`.
    pub fn v(&self, x: [f64; 3], phase: f64) -> [f64; 3] {
        let j = self.point(x, phase);
        let s = self.params.corrector_scale() * j.psi * j.big_phi;
        self.xi.map(|e| e * s)
    }
}

/// Grid samples of one jet at time `t`.
#[derive(Clone, Debug)]
pub struct JetFields {
    pub w: SpectralVectorField,
    /// Corrector sampled from its closed form.
    pub wc: SpectralVectorField,
    pub v: SpectralVectorField,
    /// `ψ_(ξ)² φ_(ξ)²`.
    pub psi_phi_sq: SpectralScalarField,
}

impl JetFields {
    /// Rescale so that the band-limited `W` has unit mean energy
    /// `(2π)^{−3}‖W‖² = 1`, the continuum normalization that under-resolved
    /// grids lose. Returns the applied factor.
    pub fn normalize_on_grid(&mut self) -> f64 {
        let mean = self.w.norm_l2_sq() / (2.0 * PI).powi(3);
        if !(mean > 0.0) {
            return 1.0;
        }
        let k = 1.0 / mean.sqrt();
        self.w.scale_mut(k);
        self.wc.scale_mut(k);
        self.v.scale_mut(k);
        self.psi_phi_sq.scale_mut(k * k);
        k
    }

    /// Relative distance between the sampled corrector and `curl curl V − W`
    /// (the grid's truncation error of the corrector identity).
    pub fn corrector_identity_defect(&self) -> f64 {
        let cc = &curl(&curl(&self.v)) - &self.w;
        self.wc.rel_diff(&cc)
    }
}

/// Sample `W`, `W^(c)`, `V` and `ψ²φ²` of direction `index` on a grid.
/// Fails with `UnderResolved` when `n < factor · n_* λ`.
pub fn eval_jet(
    set: &DirectionSet,
    index: usize,
    params: &JetParams,
    profiles: &Profiles,
    t: f64,
    grid: &Grid3,
    resolution_factor: f64,
) -> Result<JetFields> {
    params.check_resolution(grid.n(), resolution_factor)?;
    let jet = Jet::new(set, index, params, profiles);
    let phase = jet.phase(t);
    let np = grid.n_phys();
    let mut w: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; np]);
    let mut wc: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; np]);
    let mut v: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; np]);
    let mut pp = vec![0.0; np];
    let cs = params.corrector_scale();
    let cc = jet.c * jet.c * cs;
    for idx in 0..np {
        let j = jet.point(grid.x_at(idx), phase);
        let wv = j.psi * j.phi;
        let vv = cs * j.psi * j.big_phi;
        let g = cc * j.dpsi;
        for k in 0..3 {
            w[k][idx] = jet.xi[k] * wv;
            v[k][idx] = jet.xi[k] * vv;
            wc[k][idx] = g * (j.grad_big_phi[0] * jet.a[k] + j.grad_big_phi[1] * jet.b[k]);
        }
        pp[idx] = wv * wv;
    }
    Ok(JetFields {
        w: SpectralVectorField::from_physical(grid, &w),
        wc: SpectralVectorField::from_physical(grid, &wc),
        v: SpectralVectorField::from_physical(grid, &v),
        psi_phi_sq: SpectralScalarField::from_physical(grid, &[pp]),
    })
}
