//! Reduced ("slab") quadrature for jets at scales no 3D grid can resolve.
//!
//! The map `x ↦ (s₁, s_A, s_B)` is a linear integer covering of T³ (its
//! matrix is `c` times a rational rotation with integer `n_*`-multiple), so
//! it preserves normalized Lebesgue measure. Every torus average of a
//! separable jet quantity `F(ψ_(ξ)) G(φ_(ξ))` therefore factorizes into a 1D
//! average over the `ψ_{r∥}` support and a 2D average over the `φ_{r⊥}`
//! support. Those supports are sampled on periodic boxes of half-width `r`
//! (the integrands vanish to all orders on the box boundary, so trapezoid
//! sums and FFT derivatives are spectrally accurate at any `λ`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use rustfft::FftPlanner;
use serde::Serialize;

use super::eval::Jet;
use super::params::JetParams;
use super::profiles::{ProfileChecks, Profiles};
use crate::geometry::DirectionSet;

/// Resolution of the reduced quadrature.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SlabQuadrature {
    /// Points of the 1D `ψ` box.
    pub m1: usize,
    /// Points per axis of the 2D `φ` box.
    pub m2: usize,
}

impl Default for SlabQuadrature {
    fn default() -> Self {
        Self { m1: 512, m2: 512 }
    }
}

/// Spectral derivative of periodic samples on a box of length `len`;
/// `order` derivatives are taken along axis `axis` of an `m^dim` array.
fn spectral_derivative(data: &[f64], m: usize, dim: usize, axis: usize, order: u32, len: f64) -> Vec<f64> {
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(m);
    let inv = planner.plan_fft_inverse(m);
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let lines = data.len() / m;
    let stride = if dim == 1 || axis == 1 { 1 } else { m };
    let kappa = 2.0 * PI / len;
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for l in 0..lines {
        let base = if stride == 1 { l * m } else { l };
        for i in 0..m {
            line[i] = buf[base + i * stride];
        }
        fwd.process(&mut line);
        for (i, c) in line.iter_mut().enumerate() {
            let k = if i < m / 2 {
                i as f64
            } else if i == m / 2 {
                0.0
            } else {
                i as f64 - m as f64
            };
            *c *= Complex64::new(0.0, k * kappa).powu(order) / m as f64;
        }
        inv.process(&mut line);
        for i in 0..m {
            buf[base + i * stride] = line[i];
        }
    }
    buf.iter().map(|c| c.re).collect()
}

/// `ψ_{r∥}` and derivatives on the 1D box `[−r∥, r∥)`.
#[derive(Clone, Debug)]
pub struct Slab1 {
    pub h: f64,
    pub psi: Vec<f64>,
    pub dpsi: Vec<f64>,
    pub dpsi_spectral: Vec<f64>,
    pub ddpsi_spectral: Vec<f64>,
}

impl Slab1 {
    pub fn new(profiles: &Profiles, r_par: f64, m: usize) -> Self {
        let len = 2.0 * r_par;
        let h = len / m as f64;
        let s: Vec<f64> = (0..m).map(|i| -r_par + i as f64 * h).collect();
        let psi: Vec<f64> = s.iter().map(|&x| profiles.psi_r(x, r_par)).collect();
        let dpsi = s.iter().map(|&x| profiles.dpsi_r(x, r_par)).collect();
        let dpsi_spectral = spectral_derivative(&psi, m, 1, 0, 1, len);
        let ddpsi_spectral = spectral_derivative(&psi, m, 1, 0, 2, len);
        Self { h, psi, dpsi, dpsi_spectral, ddpsi_spectral }
    }

    /// Torus average `(1/2π)∫ f`.
    pub fn mean(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.psi.len()).map(f).sum::<f64>() * self.h / (2.0 * PI)
    }
}

/// `φ_{r⊥}`, `Φ_{r⊥}` and derivatives on the 2D box `[−r⊥, r⊥)²`.
#[derive(Clone, Debug)]
pub struct Slab2 {
    pub m: usize,
    pub h: f64,
    pub phi: Vec<f64>,
    pub big_phi: Vec<f64>,
    pub grad_big_phi: [Vec<f64>; 2],
    pub grad_big_phi_spectral: [Vec<f64>; 2],
    pub lap_big_phi_spectral: Vec<f64>,
    /// `|∇φ_{r⊥}|` (spectral).
    pub grad_phi_abs: Vec<f64>,
}

impl Slab2 {
    pub fn new(profiles: &Profiles, r_perp: f64, m: usize) -> Self {
        let len = 2.0 * r_perp;
        let h = len / m as f64;
        let node = |i: usize| -r_perp + i as f64 * h;
        let mut phi = vec![0.0; m * m];
        let mut big_phi = vec![0.0; m * m];
        let mut g0 = vec![0.0; m * m];
        let mut g1 = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let y = [node(i), node(j)];
                let k = i * m + j;
                phi[k] = profiles.phi_r(y, r_perp);
                big_phi[k] = profiles.big_phi_r(y, r_perp);
                let g = profiles.grad_big_phi_r(y, r_perp);
                g0[k] = g[0];
                g1[k] = g[1];
            }
        }
        let d0 = spectral_derivative(&big_phi, m, 2, 0, 1, len);
        let d1 = spectral_derivative(&big_phi, m, 2, 1, 1, len);
        let l0 = spectral_derivative(&big_phi, m, 2, 0, 2, len);
        let l1 = spectral_derivative(&big_phi, m, 2, 1, 2, len);
        let p0 = spectral_derivative(&phi, m, 2, 0, 1, len);
        let p1 = spectral_derivative(&phi, m, 2, 1, 1, len);
        Self {
            m,
            h,
            phi,
            big_phi,
            grad_big_phi: [g0, g1],
            grad_big_phi_spectral: [d0, d1],
            lap_big_phi_spectral: l0.iter().zip(&l1).map(|(a, b)| a + b).collect(),
            grad_phi_abs: p0.iter().zip(&p1).map(|(a, b)| (a * a + b * b).sqrt()).collect(),
        }
    }

    /// Torus average `(1/4π²)∫ f`.
    pub fn mean(&self, f: impl Fn(usize) -> f64) -> f64 {
        (0..self.phi.len()).map(f).sum::<f64>() * self.h * self.h / (4.0 * PI * PI)
    }
}

fn max_abs(v: impl Iterator<Item = f64>) -> f64 {
    v.fold(0.0, |m, x| m.max(x.abs()))
}

/// Identity checks of one jet family by reduced quadrature.
#[derive(Clone, Debug, Serialize)]
pub struct JetIdentityReport {
    pub lambda: f64,
    pub r_perp: f64,
    pub r_par: f64,
    pub mu: f64,
    pub quadrature: SlabQuadrature,
    pub profiles: ProfileChecks,
    /// Largest entry of `(2π)^{−3}∫W⊗W − ξ⊗ξ` over all directions.
    pub mean_ww_error: f64,
    /// `max|div(W+W^(c))| / max|div W|`.
    pub div_residual: f64,
    /// `max|curl curl V − W − W^(c)| / max|W|` (spectral derivatives of `V`).
    pub curlcurl_residual: f64,
    /// Smallest family clearance (≥ 1 means disjoint supports).
    pub min_clearance: f64,
    pub disjoint: bool,
    /// Largest `|W_(ξ)·W_(ξ′)|` over sampled points inside every tube.
    pub sampled_overlap_max: f64,
    /// Overlap integral implied by the clearance certificate (0 iff disjoint).
    pub overlap_integral: f64,
}

/// Run all jet identities for `params` with reduced quadrature.
pub fn check_jet_identities(
    set: &DirectionSet,
    params: &JetParams,
    profiles: &Profiles,
    quad: SlabQuadrature,
    overlap_samples: usize,
) -> JetIdentityReport {
    let s1 = Slab1::new(profiles, params.r_par, quad.m1);
    let s2 = Slab2::new(profiles, params.r_perp, quad.m2);
    let psi_sq = s1.mean(|i| s1.psi[i] * s1.psi[i]);
    let phi_sq = s2.mean(|k| s2.phi[k] * s2.phi[k]);
    let mut mean_ww_error: f64 = 0.0;
    for xi in set.directions() {
        for a in 0..3 {
            for b in 0..3 {
                mean_ww_error = mean_ww_error.max((xi[a] * xi[b] * psi_sq * phi_sq - xi[a] * xi[b]).abs());
            }
        }
    }
    // div(W + W^(c)) = c ψ′_{r∥}(s₁) [φ_{r⊥} + r⊥² Δ_sΦ_{r⊥}](s_⊥)
    let r2 = params.r_perp * params.r_perp;
    let bracket = max_abs((0..s2.phi.len()).map(|k| s2.phi[k] + r2 * s2.lap_big_phi_spectral[k]));
    let div_residual = bracket / max_abs(s2.phi.iter().copied());
    // curl curl V = r⊥² [ψ′ ∇_sΦ − ξ ψ Δ_sΦ] (spectral Φ derivatives and ψ′)
    // against W + W^(c) = ξ ψ φ + r⊥² ψ′ ∇_sΦ (closed forms).
    let max_psi = max_abs(s1.psi.iter().copied());
    let max_dpsi = max_abs(s1.dpsi.iter().copied());
    let along = max_psi * bracket;
    let dpsi_err = max_abs((0..s1.psi.len()).map(|i| s1.dpsi_spectral[i] - s1.dpsi[i]));
    let grad_max = max_abs(s2.grad_big_phi[0].iter().chain(&s2.grad_big_phi[1]).copied());
    let grad_err = max_abs(
        (0..s2.phi.len()).flat_map(|k| {
            [s2.grad_big_phi_spectral[0][k] - s2.grad_big_phi[0][k], s2.grad_big_phi_spectral[1][k] - s2.grad_big_phi[1][k]]
        }),
    );
    let across = r2 * (dpsi_err * grad_max + max_dpsi * grad_err);
    let curlcurl_residual = (along + across) / (max_psi * max_abs(s2.phi.iter().copied()));
    let sampled_overlap_max = sample_overlap(set, params, profiles, overlap_samples);
    JetIdentityReport {
        lambda: params.lambda,
        r_perp: params.r_perp,
        r_par: params.r_par,
        mu: params.mu,
        quadrature: quad,
        profiles: profiles.checks(quad.m2.max(quad.m1)),
        mean_ww_error,
        div_residual,
        curlcurl_residual,
        min_clearance: params.min_clearance,
        disjoint: params.disjoint,
        sampled_overlap_max,
        overlap_integral: if params.disjoint { 0.0 } else { f64::NAN },
    }
}

/// Largest `|W_(ξ)·W_(ξ′)|` at random points inside each family's tubes.
pub fn sample_overlap(set: &DirectionSet, params: &JetParams, profiles: &Profiles, samples: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let unit = Uniform::new(0.0f64, 1.0).expect("valid range");
    let c = params.c() as f64;
    let lattice = params.c() * set.n_star;
    let jets: Vec<Jet> = (0..set.len()).map(|i| Jet::new(set, i, params, profiles)).collect();
    let mut worst: f64 = 0.0;
    for (i, ji) in jets.iter().enumerate() {
        for _ in 0..samples {
            let rad = params.r_perp * 0.999 * unit.sample(&mut rng).sqrt();
            let ang = 2.0 * PI * unit.sample(&mut rng);
            let s = [2.0 * PI * unit.sample(&mut rng) - PI, rad * ang.cos(), rad * ang.sin()];
            let m: [f64; 3] =
                std::array::from_fn(|_| (unit.sample(&mut rng) * lattice as f64).floor());
            let x: [f64; 3] = std::array::from_fn(|k| {
                let local = (s[0] * ji.xi[k] + s[1] * ji.a[k] + s[2] * ji.b[k]) / c;
                let lat = 2.0 * PI / c * (m[0] * ji.xi[k] + m[1] * ji.a[k] + m[2] * ji.b[k]);
                (ji.alpha[k] + local + lat).rem_euclid(2.0 * PI)
            });
            let wi = ji.w(x, 0.0);
            for (j, jj) in jets.iter().enumerate() {
                if j == i {
                    continue;
                }
                let wj = jj.w(x, 0.0);
                worst = worst.max((wi[0] * wj[0] + wi[1] * wj[1] + wi[2] * wj[2]).abs());
            }
        }
    }
    worst
}

/// One line of the bounds table.
#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub quantity: String,
    pub p: String,
    pub n: u32,
    pub m: u32,
    pub values: Vec<f64>,
    pub predicted: Vec<f64>,
    pub ratios: Vec<f64>,
    /// `max ratio / min ratio` across `λ`.
    pub spread: f64,
    pub within_factor_2: bool,
}

/// Ratio tables of measured norms against the predicted scalings.
#[derive(Clone, Debug, Serialize)]
pub struct JetBoundsReport {
    pub lambdas: Vec<f64>,
    pub rows: Vec<BoundRow>,
    pub all_within_factor_2: bool,
}

const PS: [f64; 3] = [1.0, 2.0, f64::INFINITY];

fn p_label(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

/// `(avg |f|^p)^{1/p}` or `max |f|`.
fn mean_p(values: impl Iterator<Item = f64>, weight: f64, p: f64) -> f64 {
    if p.is_infinite() {
        max_abs(values)
    } else {
        (values.map(|v| v.abs().powf(p)).sum::<f64>() * weight).powf(1.0 / p)
    }
}

/// Torus `L^p` norms of `√(f₁²g₁² + f₂²g₂²)` for `p ∈ {1, 2, ∞}`.
fn product_norms(s1: &Slab1, s2: &Slab2, f: [&[f64]; 2], g: [&[f64]; 2]) -> [f64; 3] {
    let w1 = s1.h / (2.0 * PI);
    let w2 = s2.h * s2.h / (4.0 * PI * PI);
    let (mut l1, mut l2, mut linf) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..f[0].len() {
        let (a, b) = (f[0][i] * f[0][i], f[1][i] * f[1][i]);
        if a == 0.0 && b == 0.0 {
            continue;
        }
        let mut row1 = 0.0;
        for k in 0..g[0].len() {
            let v = (a * g[0][k] * g[0][k] + b * g[1][k] * g[1][k]).sqrt();
            row1 += v;
            linf = linf.max(v);
        }
        l1 += row1;
        let row2: f64 = (0..g[0].len()).map(|k| g[0][k] * g[0][k]).sum::<f64>() * a
            + (0..g[1].len()).map(|k| g[1][k] * g[1][k]).sum::<f64>() * b;
        l2 += row2;
    }
    let vol = (2.0 * PI).powi(3);
    [vol * l1 * w1 * w2, (vol * l2 * w1 * w2).sqrt(), linf]
}

/// Measure `‖∇^N ∂_t^M ψ_(ξ)‖`, `‖∇^N φ_(ξ)‖`, `‖∇^N ∂_t^M W_(ξ)‖` in `L^p`,
/// `p ∈ {1, 2, ∞}`, `N, M ∈ {0, 1}`, for each parameter set, and compare
/// with the predicted scalings.
pub fn check_jet_bounds(params_list: &[JetParams], profiles: &Profiles, quad: SlabQuadrature) -> JetBoundsReport {
    struct Measured {
        key: (String, usize, u32, u32),
        value: f64,
        predicted: f64,
    }
    let mut all: Vec<Vec<Measured>> = Vec::new();
    for prm in params_list {
        let s1 = Slab1::new(profiles, prm.r_par, quad.m1);
        let s2 = Slab2::new(profiles, prm.r_perp, quad.m2);
        let c = prm.c() as f64;
        let (rp, rl, lam, mu) = (prm.r_perp, prm.r_par, prm.lambda, prm.mu);
        let w1 = s1.h / (2.0 * PI);
        let w2 = s2.h * s2.h / (4.0 * PI * PI);
        let mut out = Vec::new();
        let dpsi = &s1.dpsi;
        let ddpsi = &s1.ddpsi_spectral;
        for (pi, &p) in PS.iter().enumerate() {
            let vol = if p.is_infinite() { 1.0 } else { (2.0 * PI).powf(3.0 / p) };
            let m1 = |v: &[f64]| mean_p(v.iter().copied(), w1, p);
            let m2 = |v: &[f64]| mean_p(v.iter().copied(), w2, p);
            let psi_pred = |n: i32, m: i32| {
                rl.powf(1.0 / p - 0.5) * (rp * lam / rl).powi(n) * (rp * lam * mu / rl).powi(m)
            };
            let phi_pred = |n: i32| rp.powf(2.0 / p - 1.0) * lam.powi(n);
            let w_pred = |n: i32, m: i32| {
                rp.powf(2.0 / p - 1.0) * rl.powf(1.0 / p - 0.5) * lam.powi(n) * (rp * lam * mu / rl).powi(m)
            };
            let mut push = |q: &str, n: u32, m: u32, value: f64, predicted: f64| {
                out.push(Measured { key: (q.to_string(), pi, n, m), value, predicted })
            };
            push("psi", 0, 0, vol * m1(&s1.psi), psi_pred(0, 0));
            push("psi", 1, 0, vol * c * m1(dpsi), psi_pred(1, 0));
            push("psi", 0, 1, vol * c * mu * m1(dpsi), psi_pred(0, 1));
            push("psi", 1, 1, vol * c * c * mu * m1(ddpsi), psi_pred(1, 1));
            push("phi", 0, 0, vol * m2(&s2.phi), phi_pred(0));
            push("phi", 1, 0, vol * c * m2(&s2.grad_phi_abs), phi_pred(1));
            push("W", 0, 0, vol * m1(&s1.psi) * m2(&s2.phi), w_pred(0, 0));
            push("W", 0, 1, vol * c * mu * m1(dpsi) * m2(&s2.phi), w_pred(0, 1));
        }
        // Non-separable gradients: |∇W| = c√(ψ′²φ² + ψ²|∇φ|²),
        // |∇∂_tW| = c²μ√(ψ″²φ² + ψ′²|∇φ|²).
        let grad_w = product_norms(&s1, &s2, [dpsi, &s1.psi], [&s2.phi, &s2.grad_phi_abs]);
        let grad_wt = product_norms(&s1, &s2, [ddpsi, dpsi], [&s2.phi, &s2.grad_phi_abs]);
        for (pi, &p) in PS.iter().enumerate() {
            let w_pred = |n: i32, m: i32| {
                rp.powf(2.0 / p - 1.0) * rl.powf(1.0 / p - 0.5) * lam.powi(n) * (rp * lam * mu / rl).powi(m)
            };
            out.push(Measured { key: ("W".into(), pi, 1, 0), value: c * grad_w[pi], predicted: w_pred(1, 0) });
            out.push(Measured {
                key: ("W".into(), pi, 1, 1),
                value: c * c * mu * grad_wt[pi],
                predicted: w_pred(1, 1),
            });
        }
        all.push(out);
    }
    let mut rows = Vec::new();
    if let Some(first) = all.first() {
        for (idx, m) in first.iter().enumerate() {
            let values: Vec<f64> = all.iter().map(|v| v[idx].value).collect();
            let predicted: Vec<f64> = all.iter().map(|v| v[idx].predicted).collect();
            let ratios: Vec<f64> = values.iter().zip(&predicted).map(|(v, p)| v / p).collect();
            let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
            let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
            let spread = hi / lo;
            rows.push(BoundRow {
                quantity: m.key.0.clone(),
                p: p_label(PS[m.key.1]),
                n: m.key.2,
                m: m.key.3,
                values,
                predicted,
                ratios,
                spread,
                within_factor_2: spread <= 2.0,
            });
        }
    }
    rows.sort_by(|a, b| (&a.quantity, &a.p, a.n, a.m).cmp(&(&b.quantity, &b.p, b.n, b.m)));
    JetBoundsReport {
        lambdas: params_list.iter().map(|p| p.lambda).collect(),
        all_within_factor_2: rows.iter().all(|r| r.within_factor_2),
        rows,
    }
}
