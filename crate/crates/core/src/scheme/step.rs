//! The level step `q → q+1`, streamed over the time samples of the window.
//!
//! Output sample `i` sits at input index `i + m` (`m` = steps of the causal
//! time mollifier) and depends on inputs `i..=i+m` only. Per sample the step
//! runs mollify → ρ/γ → amplitudes → perturbation → `v_{q+1}` → stress, and
//! evaluates the residual of the level-`(q+1)` system against the assembled
//! stress. Time derivatives are backward differences, so the discrete system
//! holds from the second output sample on.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::params::{EnergyProfile, ParamSet, Regime};
use super::source::{InputSample, LevelSource, NoisePath, RULE};
use super::{chi, VariantB};
use crate::error::{Result, WnsError};
use crate::field::ops::{
    curl, divergence_tensor, inv_divergence, laplacian, leray_project, traceless_from_samples,
};
use crate::field::{
    norm, spectral_filter, traceless_product_with, Filter, Grid3, NormKind, SpaceMollifier,
    SpectralScalarField, SpectralVectorField, SymmetricTensorField, TimeMollifier, TimeTrajectory,
};
use crate::geometry::DirectionSet;
use crate::jets::{Jet, JetParams, Profiles};
use crate::noise::Variant;

/// Factor `c_ρ` in front of `√(ℓ² + |R̊_ℓ|²)`: `max(2, 1/radius_eff)`, which
/// keeps `|R̊_ℓ/ρ| ≤ radius_eff` at every point.
pub fn rho_factor(set: &DirectionSet) -> f64 {
    (1.0 / set.radius_eff).max(2.0)
}

/// Everything a level step needs besides the level-`q` data.
#[derive(Clone, Copy, Debug)]
pub struct StepConfig<'a> {
    pub variant: Variant,
    pub params: &'a ParamSet,
    /// Prescribed energy (variant A).
    pub profile: Option<&'a EnergyProfile>,
    /// Variant-B constants.
    pub b: Option<&'a VariantB>,
    pub set: &'a DirectionSet,
    pub jets: &'a JetParams,
    pub profiles: &'a Profiles,
    /// Resolution rule factor: the grid must satisfy `n ≥ factor · n_* λ`.
    pub resolution_factor: f64,
    pub noise: &'a NoisePath,
    /// Keep `v_{q+1}`, `R̊_{q+1}` in memory (needed for a further step).
    pub store: bool,
    /// Keep every stress part as a field trajectory.
    pub store_stress: bool,
    /// Stop after this many output samples.
    pub max_outputs: Option<usize>,
}

/// The parts of the new Reynolds stress (generic over field or norm).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StressParts<T> {
    pub r_lin: T,
    pub r_cor: T,
    /// Oscillation stress assembled directly (enters the sum).
    pub r_osc: T,
    /// Analytic split of the oscillation stress (reported only).
    pub r_osc_x: T,
    pub r_osc_t: T,
    pub r_com: T,
    pub r_com1: T,
    /// Variant B: `R[χ′ (w^(p)+w^(c)) + (χ²)′ w^(t)]`.
    pub r_cut: T,
    /// Variant B: `(1 − χ²) R̊_ℓ`, the part of the mollified stress not
    /// cancelled while the cut-off is off.
    pub r_rem: T,
}

impl StressParts<SymmetricTensorField> {
    /// The summed stress `R̊_{q+1}` (the analytic split is excluded).
    pub fn total(&self) -> SymmetricTensorField {
        let mut s = self.r_lin.clone();
        for p in [&self.r_cor, &self.r_osc, &self.r_com, &self.r_com1, &self.r_cut, &self.r_rem] {
            s.axpy(1.0, p);
        }
        s
    }

    /// `L¹` norm of every part.
    pub fn l1_norms(&self) -> Result<StressParts<f64>> {
        let l1 = |f: &SymmetricTensorField| norm(f, &NormKind::Lp(1.0));
        Ok(StressParts {
            r_lin: l1(&self.r_lin)?,
            r_cor: l1(&self.r_cor)?,
            r_osc: l1(&self.r_osc)?,
            r_osc_x: l1(&self.r_osc_x)?,
            r_osc_t: l1(&self.r_osc_t)?,
            r_com: l1(&self.r_com)?,
            r_com1: l1(&self.r_com1)?,
            r_cut: l1(&self.r_cut)?,
            r_rem: l1(&self.r_rem)?,
        })
    }

    /// Largest spatial mean over the parts (each is mean-free).
    pub fn max_mean(&self) -> f64 {
        [&self.r_lin, &self.r_cor, &self.r_osc, &self.r_osc_x, &self.r_osc_t, &self.r_com, &self.r_com1, &self.r_cut, &self.r_rem]
            .iter()
            .map(|f| f.mean_abs())
            .fold(0.0, f64::max)
    }
}

/// Diagnostics of one output sample of a level step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    /// New level `q+1`.
    pub level: u32,
    pub t: f64,
    /// Cut-off value `χ(t)` (1 for variant A).
    pub chi: f64,
    /// `e(t)` (variant A).
    pub e: Option<f64>,
    /// `‖v_{q+1} + z_{q+1}‖²`.
    pub energy: f64,
    /// `‖v_q + z_q‖²` at the same time.
    pub energy_prev: f64,
    /// `e − ‖v_{q+1}+z_{q+1}‖²` (variant A).
    pub gap: Option<f64>,
    /// `δE = |e(1−δ_{q+2}) − ‖v_{q+1}+z_{q+1}‖²|` (variant A).
    pub delta_e: Option<f64>,
    pub v_norm: f64,
    pub v_prev_norm: f64,
    /// `‖v_{q+1} − v_q‖_{L²}`.
    pub v_increment: f64,
    /// `‖v_{q+1} − v_q‖_{W^{1/2,31/30}}`.
    pub v_increment_w: f64,
    /// `‖v_{q+1}‖_{C¹_x} + ‖D_t v_{q+1}‖_{L^∞}` (from the second sample on).
    pub v_c1: Option<f64>,
    /// `‖R̊_q‖_{L¹}` at the same time.
    pub r_prev_l1: f64,
    /// `sup_{s∈[t−ℓ,t]} ‖R̊_q(s)‖_{L¹}` over the mollifier's input samples.
    pub r_prev_sup: f64,
    /// `‖R̊_{q+1}‖_{L¹}`.
    pub r_l1: f64,
    pub parts_l1: StressParts<f64>,
    /// `‖R̊_osc − χ²(R̊_osc^(x) + R̊_osc^(t))‖_{L¹}`.
    pub osc_split_defect: f64,
    /// Relative residual of the level-`(q+1)` system (from the second sample on).
    pub residual: Option<f64>,
    /// `div(w^(p) + w^(c))` spectral residual relative to the field size.
    pub div_wpc: f64,
    pub div_v: f64,
    pub mean_v: f64,
    /// Raw pumping `γ_ℓ` (variant A) or `γ_{q+1}/(2π)³` (variant B).
    pub gamma: f64,
    pub gamma_clamped: bool,
    /// Mean of `ρ` over the torus.
    pub rho_mean: f64,
    /// `max_x |R̊_ℓ/ρ|_F` (must stay within the ball radius).
    pub max_ratio: f64,
    pub wp_norm: f64,
    pub wc_norm: f64,
    pub wt_norm: f64,
    /// Grid normalization factors of the six jets.
    pub jet_factor_max: f64,
}

/// Summary of a level step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub from: u32,
    pub to: u32,
    pub grid_n: usize,
    pub dt: f64,
    pub ell: f64,
    pub mollifier_steps: usize,
    pub c_rho: f64,
    pub t_first: f64,
    pub t_last: f64,
    pub outputs: usize,
    pub residual_max: f64,
    pub div_max: f64,
    pub stress_mean_max: f64,
    pub gamma_clamped: usize,
    pub max_ratio: f64,
}

/// Output of a level step.
#[derive(Clone, Debug)]
pub struct LevelOutput {
    pub rows: Vec<SampleRow>,
    pub summary: LevelSummary,
    /// `v_{q+1}` (if stored).
    pub v: Option<TimeTrajectory<SpectralVectorField>>,
    /// `R̊_{q+1}` (if stored).
    pub r: Option<TimeTrajectory<SymmetricTensorField>>,
    /// Stress parts (if stored).
    pub stress: Option<Vec<StressParts<SymmetricTensorField>>>,
}

struct Buffered {
    index: usize,
    sample: InputSample,
    /// `(v_q + z_q) ⊗̊ (v_q + z_q)`.
    product: SymmetricTensorField,
    /// Variant A: `γ_q(t_j)`.
    gamma: f64,
    energy: f64,
    r_l1: f64,
}

/// Frobenius norm of a symmetric tensor given by its six samples.
#[inline]
fn frob(r: &[f64; 6]) -> f64 {
    (r[0] * r[0] + r[3] * r[3] + r[5] * r[5] + 2.0 * (r[1] * r[1] + r[2] * r[2] + r[4] * r[4])).sqrt()
}

fn sym_matrix(r: &[f64; 6]) -> [[f64; 3]; 3] {
    // component order (00, 01, 02, 11, 12, 22)
    [[r[0], r[1], r[2]], [r[1], r[3], r[4]], [r[2], r[4], r[5]]]
}

fn phys_sum(a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
    std::array::from_fn(|c| a[c].iter().zip(&b[c]).map(|(x, y)| x + y).collect())
}

fn product(grid: &Grid3, f: &[Vec<f64>; 3], g: &[Vec<f64>; 3]) -> SymmetricTensorField {
    traceless_from_samples(grid, grid, f, g, RULE)
}

fn time_derivative(now: &SpectralVectorField, prev: Option<&SpectralVectorField>, dt: f64) -> SpectralVectorField {
    match prev {
        Some(p) => (now - p).scale(1.0 / dt),
        None => SpectralVectorField::zeros(now.grid()),
    }
}

/// Run the step `q → q+1` on the level data `src`.
pub fn step_level(cfg: &StepConfig<'_>, src: &dyn LevelSource) -> Result<LevelOutput> {
    let q = src.q();
    let grid = src.grid().clone();
    let dt = src.dt();
    let p = cfg.params;
    cfg.jets.check_resolution(grid.n(), cfg.resolution_factor)?;
    match cfg.variant {
        Variant::A if cfg.profile.is_none() => {
            return Err(WnsError::InvalidParams("variant A needs an energy profile".into()))
        }
        Variant::B if cfg.b.is_none() => {
            return Err(WnsError::InvalidParams("variant B needs L, N, K".into()))
        }
        _ => {}
    }
    let ell = p.ell(q);
    let tm = TimeMollifier::new(ell, dt)?;
    let sm = SpaceMollifier::new(ell);
    let m = tm.steps();
    if src.len() < m + 2 {
        return Err(WnsError::WindowTooShort(format!(
            "{} samples cannot feed a mollifier of {m} steps",
            src.len()
        )));
    }
    let mut n_out = src.len() - m;
    if let Some(k) = cfg.max_outputs {
        n_out = n_out.min(k);
    }
    let c_rho = rho_factor(cfg.set);
    let vol = (2.0 * PI).powi(3);
    let delta_next2 = p.delta(q + 2);
    let f_next = p.cutoff(q + 1);
    let np = grid.n_phys();
    let xs: Vec<[f64; 3]> = (0..np).map(|i| grid.x_at(i)).collect();
    let jets: Vec<Jet<'_>> = (0..cfg.set.len()).map(|i| Jet::new(cfg.set, i, cfg.jets, cfg.profiles)).collect();
    let dirs = cfg.set.directions();
    let cs = cfg.jets.corrector_scale();
    let mu = cfg.jets.mu;

    let mut ring: VecDeque<Buffered> = VecDeque::with_capacity(m + 1);
    let mut next_input = 0usize;
    let mut rows = Vec::with_capacity(n_out);
    let mut stored_v = Vec::new();
    let mut stored_r = Vec::new();
    let mut stored_stress = Vec::new();
    // history of the previous output sample
    let mut prev_wpc: Option<SpectralVectorField> = None;
    let mut prev_wt: Option<SpectralVectorField> = None;
    let mut prev_v: Option<SpectralVectorField> = None;
    let mut prev_a2: Option<Vec<Vec<f64>>> = None;
    let (mut residual_max, mut div_max, mut mean_max, mut clamped, mut ratio_max) = (0.0f64, 0.0f64, 0.0f64, 0usize, 0.0f64);

    for i in 0..n_out {
        while next_input <= i + m {
            let sample = src.sample(next_input)?;
            let u = &sample.v + &sample.z;
            let product = traceless_product_with(&u, &u, RULE)?;
            let energy = u.norm_l2_sq();
            let gamma = match cfg.profile {
                Some(e) if cfg.variant == Variant::A => {
                    (e.e(src.time(next_input)) * (1.0 - delta_next2) - energy) / (3.0 * vol)
                }
                _ => 0.0,
            };
            let r_l1 = norm(&sample.r, &NormKind::Lp(1.0))?;
            ring.push_back(Buffered { index: next_input, sample, product, gamma, energy, r_l1 });
            next_input += 1;
        }
        while ring.front().is_some_and(|b| b.index < i) {
            ring.pop_front();
        }
        let t = src.time(i + m);
        let at = |lag: usize| &ring[ring.len() - 1 - lag];

        // ---- mollification (causal in time, radial in space)
        let mut v_acc = SpectralVectorField::zeros(&grid);
        let mut z_acc = SpectralVectorField::zeros(&grid);
        let mut r_acc = SymmetricTensorField::zeros(&grid);
        let mut m_acc = SymmetricTensorField::zeros(&grid);
        let mut gamma_l = 0.0;
        for (lag, w) in tm.weights().iter().enumerate() {
            let b = at(lag);
            v_acc.axpy(*w, &b.sample.v);
            z_acc.axpy(*w, &b.sample.z);
            r_acc.axpy(*w, &b.sample.r);
            m_acc.axpy(*w, &b.product);
            gamma_l += w * b.gamma;
        }
        let vl = sm.apply(&v_acc);
        let zl = sm.apply(&z_acc);
        let rl = sm.apply(&r_acc);
        let ml = sm.apply(&m_acc);
        let current = at(0);

        // ---- energy pumping
        let chi_now = chi(cfg.variant, q, t);
        let chi_prev = chi(cfg.variant, q, t - dt);
        let mut gamma_clamped = false;
        let gamma_term = match cfg.variant {
            Variant::A => {
                if gamma_l < 0.0 {
                    if p.regime == Regime::Paper && gamma_l < -1e-12 {
                        return Err(WnsError::NegativePumping(gamma_l));
                    }
                    gamma_clamped = true;
                    clamped += 1;
                    0.0
                } else {
                    gamma_l
                }
            }
            Variant::B => ParamSet::gamma_b(q + 1, cfg.b.map_or(1.0, |b| b.k)) / vol,
        };

        // ---- ρ and amplitudes (pointwise)
        let rphys = rl.to_physical();
        let nd = dirs.len();
        let mut amp: Vec<Vec<f64>> = vec![vec![0.0; np]; nd];
        let (mut rho_sum, mut ratio) = (0.0, 0.0f64);
        for x in 0..np {
            let r: [f64; 6] = std::array::from_fn(|c| rphys[c][x]);
            let fr = frob(&r);
            let rho = c_rho * (ell * ell + fr * fr).sqrt() + gamma_term;
            rho_sum += rho;
            ratio = ratio.max(fr / rho);
            let mut mtx = sym_matrix(&r);
            for (a, row) in mtx.iter_mut().enumerate() {
                for (b, e) in row.iter_mut().enumerate() {
                    *e = if a == b { 1.0 } else { 0.0 } - *e / rho;
                }
            }
            let g2 = cfg.set.gamma_sq_unchecked(&mtx);
            let sr = rho.sqrt();
            for (k, g) in g2.iter().enumerate() {
                amp[k][x] = sr * g.max(0.0).sqrt();
            }
        }
        ratio_max = ratio_max.max(ratio);
        if ratio > cfg.set.radius_eff * (1.0 + 1e-9) {
            return Err(WnsError::OutOfBall { dist: ratio, radius: cfg.set.radius_eff });
        }

        // ---- perturbation
        let active = chi_now > 0.0;
        let mut wp_phys: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; np]);
        let mut av_phys: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; np]);
        let mut at_phys: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; np]);
        let mut ox_phys: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; np]);
        let mut ot_phys: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; np]);
        let mut a2_all: Vec<Vec<f64>> = Vec::with_capacity(nd);
        let mut jet_factor_max = 0.0f64;
        if active {
            let mut wv = vec![0.0; np];
            let mut vv = vec![0.0; np];
            for (k, jet) in jets.iter().enumerate() {
                let phase = jet.phase(t);
                for x in 0..np {
                    let pt = jet.point(xs[x], phase);
                    wv[x] = pt.psi * pt.phi;
                    vv[x] = cs * pt.psi * pt.big_phi;
                }
                // grid normalization: unit mean energy of the band-limited jet
                let energy = SpectralScalarField::from_physical(&grid, &[wv.clone()]).norm_l2_sq() / vol;
                let kappa = if energy > 0.0 { energy.sqrt().recip() } else { 1.0 };
                jet_factor_max = jet_factor_max.max(kappa);
                let xi = dirs[k];
                let a2: Vec<f64> = amp[k].iter().map(|a| a * a).collect();
                let mut s = vec![0.0; np];
                for x in 0..np {
                    let a = amp[k][x];
                    let wk = kappa * wv[x];
                    s[x] = wk * wk;
                    for c in 0..3 {
                        wp_phys[c][x] += a * wk * xi[c];
                        av_phys[c][x] += a * kappa * vv[x] * xi[c];
                        at_phys[c][x] += a2[x] * s[x] * xi[c];
                    }
                }
                // analytic split of the oscillation stress (reported only)
                let s_mean = s.iter().sum::<f64>() / np as f64;
                let a2s = SpectralScalarField::from_physical(&grid, std::array::from_ref(&a2));
                let dxi = a2s
                    .map_modes(|kk, u| {
                        let d = kk[0] as f64 * xi[0] + kk[1] as f64 * xi[1] + kk[2] as f64 * xi[2];
                        [num_complex::Complex64::new(0.0, d) * u[0]]
                    })
                    .to_physical();
                let a2_prev = prev_a2.as_ref().map(|v| &v[k]);
                for x in 0..np {
                    let osc = dxi[0][x] * (s[x] - s_mean);
                    let da2 = a2_prev.map_or(0.0, |pv| (a2[x] - pv[x]) / dt);
                    for c in 0..3 {
                        ox_phys[c][x] += osc * xi[c];
                        ot_phys[c][x] += da2 * s[x] * xi[c];
                    }
                }
                a2_all.push(a2);
            }
        }
        let wp = SpectralVectorField::from_physical(&grid, &wp_phys);
        let wpc = curl(&curl(&SpectralVectorField::from_physical(&grid, &av_phys)));
        let wt = leray_project(&spectral_filter(&SpectralVectorField::from_physical(&grid, &at_phys), Filter::Neq0))
            .scale(-1.0 / mu);
        let wc = &wpc - &wp;
        let div_wpc = crate::field::ops::divergence(&wpc).max_coeff() / wpc.max_coeff().max(f64::MIN_POSITIVE);
        let (c1, c2) = (chi_now, chi_now * chi_now);
        let w = &wpc.scale(c1) + &wt.scale(c2);
        let wp_s = wp.scale(c1);
        let wr_s = &wc.scale(c1) + &wt.scale(c2);
        let v_next = &vl + &w;

        // ---- stress assembly
        let z_next = cfg.noise.z_at(t, f_next, &grid)?;
        let vzl = &vl + &zl;
        let u_next = &v_next + &z_next;
        let vzl_p = vzl.to_physical();
        let wp_p = wp_s.to_physical();
        let wr_p = wr_s.to_physical();
        let w_p = phys_sum(&wp_p, &wr_p);
        let u_p = u_next.to_physical();
        let vnz_p = phys_sum(&v_next.to_physical(), &zl.to_physical());

        let dt_wpc = time_derivative(&wpc, prev_wpc.as_ref(), dt);
        let dt_wt = time_derivative(&wt, prev_wt.as_ref(), dt);
        let lin_src = &dt_wpc.scale(c1) - &laplacian(&w);
        let mut r_lin = inv_divergence(&lin_src)?;
        r_lin.axpy(2.0, &product(&grid, &vzl_p, &w_p));
        let mut r_cor = product(&grid, &wr_p, &w_p);
        r_cor.axpy(1.0, &product(&grid, &wp_p, &wr_p));
        let unscaled_wp = if c2 > 0.0 { wp.to_physical() } else { std::array::from_fn(|_| vec![0.0; np]) };
        let mut osc_in = product(&grid, &unscaled_wp, &unscaled_wp);
        osc_in.axpy(1.0, &rl);
        let osc_vec = &divergence_tensor(&osc_in) + &dt_wt;
        let r_osc = inv_divergence(&spectral_filter(&leray_project(&osc_vec), Filter::Neq0))?.scale(c2);
        let r_osc_x = inv_divergence(&spectral_filter(&SpectralVectorField::from_physical(&grid, &ox_phys), Filter::Neq0))?;
        let r_osc_t = inv_divergence(&spectral_filter(&SpectralVectorField::from_physical(&grid, &ot_phys), Filter::Neq0))?
            .scale(-1.0 / mu);
        let r_com = &product(&grid, &vzl_p, &vzl_p) - &ml;
        let uu = product(&grid, &u_p, &u_p);
        let r_com1 = &uu - &product(&grid, &vnz_p, &vnz_p);
        let (r_cut, r_rem) = if cfg.variant == Variant::B {
            let d_chi = (chi_now - chi_prev) / dt;
            let d_chi2 = (chi_now * chi_now - chi_prev * chi_prev) / dt;
            let mut cut = SpectralVectorField::zeros(&grid);
            if let (Some(pw), Some(pt)) = (&prev_wpc, &prev_wt) {
                cut.axpy(d_chi, pw);
                cut.axpy(d_chi2, pt);
            }
            (inv_divergence(&cut)?, rl.scale(1.0 - c2))
        } else {
            (SymmetricTensorField::zeros(&grid), SymmetricTensorField::zeros(&grid))
        };
        let parts = StressParts { r_lin, r_cor, r_osc, r_osc_x, r_osc_t, r_com, r_com1, r_cut, r_rem };
        let r_next = parts.total();

        // ---- residual of the level-(q+1) system
        let residual = match &prev_v {
            Some(pv) => {
                let dtv = (&v_next - pv).scale(1.0 / dt);
                let lap = laplacian(&v_next);
                let nl = leray_project(&divergence_tensor(&uu));
                let st = leray_project(&divergence_tensor(&r_next));
                let res = &(&(&dtv - &lap) + &nl) - &st;
                let scale = [dtv.norm_l2(), lap.norm_l2(), nl.norm_l2(), st.norm_l2()]
                    .into_iter()
                    .fold(0.0, f64::max)
                    .max(f64::MIN_POSITIVE);
                Some(res.norm_l2() / scale)
            }
            None => None,
        };
        let v_c1 = match &prev_v {
            Some(pv) => Some(
                norm(&v_next, &NormKind::CN(1))?
                    + norm(&(&v_next - pv).scale(1.0 / dt), &NormKind::Lp(f64::INFINITY))?,
            ),
            None => None,
        };
        if let Some(r) = residual {
            residual_max = residual_max.max(r);
        }
        let div_v = v_next.divergence_defect();
        div_max = div_max.max(div_v);
        mean_max = mean_max.max(parts.max_mean());

        let increment = &v_next - &current.sample.v;
        let parts_l1 = parts.l1_norms()?;
        let osc_split =
            &parts.r_osc - &(&parts.r_osc_x + &parts.r_osc_t).scale(c2);
        let energy = u_next.norm_l2_sq();
        let (e, gap, delta_e) = match cfg.profile {
            Some(prof) if cfg.variant == Variant::A => {
                let e = prof.e(t);
                (Some(e), Some(e - energy), Some((e * (1.0 - delta_next2) - energy).abs()))
            }
            _ => (None, None, None),
        };
        rows.push(SampleRow {
            level: q + 1,
            t,
            chi: chi_now,
            e,
            energy,
            energy_prev: current.energy,
            gap,
            delta_e,
            v_norm: v_next.norm_l2(),
            v_prev_norm: current.sample.v.norm_l2(),
            v_increment: increment.norm_l2(),
            v_increment_w: norm(&increment, &NormKind::Wsp(0.5, 31.0 / 30.0))?,
            v_c1,
            r_prev_l1: current.r_l1,
            r_prev_sup: ring.iter().map(|b| b.r_l1).fold(0.0, f64::max),
            r_l1: norm(&r_next, &NormKind::Lp(1.0))?,
            parts_l1,
            osc_split_defect: norm(&osc_split, &NormKind::Lp(1.0))?,
            residual,
            div_wpc,
            div_v,
            mean_v: v_next.mean_abs(),
            gamma: gamma_term,
            gamma_clamped,
            rho_mean: rho_sum / np as f64,
            max_ratio: ratio,
            wp_norm: wp_s.norm_l2(),
            wc_norm: wc.scale(c1).norm_l2(),
            wt_norm: wt.scale(c2).norm_l2(),
            jet_factor_max,
        });

        if cfg.store {
            stored_v.push(v_next.clone());
            stored_r.push(r_next);
        }
        if cfg.store_stress {
            stored_stress.push(parts);
        }
        prev_wpc = Some(wpc);
        prev_wt = Some(wt);
        prev_v = Some(v_next);
        prev_a2 = if active { Some(a2_all) } else { None };
    }

    let t_first = src.time(m);
    let summary = LevelSummary {
        from: q,
        to: q + 1,
        grid_n: grid.n(),
        dt,
        ell,
        mollifier_steps: m,
        c_rho,
        t_first,
        t_last: src.time(m + n_out - 1),
        outputs: n_out,
        residual_max,
        div_max,
        stress_mean_max: mean_max,
        gamma_clamped: clamped,
        max_ratio: ratio_max,
    };
    let v = if cfg.store { Some(TimeTrajectory::new(t_first, dt, stored_v)?) } else { None };
    let r = if cfg.store { Some(TimeTrajectory::new(t_first, dt, stored_r)?) } else { None };
    Ok(LevelOutput { rows, summary, v, r, stress: cfg.store_stress.then_some(stored_stress) })
}
