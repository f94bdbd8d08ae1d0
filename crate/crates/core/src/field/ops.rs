//! Spectral operators: Leray projection, Fourier filters, derivatives, the
//! inverse divergence, the heat semigroup and pointwise products.

use num_complex::Complex64;

use super::grid::Grid3;
use super::spectral::{
    sym, SpectralField, SpectralScalarField, SpectralVectorField, SymmetricTensorField,
};
use crate::error::{Result, WnsError};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
fn kf(k: [i64; 3]) -> [f64; 3] {
    [k[0] as f64, k[1] as f64, k[2] as f64]
}

#[inline]
fn k2(k: [i64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
}

/// Fourier-mode filters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Filter {
    /// Keep modes with `|k| ≤ f` (Euclidean).
    Leq(f64),
    /// Remove the mean (`k = 0`).
    Neq0,
    /// Keep modes with `|k| ≥ κ`.
    Geq(f64),
    /// Keep modes with `|k| < κ`.
    Lt(f64),
}

impl Filter {
    #[inline]
    pub fn keeps(&self, k: [i64; 3]) -> bool {
        let kk = k2(k).sqrt();
        match *self {
            Filter::Leq(f) => kk <= f,
            Filter::Neq0 => k != [0, 0, 0],
            Filter::Geq(c) => kk >= c,
            Filter::Lt(c) => kk < c,
        }
    }
}

/// Apply a Fourier filter to any field.
pub fn spectral_filter<const C: usize>(v: &SpectralField<C>, kind: Filter) -> SpectralField<C> {
    v.multiply(|k| if kind.keeps(k) { 1.0 } else { 0.0 })
}

/// Helmholtz–Leray projection onto divergence-free fields; the mean is kept.
pub fn leray_project(v: &SpectralVectorField) -> SpectralVectorField {
    v.map_modes(|k, u| {
        if k == [0, 0, 0] {
            return u;
        }
        let k = kf(k);
        let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let d = (u[0] * k[0] + u[1] * k[1] + u[2] * k[2]) / kk;
        [u[0] - d * k[0], u[1] - d * k[1], u[2] - d * k[2]]
    })
}

/// Gradient of a scalar.
pub fn gradient(f: &SpectralScalarField) -> SpectralVectorField {
    let g = f.grid();
    let mut out = SpectralVectorField::zeros(g);
    for idx in 0..g.n_spec() {
        let k = kf(g.k_at(idx));
        let c = f.comp(0)[idx];
        for a in 0..3 {
            out.comp_mut(a)[idx] = I * k[a] * c;
        }
    }
    out
}

/// Divergence of a vector field.
pub fn divergence(v: &SpectralVectorField) -> SpectralScalarField {
    let g = v.grid();
    let mut out = SpectralScalarField::zeros(g);
    for idx in 0..g.n_spec() {
        let k = kf(g.k_at(idx));
        out.comp_mut(0)[idx] =
            I * (k[0] * v.comp(0)[idx] + k[1] * v.comp(1)[idx] + k[2] * v.comp(2)[idx]);
    }
    out
}

/// Row divergence of a symmetric tensor: `(div T)_i = ∂_j T_ij`.
pub fn divergence_tensor(t: &SymmetricTensorField) -> SpectralVectorField {
    let g = t.grid();
    let mut out = SpectralVectorField::zeros(g);
    for idx in 0..g.n_spec() {
        let k = kf(g.k_at(idx));
        for a in 0..3 {
            let mut s = Complex64::new(0.0, 0.0);
            for b in 0..3 {
                s += k[b] * t.comp(sym(a, b))[idx];
            }
            out.comp_mut(a)[idx] = I * s;
        }
    }
    out
}

/// Curl of a vector field.
pub fn curl(v: &SpectralVectorField) -> SpectralVectorField {
    v.map_modes(|k, u| {
        let k = kf(k);
        [
            I * (k[1] * u[2] - k[2] * u[1]),
            I * (k[2] * u[0] - k[0] * u[2]),
            I * (k[0] * u[1] - k[1] * u[0]),
        ]
    })
}

/// Laplacian of any field.
pub fn laplacian<const C: usize>(v: &SpectralField<C>) -> SpectralField<C> {
    v.multiply(|k| -k2(k))
}

/// Partial derivative along axis `a` of any field.
pub fn partial<const C: usize>(v: &SpectralField<C>, a: usize) -> SpectralField<C> {
    v.map_modes(|k, u| {
        let s = I * k[a] as f64;
        std::array::from_fn(|c| s * u[c])
    })
}

/// Inverse divergence: symmetric trace-free tensor `Rv` with `div(Rv) = v`
/// for mean-zero `v`.
pub fn inv_divergence(v: &SpectralVectorField) -> Result<SymmetricTensorField> {
    let mean = v.mean_abs();
    let norm = v.max_coeff();
    if mean > 1e-12 * norm.max(f64::MIN_POSITIVE) && mean > 0.0 {
        return Err(WnsError::NonZeroMean { mean, norm });
    }
    Ok(inv_divergence_unchecked(v))
}

/// Inverse divergence ignoring the mean mode (which is mapped to zero).
pub fn inv_divergence_unchecked(v: &SpectralVectorField) -> SymmetricTensorField {
    let g = v.grid();
    let mut out = SymmetricTensorField::zeros(g);
    for idx in 1..g.n_spec() {
        let kk = g.k_at(idx);
        if kk == [0, 0, 0] {
            continue;
        }
        let k = kf(kk);
        let q = k2(kk);
        let u = [v.comp(0)[idx], v.comp(1)[idx], v.comp(2)[idx]];
        // Δ^{-1} ↦ −1/|k|², ∂_j ↦ i k_j
        let inv_lap = -1.0 / q;
        let div_inv = I * (k[0] * u[0] + k[1] * u[1] + k[2] * u[2]) * inv_lap;
        for (s, &(a, b)) in super::spectral::SYM_INDEX.iter().enumerate() {
            let first = (I * k[a] * u[b] + I * k[b] * u[a]) * inv_lap;
            let delta = if a == b { 1.0 } else { 0.0 };
            let second = (delta + (-k[a] * k[b]) * inv_lap) * div_inv;
            out.comp_mut(s)[idx] = first - 0.5 * second;
        }
    }
    out
}

/// Heat semigroup `e^{tΔ}` applied mode-wise.
pub fn heat_semigroup<const C: usize>(u0: &SpectralField<C>, t: f64) -> Result<SpectralField<C>> {
    if t < 0.0 {
        return Err(WnsError::NegativeTime(t));
    }
    Ok(u0.multiply(|k| (-k2(k) * t).exp()))
}

/// How pointwise products are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductRule {
    /// Exact product on a 3/2 zero-padded grid, then truncated to the
    /// grid's dealiasing fraction.
    Dealiased,
    /// Pointwise product of the physical samples on the grid itself.
    Collocation,
}

/// Physical samples of several spectral arrays on a target grid.
fn samples_on(grid: &Grid3, target: &Grid3, spec: &[&[Complex64]]) -> Vec<Vec<f64>> {
    spec.iter()
        .map(|s| {
            if grid == target {
                target.inverse(s)
            } else {
                target.inverse(&grid.transfer(s, target))
            }
        })
        .collect()
}

/// Forward-transform product samples back to the field grid under a rule.
fn back_to_grid(grid: &Grid3, work: &Grid3, phys: &[f64], rule: ProductRule) -> Vec<Complex64> {
    let spec = work.forward(phys);
    match rule {
        ProductRule::Collocation => spec,
        ProductRule::Dealiased => {
            let mut out = work.transfer(&spec, grid);
            let cut = grid.dealias_cutoff();
            for (idx, c) in out.iter_mut().enumerate() {
                let k = grid.k_at(idx);
                if k.iter().any(|x| x.abs() > cut) {
                    *c = Complex64::new(0.0, 0.0);
                }
            }
            out
        }
    }
}

fn work_grid(grid: &Grid3, rule: ProductRule) -> Result<Grid3> {
    match rule {
        ProductRule::Collocation => Ok(grid.clone()),
        ProductRule::Dealiased => grid.padded(),
    }
}

/// Symmetrized traceless product `½(f_i g_j + f_j g_i) − ⅓δ_ij f·g` under the
/// grid's default (dealiased) rule.
pub fn traceless_tensor_product(
    f: &SpectralVectorField,
    g: &SpectralVectorField,
) -> Result<SymmetricTensorField> {
    traceless_product_with(f, g, ProductRule::Dealiased)
}

/// Symmetrized traceless product under an explicit product rule.
pub fn traceless_product_with(
    f: &SpectralVectorField,
    g: &SpectralVectorField,
    rule: ProductRule,
) -> Result<SymmetricTensorField> {
    f.check_grid(g)?;
    let grid = f.grid();
    let work = work_grid(grid, rule)?;
    let fp = samples_on(grid, &work, &[f.comp(0), f.comp(1), f.comp(2)]);
    let gp = samples_on(grid, &work, &[g.comp(0), g.comp(1), g.comp(2)]);
    Ok(traceless_from_samples(grid, &work, &fp, &gp, rule))
}

/// Traceless product of physical samples already on the work grid.
pub(crate) fn traceless_from_samples(
    grid: &Grid3,
    work: &Grid3,
    fp: &[Vec<f64>],
    gp: &[Vec<f64>],
    rule: ProductRule,
) -> SymmetricTensorField {
    let np = work.n_phys();
    let mut comps: [Vec<Complex64>; 6] = std::array::from_fn(|_| Vec::new());
    let mut buf = vec![0.0; np];
    for (s, &(a, b)) in super::spectral::SYM_INDEX.iter().enumerate() {
        for x in 0..np {
            let mut v = 0.5 * (fp[a][x] * gp[b][x] + fp[b][x] * gp[a][x]);
            if a == b {
                v -= (fp[0][x] * gp[0][x] + fp[1][x] * gp[1][x] + fp[2][x] * gp[2][x]) / 3.0;
            }
            buf[x] = v;
        }
        comps[s] = back_to_grid(grid, work, &buf, rule);
    }
    SymmetricTensorField::from_coeffs(grid, comps).expect("sizes agree")
}

/// Product of a scalar and a field under a product rule.
pub fn scalar_product_with<const C: usize>(
    a: &SpectralScalarField,
    v: &SpectralField<C>,
    rule: ProductRule,
) -> Result<SpectralField<C>> {
    if a.grid() != v.grid() {
        return Err(WnsError::GridMismatch("scalar product".into()));
    }
    let grid = v.grid();
    let work = work_grid(grid, rule)?;
    let ap = samples_on(grid, &work, &[a.comp(0)]).pop().expect("one");
    let mut comps: [Vec<Complex64>; C] = std::array::from_fn(|_| Vec::new());
    for c in 0..C {
        let vp = samples_on(grid, &work, &[v.comp(c)]).pop().expect("one");
        let prod: Vec<f64> = ap.iter().zip(&vp).map(|(x, y)| x * y).collect();
        comps[c] = back_to_grid(grid, &work, &prod, rule);
    }
    SpectralField::from_coeffs(grid, comps)
}

/// Pointwise dot product `f·g`.
pub fn dot_product_with(
    f: &SpectralVectorField,
    g: &SpectralVectorField,
    rule: ProductRule,
) -> Result<SpectralScalarField> {
    f.check_grid(g)?;
    let grid = f.grid();
    let work = work_grid(grid, rule)?;
    let fp = samples_on(grid, &work, &[f.comp(0), f.comp(1), f.comp(2)]);
    let gp = samples_on(grid, &work, &[g.comp(0), g.comp(1), g.comp(2)]);
    let prod: Vec<f64> =
        (0..work.n_phys()).map(|x| fp[0][x] * gp[0][x] + fp[1][x] * gp[1][x] + fp[2][x] * gp[2][x]).collect();
    SpectralField::from_coeffs(grid, [back_to_grid(grid, &work, &prod, rule)])
}
