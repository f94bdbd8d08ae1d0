//! Geometric decomposition of symmetric matrices near the identity.
//!
//! A fixed set Λ of six rational unit vectors is used:
//! `(3,±4,0)/5, (0,3,±4)/5, (±4,0,3)/5`. The six rank-one matrices `ξ⊗ξ` form
//! a basis of `Sym(3)`, so every symmetric `R` has a unique decomposition
//! `R = Σ_ξ γ_ξ²(R) ξ⊗ξ` with coefficients linear in `R`. Near `Id` all six
//! coefficients are positive and `γ_ξ = √(γ_ξ²)` is smooth.
//!
//! Directions, frames and `n_*` use exact rational arithmetic; only the
//! coefficient evaluation is floating point. Taking the trace of the
//! decomposition gives `Σ_ξ γ_ξ²(R) = tr R`, so at `R = Id` the six
//! coefficients sum to 3; by the ± symmetry of Λ they are all equal to 1/2.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Result, WnsError};

pub type Q = Ratio<i64>;

/// Frobenius-orthonormal coordinates of a symmetric matrix
/// (`[xx, yy, zz, √2 xy, √2 xz, √2 yz]`).
pub fn vec_sym(r: &[[f64; 3]; 3]) -> [f64; 6] {
    let s = std::f64::consts::SQRT_2;
    [r[0][0], r[1][1], r[2][2], s * r[0][1], s * r[0][2], s * r[1][2]]
}

/// One direction with its orthonormal frame `(ξ, A_ξ, ξ×A_ξ)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub xi: [Q; 3],
    pub a: [Q; 3],
    pub b: [Q; 3],
}

fn q(n: i64, d: i64) -> Q {
    Q::new(n, d)
}

fn dot(u: &[Q; 3], v: &[Q; 3]) -> Q {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

fn cross(u: &[Q; 3], v: &[Q; 3]) -> [Q; 3] {
    [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
}

pub fn to_f64(v: &[Q; 3]) -> [f64; 3] {
    std::array::from_fn(|i| *v[i].numer() as f64 / *v[i].denom() as f64)
}

impl Frame {
    fn new(xi: [i64; 3], a: [i64; 3], den: i64) -> Self {
        let xi = xi.map(|c| q(c, den));
        let a = a.map(|c| q(c, den));
        let b = cross(&xi, &a);
        Self { xi, a, b }
    }

    /// Gram matrix of `(ξ, A, ξ×A)` in exact arithmetic.
    pub fn gram(&self) -> [[Q; 3]; 3] {
        let v = [&self.xi, &self.a, &self.b];
        std::array::from_fn(|i| std::array::from_fn(|j| dot(v[i], v[j])))
    }

    pub fn xi_f64(&self) -> [f64; 3] {
        to_f64(&self.xi)
    }

    pub fn a_f64(&self) -> [f64; 3] {
        to_f64(&self.a)
    }

    pub fn b_f64(&self) -> [f64; 3] {
        to_f64(&self.b)
    }
}

/// The direction set Λ with frames, `n_*`, coefficient map and constants.
#[derive(Clone, Debug)]
pub struct DirectionSet {
    pub frames: Vec<Frame>,
    pub n_star: i64,
    /// Rows map Frobenius coordinates of `R` to `γ_ξ²(R)`.
    pub linear_map: [[f64; 6]; 6],
    /// Spectral norm of `linear_map`.
    pub op_norm: f64,
    /// Positivity margin kept inside the admissible ball.
    pub margin: f64,
    /// Radius of the Frobenius ball around `Id` where every `γ_ξ² ≥ margin`.
    pub radius_eff: f64,
    /// Highest derivative order entering the bound constant.
    pub n_deriv: u32,
    /// Bound constant `C_Λ sup_ξ (‖γ_ξ‖_{C⁰} + Σ_{1≤j≤N} ‖D^jγ_ξ‖_{C⁰})` over the ball.
    pub m_const: f64,
}

/// JSON form of a [`DirectionSet`].
#[derive(Clone, Debug, Serialize)]
pub struct DirectionSetReport {
    pub directions: Vec<[String; 3]>,
    pub frames_a: Vec<[String; 3]>,
    pub n_star: i64,
    pub op_norm: f64,
    pub radius_eff: f64,
    pub margin: f64,
    pub n_deriv: u32,
    pub m_const: f64,
    pub gamma_sq_at_identity: [f64; 6],
}

/// Smallest `n ≤ limit` making every frame vector integral after scaling.
pub fn smallest_clearing_integer(frames: &[Frame], limit: i64) -> Option<i64> {
    (1..=limit).find(|&n| {
        frames.iter().all(|f| {
            [&f.xi, &f.a, &f.b]
                .iter()
                .all(|v| v.iter().all(|c| (*c * Q::from_integer(n)).is_integer()))
        })
    })
}

/// Exact determinant by fraction-preserving Gaussian elimination.
pub fn det_exact(m: &[[Q; 6]; 6]) -> Q {
    let mut a = *m;
    let mut det = Q::from_integer(1);
    for col in 0..6 {
        let Some(p) = (col..6).find(|&r| a[r][col] != Q::from_integer(0)) else {
            return Q::from_integer(0);
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..6 {
            let f = a[r][col] / a[col][col];
            for c in col..6 {
                let v = a[col][c];
                a[r][c] -= f * v;
            }
        }
    }
    det
}

/// Columns `vec(ξ⊗ξ)` in exact arithmetic (off-diagonals unweighted).
pub fn outer_matrix_exact(frames: &[Frame]) -> [[Q; 6]; 6] {
    let mut m = [[Q::from_integer(0); 6]; 6];
    for (c, f) in frames.iter().enumerate() {
        let x = &f.xi;
        let entries = [x[0] * x[0], x[1] * x[1], x[2] * x[2], x[0] * x[1], x[0] * x[2], x[1] * x[2]];
        for r in 0..6 {
            m[r][c] = entries[r];
        }
    }
    m
}

fn invert6(m: &[[f64; 6]; 6]) -> [[f64; 6]; 6] {
    let mut a = *m;
    let mut inv = [[0.0; 6]; 6];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for col in 0..6 {
        let p = (col..6)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty");
        a.swap(p, col);
        inv.swap(p, col);
        let d = a[col][col];
        for c in 0..6 {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for r in 0..6 {
            if r != col {
                let f = a[r][col];
                for c in 0..6 {
                    a[r][c] -= f * a[col][c];
                    inv[r][c] -= f * inv[col][c];
                }
            }
        }
    }
    inv
}

/// Largest eigenvalue of a symmetric 6×6 matrix (cyclic Jacobi).
fn max_eigen_sym(m: &[[f64; 6]; 6]) -> f64 {
    let mut a = *m;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..6 {
            for j in i + 1..6 {
                off += a[i][j] * a[i][j];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..6 {
            for r in p + 1..6 {
                if a[p][r].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[r][r] - a[p][p]) / (2.0 * a[p][r]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..6 {
                    let akp = a[k][p];
                    let akr = a[k][r];
                    a[k][p] = c * akp - s * akr;
                    a[k][r] = s * akp + c * akr;
                }
                for k in 0..6 {
                    let apk = a[p][k];
                    let ark = a[r][k];
                    a[p][k] = c * apk - s * ark;
                    a[r][k] = s * apk + c * ark;
                }
            }
        }
    }
    (0..6).map(|i| a[i][i]).fold(f64::MIN, f64::max)
}

/// `|c_j|` in `d^j/ds^j √s = c_j s^{1/2−j}`.
fn sqrt_derivative_coeff(j: u32) -> f64 {
    let mut c = 1.0;
    for i in 0..j {
        c *= 0.5 - i as f64;
    }
    c.abs()
}

impl DirectionSet {
    /// Build Λ with the default margin 0.05 and derivative order 4.
    pub fn build() -> Self {
        Self::build_with(0.05, 4)
    }

    pub fn build_with(margin: f64, n_deriv: u32) -> Self {
        let frames = vec![
            Frame::new([3, 4, 0], [-4, 3, 0], 5),
            Frame::new([3, -4, 0], [4, 3, 0], 5),
            Frame::new([0, 3, 4], [0, -4, 3], 5),
            Frame::new([0, 3, -4], [0, 4, 3], 5),
            Frame::new([4, 0, 3], [3, 0, -4], 5),
            Frame::new([-4, 0, 3], [3, 0, 4], 5),
        ];
        let n_star = smallest_clearing_integer(&frames, 100).expect("rational frames clear");
        // Columns: Frobenius coordinates of ξ⊗ξ.
        let mut cols = [[0.0; 6]; 6];
        for (c, f) in frames.iter().enumerate() {
            let x = f.xi_f64();
            let outer: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| x[i] * x[j]));
            let v = vec_sym(&outer);
            for r in 0..6 {
                cols[r][c] = v[r];
            }
        }
        let linear_map = invert6(&cols);
        let mut ltl = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                ltl[i][j] = (0..6).map(|k| linear_map[k][i] * linear_map[k][j]).sum();
            }
        }
        let op_norm = max_eigen_sym(&ltl).sqrt();
        let id = vec_sym(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let g_id: Vec<f64> = (0..6).map(|r| (0..6).map(|c| linear_map[r][c] * id[c]).sum()).collect();
        let g_min = g_id.iter().cloned().fold(f64::MAX, f64::min);
        let radius_eff = (0.5f64).min((g_min - margin) / op_norm);
        let mut set = Self {
            frames,
            n_star,
            linear_map,
            op_norm,
            margin,
            radius_eff,
            n_deriv,
            m_const: 0.0,
        };
        set.m_const = set.bound_constant();
        set
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Unit directions as floating point vectors.
    pub fn directions(&self) -> Vec<[f64; 3]> {
        self.frames.iter().map(|f| f.xi_f64()).collect()
    }

    /// Frame of a direction given in floating point (matched to 1e-12).
    pub fn frame(&self, xi: [f64; 3]) -> Result<&Frame> {
        self.frames
            .iter()
            .find(|f| {
                let x = f.xi_f64();
                (0..3).all(|i| (x[i] - xi[i]).abs() < 1e-12)
            })
            .ok_or(WnsError::UnknownDirection(xi))
    }

    /// Row norm of the coefficient map for direction `i`.
    pub fn row_norm(&self, i: usize) -> f64 {
        self.linear_map[i].iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `γ_ξ²(R)` for all six directions without the ball check.
    pub fn gamma_sq_unchecked(&self, r: &[[f64; 3]; 3]) -> [f64; 6] {
        let v = vec_sym(r);
        std::array::from_fn(|i| (0..6).map(|c| self.linear_map[i][c] * v[c]).sum())
    }

    /// `γ_ξ(R)` for all six directions; `R` must lie in the admissible ball.
    pub fn gamma_coeffs(&self, r: &[[f64; 3]; 3]) -> Result<[f64; 6]> {
        let dist = frobenius_distance_to_identity(r);
        if dist > self.radius_eff * (1.0 + 1e-12) {
            return Err(WnsError::OutOfBall { dist, radius: self.radius_eff });
        }
        Ok(self.gamma_sq_unchecked(r).map(|g| g.max(0.0).sqrt()))
    }

    /// `Σ_ξ γ_ξ² ξ⊗ξ` for given squared coefficients.
    pub fn reconstruct(&self, gamma_sq: &[f64; 6]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for (g, x) in gamma_sq.iter().zip(self.directions()) {
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += g * x[i] * x[j];
                }
            }
        }
        out
    }

    /// Certified lower bound of `min_ξ γ_ξ²` over the admissible ball.
    pub fn certified_min_gamma_sq(&self) -> f64 {
        let g = self.gamma_sq_unchecked(&IDENTITY);
        g.iter().cloned().fold(f64::MAX, f64::min) - self.radius_eff * self.op_norm
    }

    /// `C_Λ = 8|Λ|(1+8π³)^{1/2}`.
    pub fn c_lambda(&self) -> f64 {
        8.0 * self.len() as f64 * (1.0 + 8.0 * std::f64::consts::PI.powi(3)).sqrt()
    }

    fn bound_constant(&self) -> f64 {
        let g_id = self.gamma_sq_unchecked(&IDENTITY);
        let mut sup: f64 = 0.0;
        for (i, g0) in g_id.iter().enumerate() {
            let ln = self.row_norm(i);
            let g_lo = g0 - self.radius_eff * ln;
            let g_hi = g0 + self.radius_eff * ln;
            let mut s = g_hi.sqrt();
            for j in 1..=self.n_deriv {
                s += sqrt_derivative_coeff(j) * ln.powi(j as i32) * g_lo.powf(0.5 - j as f64);
            }
            sup = sup.max(s);
        }
        self.c_lambda() * sup
    }

    pub fn report(&self) -> DirectionSetReport {
        let fmt = |v: &[Q; 3]| v.map(|c| c.to_string());
        DirectionSetReport {
            directions: self.frames.iter().map(|f| fmt(&f.xi)).collect(),
            frames_a: self.frames.iter().map(|f| fmt(&f.a)).collect(),
            n_star: self.n_star,
            op_norm: self.op_norm,
            radius_eff: self.radius_eff,
            margin: self.margin,
            n_deriv: self.n_deriv,
            m_const: self.m_const,
            gamma_sq_at_identity: self.gamma_sq_unchecked(&IDENTITY),
        }
    }
}

pub const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// `‖R − Id‖_F`.
pub fn frobenius_distance_to_identity(r: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let d = r[i][j] - IDENTITY[i][j];
            s += d * d;
        }
    }
    s.sqrt()
}
