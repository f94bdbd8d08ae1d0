//! Profile functions of the jets.
//!
//! All profiles come from the template bump `b(r) = exp(−1/(1−r²))`:
//!
//! * `Φ(y) = c_Φ b(|y|)` on R² and `φ = −ΔΦ` (closed form), normalized so
//!   that `(1/4π²)∫φ² = 1`; `∫φ = 0` holds because `φ` is a Laplacian;
//! * `ψ(x) = c_ψ b′(x)` on R, mean zero by construction, normalized so that
//!   `(1/2π)∫ψ² = 1`.
//!
//! Writing `u = 1 − r²`, the derivatives used below are
//! `b′ = −2r b/u²`, `b″ = b(−2/u² + 4r²/u⁴ − 8r²/u³)` and the planar
//! Laplacian `Δb = b″ + b′/r = b(−4/u² + 4r²/u⁴ − 8r²/u³)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

#[inline]
fn b_and_u(r2: f64) -> Option<(f64, f64)> {
    let u = 1.0 - r2;
    if u <= 0.0 {
        return None;
    }
    let b = (-1.0 / u).exp();
    if b == 0.0 {
        None
    } else {
        Some((b, u))
    }
}

/// Template bump `exp(−1/(1−r²))` as a function of `r²`.
#[inline]
pub fn template(r2: f64) -> f64 {
    b_and_u(r2).map_or(0.0, |(b, _)| b)
}

/// First derivative of the 1D template.
#[inline]
pub fn template_d1(x: f64) -> f64 {
    b_and_u(x * x).map_or(0.0, |(b, u)| -2.0 * x * b / (u * u))
}

/// Second derivative of the 1D template.
#[inline]
pub fn template_d2(x: f64) -> f64 {
    b_and_u(x * x).map_or(0.0, |(b, u)| {
        let x2 = x * x;
        let u2 = u * u;
        b * (-2.0 / u2 + 4.0 * x2 / (u2 * u2) - 8.0 * x2 / (u2 * u))
    })
}

/// Planar Laplacian of the radial template at squared radius `r2`.
#[inline]
pub fn template_laplacian(r2: f64) -> f64 {
    b_and_u(r2).map_or(0.0, |(b, u)| {
        let u2 = u * u;
        b * (-4.0 / u2 + 4.0 * r2 / (u2 * u2) - 8.0 * r2 / (u2 * u))
    })
}

/// Composite Simpson rule on `[a, b]` with `n` (rounded to even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n.max(2) + (n % 2);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Normalized profiles `Φ`, `φ`, `ψ`.
#[derive(Clone, Debug, Serialize)]
pub struct Profiles {
    /// Scale of `Φ` (and hence of `φ`).
    pub c_phi: f64,
    /// Scale of `ψ`.
    pub c_psi: f64,
    /// Simpson intervals used for the normalization integrals.
    pub quadrature: usize,
}

impl Profiles {
    /// Build the profiles with `quadrature` Simpson intervals per 1D integral.
    pub fn build(quadrature: usize) -> Self {
        let lap_sq = 2.0 * PI * simpson(|r| template_laplacian(r * r).powi(2) * r, 0.0, 1.0, quadrature);
        let c_phi = (4.0 * PI * PI / lap_sq).sqrt();
        let d1_sq = simpson(|x| template_d1(x).powi(2), -1.0, 1.0, quadrature);
        let c_psi = (2.0 * PI / d1_sq).sqrt();
        Self { c_phi, c_psi, quadrature }
    }

    /// Shared profiles built with 20 000 intervals.
    pub fn standard() -> &'static Profiles {
        static P: OnceLock<Profiles> = OnceLock::new();
        P.get_or_init(|| Profiles::build(20_000))
    }

    /// `Φ(y)`.
    #[inline]
    pub fn big_phi(&self, y: [f64; 2]) -> f64 {
        self.c_phi * template(y[0] * y[0] + y[1] * y[1])
    }

    /// `∇Φ(y) = c_Φ b′(r) y/r = −2c_Φ b y/u²`.
    #[inline]
    pub fn grad_big_phi(&self, y: [f64; 2]) -> [f64; 2] {
        match b_and_u(y[0] * y[0] + y[1] * y[1]) {
            Some((b, u)) => {
                let s = -2.0 * self.c_phi * b / (u * u);
                [s * y[0], s * y[1]]
            }
            None => [0.0, 0.0],
        }
    }

    /// `φ(y) = −ΔΦ(y)`.
    #[inline]
    pub fn phi(&self, y: [f64; 2]) -> f64 {
        -self.c_phi * template_laplacian(y[0] * y[0] + y[1] * y[1])
    }

    /// `ψ(x)`.
    #[inline]
    pub fn psi(&self, x: f64) -> f64 {
        self.c_psi * template_d1(x)
    }

    /// `ψ′(x)`.
    #[inline]
    pub fn dpsi(&self, x: f64) -> f64 {
        self.c_psi * template_d2(x)
    }

    /// Rescaled `φ_{r}(y) = φ(y/r)/r`.
    #[inline]
    pub fn phi_r(&self, y: [f64; 2], r: f64) -> f64 {
        self.phi([y[0] / r, y[1] / r]) / r
    }

    /// Rescaled `Φ_{r}(y) = Φ(y/r)/r`.
    #[inline]
    pub fn big_phi_r(&self, y: [f64; 2], r: f64) -> f64 {
        self.big_phi([y[0] / r, y[1] / r]) / r
    }

    /// Gradient of `Φ_r`: `(∇Φ)(y/r)/r²`.
    #[inline]
    pub fn grad_big_phi_r(&self, y: [f64; 2], r: f64) -> [f64; 2] {
        let g = self.grad_big_phi([y[0] / r, y[1] / r]);
        [g[0] / (r * r), g[1] / (r * r)]
    }

    /// Rescaled `ψ_{r}(x) = ψ(x/r)/√r`.
    #[inline]
    pub fn psi_r(&self, x: f64, r: f64) -> f64 {
        self.psi(x / r) / r.sqrt()
    }

    /// Derivative of `ψ_r`: `ψ′(x/r) r^{−3/2}`.
    #[inline]
    pub fn dpsi_r(&self, x: f64, r: f64) -> f64 {
        self.dpsi(x / r) / (r * r.sqrt())
    }
}

/// Quadrature values of the normalizations and means, computed on
/// independent trapezoid grids (`m` points per axis over the support box).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProfileChecks {
    /// `(1/4π²)∫φ²`.
    pub phi_l2: f64,
    /// `∫φ`.
    pub phi_integral: f64,
    /// `(1/2π)∫ψ²`.
    pub psi_l2: f64,
    /// `∫ψ`.
    pub psi_integral: f64,
}

impl Profiles {
    /// Evaluate the normalizations on trapezoid grids (spectrally accurate:
    /// the integrands vanish to all orders at the box boundary).
    pub fn checks(&self, m: usize) -> ProfileChecks {
        let h = 2.0 / m as f64;
        let node = |i: usize| -1.0 + i as f64 * h;
        let mut phi2 = 0.0;
        let mut phi1 = 0.0;
        for i in 0..m {
            for j in 0..m {
                let v = self.phi([node(i), node(j)]);
                phi2 += v * v;
                phi1 += v;
            }
        }
        let mut psi2 = 0.0;
        let mut psi1 = 0.0;
        for i in 0..m {
            let v = self.psi(node(i));
            psi2 += v * v;
            psi1 += v;
        }
        ProfileChecks {
            phi_l2: phi2 * h * h / (4.0 * PI * PI),
            phi_integral: phi1 * h * h,
            psi_l2: psi2 * h / (2.0 * PI),
            psi_integral: psi1 * h,
        }
    }
}
