//! Jet parameters and the shift search that separates the tube families.
//!
//! The tubes of direction `ξ` are the `r_⊥/c`-neighbourhoods of the line
//! lattice `α_ξ + (2π/c)(m₁A_ξ + m₂B_ξ) + Rξ`, where `c = n_* λ r_⊥` is the
//! (integer) number of tube periods per `2π`. For two directions `ξ ≠ ξ′`
//! with `n = ξ×ξ′`, the distances between their axis lines are
//! `|Δα·n + (2π/c) g m| / |n|` over all integers `m`, where `g` is the
//! rational gcd of `A·n, B·n, A′·n, B′·n`. Two families are disjoint iff
//! this distance is at least `2r_⊥/c`, which is a condition on `Δα·n` modulo
//! `2πg/c`. It is satisfiable only when `r_⊥ < π g / (2|n|)`, independently
//! of `λ`.

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Result, WnsError};
use crate::geometry::{DirectionSet, Frame, Q};

/// Relative safety margin demanded between tube families.
pub const CLEARANCE_MARGIN: f64 = 0.05;

/// Parameters of one family of jets (shared by all six directions).
#[derive(Clone, Debug, Serialize)]
pub struct JetParams {
    pub lambda: f64,
    pub r_perp: f64,
    pub r_par: f64,
    pub mu: f64,
    pub n_star: i64,
    /// Shifts `α_ξ` in direction-set order.
    pub shifts: Vec<[f64; 3]>,
    /// Smallest axis distance between two families divided by `2r_⊥/c`
    /// (`≥ 1` means pairwise disjoint supports).
    pub min_clearance: f64,
    pub disjoint: bool,
}

fn dot(u: &[Q; 3], v: &[Q; 3]) -> Q {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

fn cross(u: &[Q; 3], v: &[Q; 3]) -> [Q; 3] {
    [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]]
}

fn qf(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Rational gcd of a list of rationals (zero entries ignored).
fn rational_gcd(v: &[Q]) -> Q {
    let den = v.iter().fold(1i64, |l, x| l.lcm(x.denom()));
    let g = v.iter().fold(0i64, |g, x| g.gcd(&(x.numer() * (den / x.denom()))));
    Q::new(g, den)
}

/// Geometry of one unordered pair of directions.
#[derive(Clone, Copy, Debug)]
struct PairGeometry {
    i: usize,
    j: usize,
    n: [f64; 3],
    n_len: f64,
    g: f64,
}

fn pair_geometry(frames: &[Frame]) -> Vec<PairGeometry> {
    let mut out = Vec::new();
    for i in 0..frames.len() {
        for j in i + 1..frames.len() {
            let (fi, fj) = (&frames[i], &frames[j]);
            let n = cross(&fi.xi, &fj.xi);
            let g = rational_gcd(&[dot(&fi.a, &n), dot(&fi.b, &n), dot(&fj.a, &n), dot(&fj.b, &n)]);
            let nf = n.map(qf);
            out.push(PairGeometry {
                i,
                j,
                n: nf,
                n_len: (nf[0] * nf[0] + nf[1] * nf[1] + nf[2] * nf[2]).sqrt(),
                g: qf(g),
            });
        }
    }
    out
}

/// Largest `r_⊥` for which disjoint shifts can exist for this direction set.
pub fn max_disjoint_r_perp(set: &DirectionSet) -> f64 {
    pair_geometry(&set.frames)
        .iter()
        .map(|p| std::f64::consts::PI * p.g / (2.0 * p.n_len))
        .fold(f64::INFINITY, f64::min)
}

/// Axis distance of a pair in units of `2r_⊥/c`, for shifts `α = (2π/c)u`.
fn pair_clearance(p: &PairGeometry, ui: &[f64; 3], uj: &[f64; 3], r_perp: f64) -> f64 {
    let d: f64 = (0..3).map(|k| (uj[k] - ui[k]) * p.n[k]).sum();
    let rem = d.rem_euclid(p.g);
    let dist = rem.min(p.g - rem);
    // physical distance (2π/c)·dist/|n| against 2r_⊥/c
    std::f64::consts::PI * dist / (p.n_len * r_perp)
}

fn clearance_of(pairs: &[PairGeometry], u: &[[f64; 3]], r_perp: f64) -> f64 {
    pairs
        .iter()
        .map(|p| pair_clearance(p, &u[p.i], &u[p.j], r_perp))
        .fold(f64::INFINITY, f64::min)
}

/// Depth-first search for offsets `u_ξ` on a `P³` lattice with every pair
/// clearance `≥ 1 + margin`. The first direction is pinned at the origin.
fn search_offsets(pairs: &[PairGeometry], count: usize, r_perp: f64) -> Option<Vec<[f64; 3]>> {
    const P: usize = 16;
    const STRIDE: usize = 2_654_435_761 % (P * P * P);
    let total = P * P * P;
    let cand = |m: usize| {
        let idx = (m * (STRIDE | 1)) % total;
        [(idx / (P * P)) as f64 / P as f64, ((idx / P) % P) as f64 / P as f64, (idx % P) as f64 / P as f64]
    };
    let need = 1.0 + CLEARANCE_MARGIN;
    let mut chosen: Vec<[f64; 3]> = vec![[0.0; 3]];
    let mut next: Vec<usize> = vec![0; count];
    let mut budget = 2_000_000usize;
    while chosen.len() < count {
        let level = chosen.len();
        let mut placed = false;
        while next[level] < total {
            let u = cand(next[level]);
            next[level] += 1;
            budget = budget.checked_sub(1)?;
            let ok = pairs
                .iter()
                .filter(|p| p.j == level && p.i < level)
                .all(|p| pair_clearance(p, &chosen[p.i], &u, r_perp) >= need);
            if ok {
                chosen.push(u);
                placed = true;
                break;
            }
        }
        if !placed {
            if level == 1 {
                return None;
            }
            next[level] = 0;
            chosen.pop();
        }
    }
    Some(chosen)
}

impl JetParams {
    /// Parameters from the scaling ladder: `r_∥ = λ^{−4/7}`, `r_⊥ = λ^{−6/7}`,
    /// `μ = λ^{9/7}`, with shifts making all supports disjoint.
    pub fn ladder(lambda: f64, set: &DirectionSet) -> Result<Self> {
        let r_par = lambda.powf(-4.0 / 7.0);
        let r_perp = lambda.powf(-6.0 / 7.0);
        let mu = lambda.powf(9.0 / 7.0);
        Self::with_scales(lambda, r_perp, r_par, mu, set, false)
    }

    /// Explicit scales (desk override). With `allow_overlap` the shifts are
    /// still optimized but overlapping supports are accepted and recorded.
    pub fn with_scales(
        lambda: f64,
        r_perp: f64,
        r_par: f64,
        mu: f64,
        set: &DirectionSet,
        allow_overlap: bool,
    ) -> Result<Self> {
        if !(lambda > 0.0 && mu > 0.0 && r_perp > 0.0) {
            return Err(WnsError::InvalidJetParams(format!(
                "lambda = {lambda}, mu = {mu}, r_perp = {r_perp} must be positive"
            )));
        }
        if !(r_perp < r_par && r_par < 1.0) {
            return Err(WnsError::InvalidJetParams(format!(
                "need r_perp < r_par < 1, got r_perp = {r_perp}, r_par = {r_par}"
            )));
        }
        let periods = lambda * r_perp;
        if (periods - periods.round()).abs() > 1e-9 || periods.round() < 1.0 {
            return Err(WnsError::NonIntegerPeriod(periods));
        }
        let pairs = pair_geometry(&set.frames);
        let (shifts_u, disjoint) = match search_offsets(&pairs, set.len(), r_perp) {
            Some(u) => (u, true),
            None if allow_overlap => (best_effort_offsets(&pairs, set.len(), r_perp), false),
            None => {
                return Err(WnsError::InvalidJetParams(format!(
                    "no disjoint shifts for r_perp = {r_perp} (limit {:.4})",
                    max_disjoint_r_perp(set)
                )))
            }
        };
        let c = set.n_star as f64 * periods.round();
        let scale = 2.0 * std::f64::consts::PI / c;
        Ok(Self {
            lambda,
            r_perp,
            r_par,
            mu,
            n_star: set.n_star,
            shifts: shifts_u.iter().map(|u| u.map(|x| x * scale)).collect(),
            min_clearance: clearance_of(&pairs, &shifts_u, r_perp),
            disjoint,
        })
    }

    /// `λ r_⊥` as an integer.
    pub fn periods(&self) -> i64 {
        (self.lambda * self.r_perp).round() as i64
    }

    /// Integer frequency `c = n_* λ r_⊥` of the jet coordinates.
    pub fn c(&self) -> i64 {
        self.n_star * self.periods()
    }

    /// Corrector prefactor `1/(n_* λ)²`.
    pub fn corrector_scale(&self) -> f64 {
        1.0 / (self.n_star as f64 * self.lambda).powi(2)
    }

    /// Minimal grid size under the resolution rule `n ≥ factor · n_* λ`.
    pub fn min_grid(&self, factor: f64) -> usize {
        (factor * self.n_star as f64 * self.lambda).ceil() as usize
    }

    /// Fail with `UnderResolved` if an `n`-grid violates the resolution rule.
    pub fn check_resolution(&self, n: usize, factor: f64) -> Result<()> {
        if n < self.min_grid(factor) {
            return Err(WnsError::UnderResolved(format!(
                "grid n = {n} below {factor}·n_*·lambda = {}",
                self.min_grid(factor)
            )));
        }
        Ok(())
    }
}

/// Offsets maximizing the smallest clearance over a coarse lattice (greedy).
fn best_effort_offsets(pairs: &[PairGeometry], count: usize, r_perp: f64) -> Vec<[f64; 3]> {
    const P: usize = 8;
    let mut chosen: Vec<[f64; 3]> = vec![[0.0; 3]];
    for level in 1..count {
        let mut best = ([0.0; 3], f64::NEG_INFINITY);
        for idx in 0..P * P * P {
            let u = [(idx / (P * P)) as f64 / P as f64, ((idx / P) % P) as f64 / P as f64, (idx % P) as f64 / P as f64];
            let c = pairs
                .iter()
                .filter(|p| p.j == level && p.i < level)
                .map(|p| pair_clearance(p, &chosen[p.i], &u, r_perp))
                .fold(f64::INFINITY, f64::min);
            if c > best.1 {
                best = (u, c);
            }
        }
        chosen.push(best.0);
    }
    chosen
}
