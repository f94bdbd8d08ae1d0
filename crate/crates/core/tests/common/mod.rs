#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use wns::field::{Grid3, SpectralField, SpectralVectorField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

pub fn uniform(r: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    Uniform::new(lo, hi).expect("valid range").sample(r)
}

/// Random real field with Gaussian physical samples (all non-Nyquist modes excited).
pub fn random_field<const C: usize>(grid: &Grid3, seed: u64) -> SpectralField<C> {
    let mut r = rng(seed);
    let phys: [Vec<f64>; C] =
        std::array::from_fn(|_| (0..grid.n_phys()).map(|_| normal(&mut r)).collect());
    SpectralField::from_physical(grid, &phys)
}

/// Random smooth field: Gaussian coefficients damped like `e^{-|k|²/k0²}`.
pub fn random_smooth<const C: usize>(grid: &Grid3, seed: u64, k0: f64) -> SpectralField<C> {
    random_field::<C>(grid, seed).multiply(|k| {
        let kk = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
        (-kk / (k0 * k0)).exp()
    })
}

pub fn random_mean_zero(grid: &Grid3, seed: u64) -> SpectralVectorField {
    wns::field::spectral_filter(&random_field::<3>(grid, seed), wns::field::ops::Filter::Neq0)
}
