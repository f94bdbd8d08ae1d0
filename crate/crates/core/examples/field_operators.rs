//! Spectral field operators: Leray projection, inverse divergence and the
//! heat semigroup on a random mean-zero field.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use wns::field::ops::{divergence, divergence_tensor, heat_semigroup, inv_divergence, leray_project, spectral_filter, Filter};
use wns::field::{norm, Grid3, NormKind, SpectralVectorField};

fn main() -> anyhow::Result<()> {
    let grid = Grid3::new(24)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let phys: [Vec<f64>; 3] = std::array::from_fn(|_| (0..grid.n_phys()).map(|_| StandardNormal.sample(&mut rng)).collect());
    let v = spectral_filter(&SpectralVectorField::from_physical(&grid, &phys), Filter::Neq0);

    let p = leray_project(&v);
    println!("‖v‖ = {:.4}, ‖Pv‖ = {:.4}, max |div Pv| = {:.2e}", v.norm_l2(), p.norm_l2(), divergence(&p).max_coeff());

    let r = inv_divergence(&v)?;
    println!("div R(v) − v: {:.2e} (relative), trace defect {:.2e}", divergence_tensor(&r).rel_diff(&v), r.trace_defect());

    for t in [0.01, 0.1, 1.0] {
        let h = heat_semigroup(&v, t)?;
        println!("e^{{tΔ}}v at t = {t}: ‖·‖_L2 = {:.4}, ‖·‖_H1 = {:.4}", h.norm_l2(), norm(&h, &NormKind::Hs(1.0))?);
    }
    Ok(())
}
