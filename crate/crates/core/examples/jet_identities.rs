//! Intermittent jets at λ = 128 on the slab quadrature: mean of W⊗W,
//! corrector and potential identities, disjointness, and the L^p scaling
//! across two frequencies.

use wns::geometry::DirectionSet;
use wns::jets::{check_jet_bounds, check_jet_identities, JetParams, Profiles, SlabQuadrature};

fn main() -> anyhow::Result<()> {
    let set = DirectionSet::build();
    let p = JetParams::ladder(128.0, &set)?;
    println!("λ = {}, r_⊥ = {:.5}, r_∥ = {:.5}, μ = {:.1}", p.lambda, p.r_perp, p.r_par, p.mu);
    let r = check_jet_identities(&set, &p, Profiles::standard(), SlabQuadrature::default(), 2_000);
    println!("⨍W⊗W − ξ⊗ξ: {:.2e}", r.mean_ww_error);
    println!("div(W + W^c): {:.2e}, curl curl V − W − W^c: {:.2e}", r.div_residual, r.curlcurl_residual);
    println!("min clearance {:.4}, disjoint {}, sampled overlap {}", r.min_clearance, r.disjoint, r.sampled_overlap_max);

    let q = JetParams::ladder(16384.0, &set)?;
    let rep = check_jet_bounds(&[p, q], Profiles::standard(), SlabQuadrature { m1: 256, m2: 256 });
    for row in rep.rows.iter().take(6) {
        println!("{} p={} ∂^{}∂_t^{}: ratios {:.3?}", row.quantity, row.p, row.n, row.m, row.ratios);
    }
    println!("all within factor 2: {}", rep.all_within_factor_2);
    Ok(())
}
