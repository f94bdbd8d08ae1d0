//! The six rational directions and the coefficient map `R ↦ γ_ξ(R)` with
//! `R = Σ γ_ξ² ξ⊗ξ` near the identity.

use wns::geometry::{frobenius_distance_to_identity, DirectionSet, IDENTITY};

fn main() -> anyhow::Result<()> {
    let set = DirectionSet::build();
    for f in &set.frames {
        println!("ξ = {:?}", f.xi_f64());
    }
    println!("admissible radius {:.4}, c_Λ = {:.3}", set.radius_eff, set.c_lambda());
    println!("γ²(Id) = {:?}", set.gamma_sq_unchecked(&IDENTITY));

    let r = [[1.1, 0.05, -0.02], [0.05, 0.95, 0.03], [-0.02, 0.03, 1.0]];
    let g = set.gamma_coeffs(&r)?;
    let back = set.reconstruct(&g.map(|x| x * x));
    let err: f64 = (0..9).map(|k| (back[k / 3][k % 3] - r[k / 3][k % 3]).abs()).fold(0.0, f64::max);
    println!("‖R − Id‖_F = {:.3}, γ = {g:.4?}, reconstruction error {err:.2e}", frobenius_distance_to_identity(&r));
    Ok(())
}
