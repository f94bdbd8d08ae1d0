//! A two-segment restart chain: each segment restarts from the terminal
//! value of the previous one under the shifted noise, and the pieces are
//! glued into one trajectory.

use wns::cli::{RunConfig, VariantKey};
use wns::noise::SeedSchedule;
use wns::scheme::glue_segments;

fn main() -> anyhow::Result<()> {
    let mut cfg = RunConfig::desk(VariantKey::B);
    cfg.q_levels = 1;
    let scheme = cfg.scheme()?;
    let u0 = cfg.datum(&scheme.grid)?.expect("variant B has a datum");
    let g = glue_segments(
        &scheme,
        &cfg.noise_spec(),
        &cfg.noise_grid()?,
        &SeedSchedule::new(cfg.seed),
        &u0,
        2,
        cfg.stopping_params()?.c_s,
        cfg.noise.delta,
        cfg.q_levels,
    )?;
    for s in &g.segments {
        println!(
            "segment from {:.3}: T_L = {:.3} ({:?}), ‖u(start)‖ = {:.3}, N = {}, seam jump {:.1e}, residual {:.1e}",
            s.t_start, s.t_l, s.stop_reason, s.datum_norm, s.n, s.seam_jump, s.residual_max
        );
    }
    println!("glued {} samples on [0, {}], seam residual {:.2e}", g.glued.len(), g.glued.t_hi(), g.max_seam_residual);
    Ok(())
}
