//! Stochastic Stokes convolution paths and their stopping times for both
//! constructions, plus a restart shift.

use wns::cli::{RunConfig, VariantKey};
use wns::noise::{restart_shift, simulate_noise, stopping_time, SeedSchedule};

fn main() -> anyhow::Result<()> {
    for key in [VariantKey::A, VariantKey::B] {
        let cfg = RunConfig::desk(key);
        let spec = cfg.noise_spec();
        let stop = cfg.stopping_params()?;
        println!("variant {key:?}: {} modes, C_G = {:.4e}, C_S = {:.3}", spec.modes().len(), spec.c_g(), stop.c_s);
        for seed in 0..5 {
            let z = simulate_noise(&spec, &cfg.noise_grid()?, cfg.dt, cfg.horizon_steps()?, &SeedSchedule::new(seed), 0)?;
            let rec = stopping_time(&z, &stop)?;
            println!(
                "  seed {seed}: stop at {:.4} ({:?}), ‖Z(T)‖ = {:.4}, E‖Z(T)‖² = {:.4}",
                rec.time,
                rec.reason,
                z.samples()[rec.index].norm_l2(),
                spec.expected_energy(rec.time)
            );
            if key == VariantKey::B {
                let shifted = restart_shift(&z, 1.0)?;
                println!("    restart at t = 1: Ẑ(0) = {:.1e}, ‖Ẑ(end)‖ = {:.4}", shifted.samples()[0].norm_l2(), shifted.samples().last().map_or(0.0, |f| f.norm_l2()));
            }
        }
    }
    Ok(())
}
