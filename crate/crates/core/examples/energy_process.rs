//! Energy processes `E^p` along a desk solution with e(t) = 4 + t: C_p from
//! the calibration rule versus the uncompensated C_p = 0.

use wns::cli::{default_gamma, energy_ledger, run_scheme, RunConfig, VariantKey};
use wns::noise::SeedSchedule;

fn main() -> anyhow::Result<()> {
    let cfg = RunConfig::desk(VariantKey::A);
    let out = run_scheme(&cfg, &SeedSchedule::new(cfg.seed), true)?;
    let u = out.solution.as_ref().expect("final level stored");
    let (c_g, gamma) = (cfg.noise_spec().c_g(), default_gamma(cfg.beta));
    for forced in [None, Some(0.0)] {
        let l = energy_ledger(u, &[1, 2, 3], c_g, gamma, out.prepared.t_hi, forced)?;
        println!("C_p {}: constants {:?}", forced.map_or("calibrated".into(), |c| c.to_string()), l.constants);
        for (c, v) in &l.processes {
            println!("  p = {}: C_p = {:.3e}, non-increasing {}, max step {:.3e}", v.p, c.c_p2, v.pass, v.max_increase);
        }
    }
    Ok(())
}
