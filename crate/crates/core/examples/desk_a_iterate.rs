//! One prescribed-energy level step in the committed desk configuration:
//! residual contract, energy gap and stress, and the inductive-bound ledger.
//! Optional argument: grid size (default from the configuration).

use wns::cli::{run_scheme, RunConfig, VariantKey};
use wns::noise::SeedSchedule;

fn main() -> anyhow::Result<()> {
    let mut cfg = RunConfig::desk(VariantKey::A);
    if let Some(n) = std::env::args().nth(1) {
        cfg.grid_n = n.parse()?;
    }
    let out = run_scheme(&cfg, &SeedSchedule::new(cfg.seed), false)?;
    println!("window [{}, {}], stop {:?}, M₀ calibrated {:.3}", out.prepared.t_lo, out.prepared.t_hi, out.prepared.stop.reason, out.m0_calibrated);
    println!("residual max {:.2e}, divergence ok {}", out.run.residual_max(), out.div_ok());
    let t1 = cfg.params()?.t_q(1);
    for (l0, r) in out.run.level0.iter().zip(out.run.last_rows()).filter(|(l, _)| l.t >= t1).step_by(8) {
        println!(
            "t = {:>7.4}: gap {:.3} → {:.3}, ‖R̊‖_L1 {:.3e} → {:.3e} (lin {:.2e}, osc {:.2e}, cor {:.2e})",
            r.t,
            l0.gap.unwrap_or(0.0),
            r.gap.unwrap_or(0.0),
            l0.r_l1,
            r.r_l1,
            r.parts_l1.r_lin,
            r.parts_l1.r_osc,
            r.parts_l1.r_cor
        );
    }
    for b in &out.run.bounds {
        println!("{:<20} {:<28} worst {:>10.3e} pass {}", b.family, b.zone, b.worst, b.pass);
    }
    Ok(())
}
