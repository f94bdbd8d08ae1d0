//! Prescribed-datum runs with two pumping constants K on one noise path.

use wns::cli::{RunConfig, VariantKey};
use wns::noise::SeedSchedule;
use wns::scheme::compare_k;

fn main() -> anyhow::Result<()> {
    let mut cfg = RunConfig::desk(VariantKey::B);
    if let Some(l) = std::env::args().nth(1) {
        cfg.q_levels = l.parse()?;
    }
    let scheme = cfg.scheme()?;
    let prep = cfg.prepare_noise(&scheme, &SeedSchedule::new(cfg.seed))?;
    let c = compare_k(&scheme, &prep.noise, prep.t_hi, cfg.k.unwrap_or(10.0), cfg.k2.unwrap_or(40.0), cfg.q_levels)?;
    println!("{}", serde_json::to_string_pretty(&c)?);
    Ok(())
}
