//! Steady rescaled profile: plateau temperature, distances, energy balance and bounds.

use granular_kinetics::config::RunConfig;
use granular_kinetics::experiments::profile_experiment;

fn main() -> granular_kinetics::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.set("alpha", "0.99")?;
    cfg.set("particles", "10000")?;
    cfg.set("replicas", "4")?;
    cfg.set("pair_samples", "5000")?;
    let out = profile_experiment(&cfg)?;
    print!("{}", out.report.to_text());
    println!("trace rows: {}", out.trace.len());
    Ok(())
}
