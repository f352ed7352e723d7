//! Instantaneous energy loss rate from a Maxwellian against the dissipation identity.

use granular_kinetics::config::RunConfig;
use granular_kinetics::experiments::dissipation_experiment;

fn main() -> granular_kinetics::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.set("alpha", "0.9")?;
    cfg.set("particles", "100000")?;
    cfg.set("replicas", "20")?;
    cfg.set("initial_theta", "1")?;
    let out = dissipation_experiment(&cfg)?;
    print!("{}", out.report.to_text());
    println!("trace rows: {}", out.trace.len());
    Ok(())
}
