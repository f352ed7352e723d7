//! Energy relaxation rate towards the plateau for two masses.

use granular_kinetics::config::RunConfig;
use granular_kinetics::experiments::eigenvalue_experiment;

fn main() -> granular_kinetics::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.set("alpha", "0.99")?;
    cfg.set("particles", "2000")?;
    cfg.set("replicas", "100")?;
    cfg.set("pair_samples", "2000")?;
    let out = eigenvalue_experiment(&cfg)?;
    print!("{}", out.report.to_text());
    println!("trace rows: {}", out.trace.len());
    Ok(())
}
