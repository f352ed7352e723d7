//! Energy evolution against its Maxwellian closure.

use granular_kinetics::config::RunConfig;
use granular_kinetics::experiments::energy_ode_check;

fn main() -> granular_kinetics::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.set("alpha", "0.995")?;
    cfg.set("particles", "10000")?;
    cfg.set("replicas", "4")?;
    cfg.set("pair_samples", "5000")?;
    let out = energy_ode_check(&cfg)?;
    print!("{}", out.report.to_text());
    println!("trace rows: {}", out.trace.len());
    Ok(())
}
