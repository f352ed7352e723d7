//! Lyapunov functional from two starting temperatures and agreement of their plateaus.

use granular_kinetics::config::RunConfig;
use granular_kinetics::experiments::lyapunov_monitor;

fn main() -> granular_kinetics::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.set("alpha", "0.99")?;
    cfg.set("particles", "10000")?;
    cfg.set("replicas", "4")?;
    cfg.set("pair_samples", "2000")?;
    let out = lyapunov_monitor(&cfg)?;
    print!("{}", out.report.to_text());
    println!("trace rows: {}", out.trace.len());
    Ok(())
}
