//! Distance of the steady profile to the limit Maxwellian across restitution coefficients.

use granular_kinetics::config::RunConfig;
use granular_kinetics::experiments::elastic_limit_sweep;

fn main() -> granular_kinetics::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.set("particles", "10000")?;
    cfg.set("replicas", "4")?;
    cfg.set("pair_samples", "2000")?;
    let out = elastic_limit_sweep(&cfg)?;
    for e in out.report.estimates.iter().filter(|e| e.name.starts_with("corrected")) {
        println!("{:<36} {:.4e} ± {:.1e}", e.name, e.value, e.se);
    }
    for c in &out.report.checks {
        println!("{}: {} ({})", c.name, if c.passed { "pass" } else { "fail" }, c.detail);
    }
    Ok(())
}
