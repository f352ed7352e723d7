//! Temperature decay exponent and prefactor of a cooling gas.

use granular_kinetics::config::RunConfig;
use granular_kinetics::experiments::haff_experiment;

fn main() -> granular_kinetics::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.set("alpha", "0.95")?;
    cfg.set("particles", "20000")?;
    cfg.set("replicas", "8")?;
    cfg.set("pair_samples", "2000")?;
    let out = haff_experiment(&cfg)?;
    let r = &out.report;
    for name in ["exponent_p", "prefactor_a", "predicted_prefactor", "plateau_theta"] {
        if let Some(e) = r.get(name) {
            println!("{name:<20} {:.5} ± {:.5}", e.value, e.se);
        }
    }
    println!("status: {}", r.status.as_str());
    Ok(())
}
