//! A single original-variable run: temperature against the t^-2 decay.

use granular_kinetics::dsmc::{Dsmc, DsmcConfig, Mode};
use granular_kinetics::ensemble::DiagnosticsSpec;
use granular_kinetics::gaussian::{sample_maxwellian, MaxwellianParams};
use granular_kinetics::kernel::{angular_moments, CrossSection, RestitutionParams};
use granular_kinetics::rng::{stream, Purpose};

fn main() -> granular_kinetics::Result<()> {
    let n = 20_000;
    let alpha = 0.9;
    let cs = CrossSection::hard_sphere(1.0)?;
    let p = MaxwellianParams::centered(3, 1.0, 1.0)?;
    let e = sample_maxwellian(&p, n, &mut stream(1, 0, Purpose::Init))?;
    let mut sim = Dsmc::new(
        e,
        DsmcConfig::new(n, Mode::Original),
        RestitutionParams::new(alpha, 1.0)?,
        cs.clone(),
        0,
    )?;
    let spec = DiagnosticsSpec {
        moments: angular_moments(&cs)?,
        pair_samples: 5000,
        bins: 64,
        reference: p,
    };
    let tau = 1.0 - alpha;
    let times: Vec<f64> = (0..=8).map(|k| (2f64.powi(k) - 1.0) / tau).collect();
    println!("{:>10} {:>12} {:>14}", "t", "theta", "theta(1+tau t)^2");
    for r in sim.run(&times, &spec)? {
        println!(
            "{:>10.2} {:>12.5e} {:>14.6}",
            r.t,
            r.theta,
            r.theta * (1.0 + tau * r.t).powi(2)
        );
    }
    println!(
        "{} collisions, {} majorant violations",
        sim.totals().accepted,
        sim.totals().majorant_violations
    );
    Ok(())
}
