//! One inelastic collision by hand, and the sampled scattering angle.

use granular_kinetics::kernel::{angular_moments, collision_energy_delta, post_collision, sample_sigma, CrossSection};
use granular_kinetics::rng::{stream, Purpose};

fn main() -> granular_kinetics::Result<()> {
    let v = [1.0, 0.5, 0.0];
    let w = [-1.0, 0.0, 0.25];
    let sigma = [0.0, 0.6, 0.8];
    for alpha in [1.0, 0.9, 0.5, 0.0] {
        let (a, b) = post_collision(&v, &w, &sigma, alpha)?;
        let de = collision_energy_delta(&v, &w, &sigma, alpha)?;
        println!("alpha {alpha:>3}: v' = {a:.4?}, v*' = {b:.4?}, energy change {de:.6}");
    }

    let cs = CrossSection::hard_sphere(1.0)?;
    let am = angular_moments(&cs)?;
    println!("b0 = {:.6}, b1 = {:.6}", am.b0, am.b1);
    let mut rng = stream(1, 0, Purpose::Dynamics);
    let n = 100_000;
    let u_hat = [0.0, 0.0, 1.0];
    let mut mean_cos = 0.0;
    for _ in 0..n {
        mean_cos += sample_sigma(&u_hat, &cs, &mut rng)?[2];
    }
    println!("mean u.sigma over {n} draws: {:.4} (uniform: 0)", mean_cos / n as f64);
    Ok(())
}
