//! Gaussian identities against their closed forms, plus the quasi-elastic
//! temperature and the energy eigen-identity for hard spheres in 3D.

use granular_kinetics::config::RunConfig;
use granular_kinetics::experiments::gaussian_selftest;
use granular_kinetics::gaussian::{energy_eigen_identity, quasi_elastic_temperature};
use granular_kinetics::kernel::{angular_moments, CrossSection};

fn main() -> granular_kinetics::Result<()> {
    for row in gaussian_selftest(&RunConfig::default())? {
        println!(
            "{:<22} N={} rho={:<4} residual {:.1e}",
            row.identity, row.dimension, row.rho, row.rel_residual
        );
    }
    let am = angular_moments(&CrossSection::hard_sphere(1.0)?)?;
    let tc = quasi_elastic_temperature(&am, 3, 1.0)?;
    let eig = energy_eigen_identity(&am, &tc, 1.0)?;
    println!(
        "theta_bar_1 = {:.7} (9/(256 pi) = {:.7})",
        tc.theta_bar_1,
        9.0 / (256.0 * std::f64::consts::PI)
    );
    println!(
        "E(phi_1) = {:.6}, eigenvalue slope = {:.6}",
        eig.e_phi1,
        eig.eigenvalue_slope(1.0)
    );
    Ok(())
}
