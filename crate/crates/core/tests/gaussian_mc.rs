//! Monte Carlo cross-checks of the Gaussian closed forms.

use granular_kinetics::ensemble::{energy_dissipation_estimate, moments};
use granular_kinetics::gaussian::{
    dissipation_of_maxwellian, pair_moment_u3, pair_moment_v2u3, radial_moment, sample_maxwellian, MaxwellianParams,
};
use granular_kinetics::kernel::{angular_moments, CrossSection};
use granular_kinetics::rng::{stream, Purpose};
use rand::Rng;

fn within(value: f64, target: f64, se: f64, k: f64) -> bool {
    (value - target).abs() <= k * se
}

#[test]
fn sampled_maxwellian_moments() {
    let p = MaxwellianParams::centered(3, 2.0, 0.5).unwrap();
    let e = sample_maxwellian(&p, 200_000, &mut stream(3, 0, Purpose::Init)).unwrap();
    let m = moments(&e);
    assert_eq!(m.rho, 2.0);
    // Relative sampling error of a radial moment of order 2k is about
    // sqrt(var/n); 1% is over five standard errors here.
    for (k, got) in [(1.0, m.energy), (1.5, m.m_32), (2.0, m.m_2), (0.5, m.m_half)] {
        let exact = radial_moment(&p, k).unwrap();
        assert!((got / exact - 1.0).abs() < 0.01, "k = {k}: {got} vs {exact}");
    }
    assert!((m.theta / 0.5 - 1.0).abs() < 0.01);
}

#[test]
fn pair_moments_by_direct_sampling() {
    let p = MaxwellianParams::centered(3, 1.0, 0.8).unwrap();
    let mut rng = stream(5, 0, Purpose::Analysis);
    let n = 400_000;
    let sd = 0.8f64.sqrt();
    let (mut s1, mut s1q, mut s2, mut s2q) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let mut u2 = 0.0;
        let mut v2 = 0.0;
        for _ in 0..3 {
            let a: f64 = sd * rng.sample::<f64, _>(rand_distr::StandardNormal);
            let b: f64 = sd * rng.sample::<f64, _>(rand_distr::StandardNormal);
            u2 += (a - b) * (a - b);
            v2 += a * a;
        }
        let u3 = u2 * u2.sqrt();
        s1 += u3;
        s1q += u3 * u3;
        s2 += v2 * u3;
        s2q += (v2 * u3).powi(2);
    }
    let nf = n as f64;
    let se = |s: f64, q: f64| ((q / nf - (s / nf).powi(2)) / nf).sqrt();
    assert!(within(s1 / nf, pair_moment_u3(&p).unwrap(), se(s1, s1q), 5.0));
    assert!(within(s2 / nf, pair_moment_v2u3(&p).unwrap(), se(s2, s2q), 5.0));
}

#[test]
fn dissipation_estimator_is_consistent_with_oracle() {
    let p = MaxwellianParams::centered(3, 1.0, 1.0).unwrap();
    let am = angular_moments(&CrossSection::hard_sphere(1.0).unwrap()).unwrap();
    let e = sample_maxwellian(&p, 100_000, &mut stream(9, 0, Purpose::Init)).unwrap();
    let (d, se) = energy_dissipation_estimate(&e, &am, 200_000, &mut stream(9, 0, Purpose::Diagnostics)).unwrap();
    let exact = dissipation_of_maxwellian(&p, &am).unwrap();
    // Sample-to-population error adds to the pair-sampling error.
    assert!((d - exact).abs() <= 5.0 * se + 0.01 * exact, "{d} ± {se} vs {exact}");
    assert!((exact - std::f64::consts::PI / 2.0 * 18.054).abs() < 1e-3);
}
