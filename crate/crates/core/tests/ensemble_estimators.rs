use granular_kinetics::ensemble::{
    energy_bounds_check, energy_dissipation_estimate, equal_probability_edges, l1_distance, moments, pinsker_check,
    povzner_envelope, relative_entropy_against, relative_entropy_estimate, ParticleEnsemble, RadialHistogram,
    DEFAULT_BINS,
};
use granular_kinetics::gaussian::{sample_maxwellian, sample_mixture, MaxwellianParams};
use granular_kinetics::kernel::{angular_moments, CrossSection};
use granular_kinetics::rng::{stream, Purpose};

fn hs() -> granular_kinetics::kernel::AngularMoments {
    angular_moments(&CrossSection::hard_sphere(1.0).unwrap()).unwrap()
}

/// `b1 ρ² · mean_{i≠j} |v_i - v_j|³` over every ordered pair.
fn brute_force_de(e: &ParticleEnsemble, b1: f64) -> f64 {
    let n = e.count();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let u2: f64 = e
                    .velocity(i)
                    .iter()
                    .zip(e.velocity(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                sum += u2 * u2.sqrt();
            }
        }
    }
    b1 * e.rho() * e.rho() * sum / (n * (n - 1)) as f64
}

#[test]
fn dissipation_estimate_matches_all_pairs_sum() {
    let p = MaxwellianParams::centered(3, 1.5, 0.7).unwrap();
    let e = sample_maxwellian(&p, 400, &mut stream(21, 0, Purpose::Init)).unwrap();
    let am = hs();
    let exact = brute_force_de(&e, am.b1);
    let (est, se) = energy_dissipation_estimate(&e, &am, 400_000, &mut stream(21, 0, Purpose::Diagnostics)).unwrap();
    assert!((est - exact).abs() <= 4.0 * se, "{est} ± {se} vs {exact}");
    assert!(energy_dissipation_estimate(&e, &am, 99, &mut stream(1, 0, Purpose::Diagnostics)).is_err());
}

#[test]
fn two_particle_ensemble_has_exact_moments() {
    let e = ParticleEnsemble::new(3, 2.0, vec![1.0, 0.0, 0.0, -1.0, 0.0, 0.0]).unwrap();
    let m = moments(&e);
    assert_eq!(m.energy, 2.0);
    assert!((m.theta - 2.0 / 6.0).abs() < 1e-15);
    assert_eq!(m.momentum, vec![0.0, 0.0, 0.0]);
    assert_eq!(m.m_3, 2.0);
    let am = hs();
    assert!((brute_force_de(&e, am.b1) - am.b1 * 4.0 * 8.0).abs() < 1e-12);
}

#[test]
fn maxwellian_sample_is_close_to_its_density() {
    let p = MaxwellianParams::centered(3, 1.0, 1.0).unwrap();
    let n = 200_000;
    let e = sample_maxwellian(&p, n, &mut stream(4, 0, Purpose::Init)).unwrap();
    let f = sample_maxwellian(&p, n, &mut stream(4, 1, Purpose::Init)).unwrap();
    let d = l1_distance(&e, &p, 2, DEFAULT_BINS).unwrap();
    // Two independent samples sit √2 times further apart than either from the density.
    let edges = equal_probability_edges(&p, DEFAULT_BINS);
    let zero = [0.0; 3];
    let d12 = RadialHistogram::from_ensemble(&e, &edges, &zero)
        .l1_between(&RadialHistogram::from_ensemble(&f, &edges, &zero), 2)
        .unwrap();
    let noise = d12 / 2f64.sqrt();
    assert!(
        d > 0.5 * noise && d < 2.0 * noise,
        "L1_2 distance {d} vs sampling noise {noise}"
    );
    // Partition KL of a multinomial sample is about (bins - 1) / (2n).
    let h = relative_entropy_estimate(&e, DEFAULT_BINS).unwrap();
    assert!(
        h < 5.0 * (DEFAULT_BINS - 1) as f64 / (2.0 * n as f64),
        "relative entropy {h}"
    );
    assert!(pinsker_check(&e, DEFAULT_BINS).unwrap().holds());
    // A wrong temperature is far away.
    let q = MaxwellianParams::centered(3, 1.0, 1.3).unwrap();
    assert!(l1_distance(&e, &q, 2, DEFAULT_BINS).unwrap() > 10.0 * d);
    assert!(relative_entropy_against(&e, &q, DEFAULT_BINS).unwrap() > 10.0 * h);
}

#[test]
fn bimodal_state_has_positive_entropy_and_pinsker_holds() {
    let plus = MaxwellianParams::new(0.5, vec![1.5, 0.0, 0.0], 0.2).unwrap();
    let minus = MaxwellianParams::new(0.5, vec![-1.5, 0.0, 0.0], 0.2).unwrap();
    let e = sample_mixture(
        &[(0.5, plus), (0.5, minus)],
        1.0,
        100_000,
        &mut stream(6, 0, Purpose::Init),
    )
    .unwrap();
    let h = relative_entropy_estimate(&e, DEFAULT_BINS).unwrap();
    assert!(h > 0.05, "{h}");
    let pc = pinsker_check(&e, DEFAULT_BINS).unwrap();
    assert!(pc.holds(), "{pc:?}");
    assert!(!povzner_envelope(&e).per_order.is_empty());
}

#[test]
fn energy_bounds_bracket_the_quasi_elastic_maxwellian() {
    let am = hs();
    let theta = 9.0 / (256.0 * std::f64::consts::PI);
    let p = MaxwellianParams::centered(3, 1.0, theta).unwrap();
    let e = sample_maxwellian(&p, 50_000, &mut stream(8, 0, Purpose::Init)).unwrap();
    let b = energy_bounds_check(&e, 0.99, &am);
    assert!(b.lower_ok && b.upper_ok, "{b:?}");
    let (lo, hi) = b.margins();
    assert!(lo > 0.0 && hi > 0.0);
    // A much colder state violates the lower bound.
    let cold = e.scaled(0.3);
    assert!(!energy_bounds_check(&cold, 0.99, &am).lower_ok);
    assert!(povzner_envelope(&e).is_flat());
}
