use granular_kinetics::dsmc::{step, transform_rescaled_to_original, Dsmc, DsmcConfig, Mode};
use granular_kinetics::ensemble::{moments, DiagnosticsSpec};
use granular_kinetics::gaussian::{dissipation_of_maxwellian, sample_maxwellian, MaxwellianParams};
use granular_kinetics::kernel::{angular_moments, CrossSection, RestitutionParams};
use granular_kinetics::rng::{stream, Purpose};
use granular_kinetics::stats::mean_se;

fn solver(n: usize, alpha: f64, mode: Mode, replica: u64) -> Dsmc {
    let p = MaxwellianParams::centered(3, 1.0, 1.0).unwrap();
    let mut e = sample_maxwellian(&p, n, &mut stream(1, replica, Purpose::Init)).unwrap();
    e.recenter();
    Dsmc::new(
        e,
        DsmcConfig::new(n, mode),
        RestitutionParams::new(alpha, 1.0).unwrap(),
        CrossSection::hard_sphere(1.0).unwrap(),
        replica,
    )
    .unwrap()
}

fn spec() -> DiagnosticsSpec {
    let am = angular_moments(&CrossSection::hard_sphere(1.0).unwrap()).unwrap();
    DiagnosticsSpec {
        moments: am,
        pair_samples: 1000,
        bins: 32,
        reference: MaxwellianParams::centered(3, 1.0, 1.0).unwrap(),
    }
}

#[test]
fn elastic_run_conserves_energy_and_momentum() {
    let mut s = solver(5000, 1.0, Mode::Original, 0);
    let before = moments(s.ensemble());
    s.advance_to(5.0).unwrap();
    let after = moments(s.ensemble());
    assert!(s.totals().accepted > 10_000);
    assert!((after.energy - before.energy).abs() <= 1e-12 * before.energy);
    for k in 0..3 {
        assert!((after.momentum[k] - before.momentum[k]).abs() <= 1e-12);
    }
    assert!((s.time() - 5.0).abs() < 1e-12);
}

#[test]
fn elastic_rescaled_mode_is_the_same_dynamics() {
    let mut a = solver(2000, 1.0, Mode::Original, 3);
    let mut b = solver(2000, 1.0, Mode::Rescaled, 3);
    a.advance_to(1.0).unwrap();
    b.advance_to(1.0).unwrap();
    assert!((a.ensemble().energy() / b.ensemble().energy() - 1.0).abs() < 1e-12);
}

#[test]
fn runs_are_reproducible_and_replicas_differ() {
    let run = |replica| {
        let mut s = solver(3000, 0.9, Mode::Rescaled, replica);
        s.run(&[0.0, 0.5, 1.0], &spec()).unwrap()
    };
    assert_eq!(run(0), run(0));
    assert_ne!(run(0), run(1));
}

#[test]
fn inelastic_energy_decays_at_the_dissipation_rate() {
    // Original variables: E'(0) = -(1 - α²) D_E(M_{1,0,1}).
    let alpha = 0.8;
    let am = angular_moments(&CrossSection::hard_sphere(1.0).unwrap()).unwrap();
    let target = -(1.0 - alpha * alpha)
        * dissipation_of_maxwellian(&MaxwellianParams::centered(3, 1.0, 1.0).unwrap(), &am).unwrap();
    let h = 0.005;
    let rates: Vec<f64> = (0..40)
        .map(|r| {
            let mut s = solver(20_000, alpha, Mode::Original, r);
            let e0 = s.ensemble().energy();
            s.advance_to(h).unwrap();
            (s.ensemble().energy() - e0) / h
        })
        .collect();
    let (mean, se) = mean_se(&rates);
    // Re-centring the initial sample shifts E by O(1/n), inside the tolerance.
    assert!(
        (mean - target).abs() <= 4.0 * se + 0.01 * target.abs(),
        "{mean} ± {se} vs {target}"
    );
}

#[test]
fn stateless_step_balances_energy() {
    let p = MaxwellianParams::centered(3, 1.0, 1.0).unwrap();
    let mut e = sample_maxwellian(&p, 4000, &mut stream(2, 0, Purpose::Init)).unwrap();
    let mut cfg = DsmcConfig::new(4000, Mode::Rescaled);
    cfg.dt = 0.01;
    cfg.majorant_relvel = 12.0;
    let rp = RestitutionParams::new(0.7, 1.0).unwrap();
    let cs = CrossSection::hard_sphere(1.0).unwrap();
    let mut rng = stream(2, 0, Purpose::Dynamics);
    for _ in 0..20 {
        let st = step(&mut e, &cfg, &rp, &cs, &mut rng).unwrap();
        assert!(st.sum_of_deltas <= 0.0);
        assert!(st.stretch_energy > 0.0);
        assert!(st.balance_residual() < 1e-12, "{st:?}");
    }
    let m = moments(&e);
    assert!(m.momentum.iter().all(|p| p.abs() < 1e-14));
}

#[test]
fn rescaled_plateau_maps_to_haff_decay() {
    let mut s = solver(1000, 0.9, Mode::Rescaled, 0);
    let mut recs = s.run(&[0.0, 1.0, 5.0, 20.0], &spec()).unwrap();
    for r in &mut recs {
        r.theta = 0.25;
        r.energy = 0.75;
    }
    let rp = RestitutionParams::new(0.9, 1.0).unwrap();
    let out = transform_rescaled_to_original(&recs, &rp, 1.0).unwrap();
    assert_eq!(out.len(), recs.len());
    for r in &out {
        let expect = 0.25 / (1.0 + 0.1 * r.t).powi(2);
        assert!((r.theta / expect - 1.0).abs() < 1e-12);
        assert!((r.energy / r.theta - 3.0).abs() < 1e-12);
    }
    // Records before t = 0 in original variables are dropped for V0 > 1.
    assert_eq!(transform_rescaled_to_original(&recs, &rp, 2.0).unwrap().len(), 1);
}
