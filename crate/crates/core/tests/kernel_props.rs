use granular_kinetics::kernel::{angular_moments, collision_energy_delta, post_collision, sample_sigma, CrossSection};
use granular_kinetics::rng::{stream, Purpose};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-50.0..50.0f64, 3)
}

fn unit3() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

proptest! {
    #[test]
    fn momentum_is_conserved(v in vec3(), w in vec3(), s in unit3(), alpha in 0.0..=1.0f64) {
        let (a, b) = post_collision(&v, &w, &s, alpha).unwrap();
        for k in 0..3 {
            let scale = v[k].abs().max(w[k].abs()).max(a[k].abs()).max(b[k].abs()).max(1e-300);
            prop_assert!(((a[k] + b[k]) - (v[k] + w[k])).abs() <= 4.0 * f64::EPSILON * scale);
        }
    }

    #[test]
    fn energy_change_matches_closed_form(v in vec3(), w in vec3(), s in unit3(), alpha in 0.0..=1.0f64) {
        let (a, b) = post_collision(&v, &w, &s, alpha).unwrap();
        let measured = norm2(&a) + norm2(&b) - norm2(&v) - norm2(&w);
        let closed = collision_energy_delta(&v, &w, &s, alpha).unwrap();
        prop_assert!(closed <= 0.0);
        prop_assert!((measured - closed).abs() <= 1e-12 * (norm2(&v) + norm2(&w)).max(1e-300));
    }

    #[test]
    fn relative_speed_contracts_by_known_factor(v in vec3(), w in vec3(), s in unit3(), alpha in 0.0..=1.0f64) {
        // |u'| ≤ |u|, with equality when elastic.
        let (a, b) = post_collision(&v, &w, &s, alpha).unwrap();
        let u: Vec<f64> = v.iter().zip(&w).map(|(x, y)| x - y).collect();
        let up: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        prop_assert!(norm2(&up).sqrt() <= norm2(&u).sqrt() * (1.0 + 1e-12) + 1e-12);
        if alpha == 1.0 {
            prop_assert!((norm2(&up) - norm2(&u)).abs() <= 1e-12 * norm2(&u).max(1e-300));
        }
    }

    #[test]
    fn swapping_partners_and_reflecting_sigma_swaps_outputs(v in vec3(), w in vec3(), s in unit3(), alpha in 0.0..=1.0f64) {
        let (a, b) = post_collision(&v, &w, &s, alpha).unwrap();
        let minus: Vec<f64> = s.iter().map(|x| -x).collect();
        let (a2, b2) = post_collision(&w, &v, &minus, alpha).unwrap();
        for k in 0..3 {
            prop_assert!((a[k] - b2[k]).abs() <= 1e-12 * (1.0 + a[k].abs()));
            prop_assert!((b[k] - a2[k]).abs() <= 1e-12 * (1.0 + b[k].abs()));
        }
    }
}

#[test]
fn hard_sphere_directions_are_uniform() {
    // For a constant kernel in 3D, û·σ is uniform on [-1, 1].
    let cs = CrossSection::hard_sphere(1.0).unwrap();
    let mut rng = stream(11, 0, Purpose::Analysis);
    let u_hat = [0.6, 0.0, 0.8];
    let bins = 20;
    let draws = 100_000;
    let mut counts = vec![0usize; bins];
    for _ in 0..draws {
        let s = sample_sigma(&u_hat, &cs, &mut rng).unwrap();
        let c: f64 = s.iter().zip(&u_hat).map(|(a, b)| a * b).sum();
        counts[(((c + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = draws as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    // 0.999 quantile of chi-squared with 19 degrees of freedom.
    assert!(chi2 < 43.82, "chi2 = {chi2}");
}

#[test]
fn angular_moments_of_constant_kernel() {
    let m = angular_moments(&CrossSection::hard_sphere(1.0).unwrap()).unwrap();
    let pi = std::f64::consts::PI;
    assert!((m.b0 - 4.0 * pi).abs() < 1e-14);
    assert!((m.b1 - pi / 2.0).abs() < 1e-14);
    assert_eq!(m.b2, m.b0);
    // b1 = (1/8) ∫ (1 - cos) b dσ = b0 / 8 for a constant kernel.
    let m2 = angular_moments(&CrossSection::constant(2, 1.0).unwrap()).unwrap();
    assert!((m2.b0 - 2.0 * pi).abs() < 1e-10);
    assert!((m2.b1 - m2.b0 / 8.0).abs() < 1e-10);
}
