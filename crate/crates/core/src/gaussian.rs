//! Maxwellians, deterministic Gaussian oracles and the quasi-elastic theory
//! constants.
//!
//! Pair integrals `∬ M M_* F(v, v_*) dv dv_*` are reduced to products of
//! one-dimensional radial integrals through `x = (v + v_*)/√2`,
//! `y = (v - v_*)/√2`, under which two centred Maxwellians of equal
//! temperature factor into `M(x) M(y)`.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

use crate::ensemble::ParticleEnsemble;
use crate::error::{contract, Error, Result};
use crate::kernel::{sphere_area, AngularMoments};
use crate::quadrature;

/// Relative tolerance handed to the adaptive radial quadrature.
const QUAD_REL_TOL: f64 = 1e-13;

/// Mass, mean velocity and temperature of `M_{ρ,u,θ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxwellianParams {
    pub rho: f64,
    pub u: Vec<f64>,
    pub theta: f64,
}

impl MaxwellianParams {
    pub fn new(rho: f64, u: Vec<f64>, theta: f64) -> Result<Self> {
        if u.len() < 2 {
            return Err(contract("Maxwellian dimension must be at least 2"));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(contract(format!("rho must be positive, got {rho}")));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(contract(format!("theta must be positive, got {theta}")));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(contract("mean velocity must be finite"));
        }
        Ok(Self { rho, u, theta })
    }

    /// `M_{ρ,0,θ}` in dimension `dim`.
    pub fn centered(dim: usize, rho: f64, theta: f64) -> Result<Self> {
        Self::new(rho, vec![0.0; dim], theta)
    }

    pub fn dimension(&self) -> usize {
        self.u.len()
    }

    fn is_centered(&self) -> bool {
        self.u.iter().all(|x| *x == 0.0)
    }

    /// Energy `∫ M |v|² dv = ρ (N θ + |u|²)`.
    pub fn energy(&self) -> f64 {
        self.rho * (self.dimension() as f64 * self.theta + self.u.iter().map(|x| x * x).sum::<f64>())
    }
}

/// Pointwise value of `M_{ρ,u,θ}(v)`.
pub fn maxwellian_density(p: &MaxwellianParams, v: &[f64]) -> Result<f64> {
    if v.len() != p.dimension() {
        return Err(contract("velocity dimension does not match the Maxwellian"));
    }
    if !(p.theta > 0.0) {
        return Err(contract("theta must be positive"));
    }
    let d2: f64 = v.iter().zip(&p.u).map(|(a, b)| (a - b) * (a - b)).sum();
    let n = p.dimension() as f64;
    Ok(p.rho * (2.0 * PI * p.theta).powf(-0.5 * n) * (-d2 / (2.0 * p.theta)).exp())
}

/// Isotropic value of the centred Maxwellian at speed `r`.
pub(crate) fn radial_density(p: &MaxwellianParams, r: f64) -> f64 {
    let n = p.dimension() as f64;
    p.rho * (2.0 * PI * p.theta).powf(-0.5 * n) * (-r * r / (2.0 * p.theta)).exp()
}

fn check_moment_args(p: &MaxwellianParams, k: f64) -> Result<()> {
    if !(p.theta > 0.0) {
        return Err(contract("theta must be positive"));
    }
    if !p.is_centered() {
        return Err(contract(
            "radial moments are taken about the origin of a centred Maxwellian",
        ));
    }
    if !(2.0 * k > -(p.dimension() as f64)) {
        return Err(contract(format!("moment order 2k = {} must exceed -N", 2.0 * k)));
    }
    Ok(())
}

/// `m_k(M) = ∫ M |v|^{2k} dv = ρ (2θ)^k Γ(N/2 + k) / Γ(N/2)`.
pub fn radial_moment(p: &MaxwellianParams, k: f64) -> Result<f64> {
    check_moment_args(p, k)?;
    let h = 0.5 * p.dimension() as f64;
    Ok(p.rho * (2.0 * p.theta).powf(k) * (ln_gamma(h + k) - ln_gamma(h)).exp())
}

/// Adaptive quadrature of `|S^{N-1}| ∫_0^∞ r^{N-1} w(r) ρ(r) dr` for the
/// centred Maxwellian, with the cut-off radius confirmed by doubling.
fn radial_integral<W: Fn(f64) -> f64>(p: &MaxwellianParams, k_hint: f64, weight: W, split: Option<f64>) -> Result<f64> {
    let n = p.dimension();
    let area = sphere_area(n - 1);
    let f = |r: f64| area * r.powi(n as i32 - 1) * weight(r) * radial_density(p, r);
    let cutoff = (2.0 * p.theta).sqrt() * (40.0 + k_hint.max(0.0) * 40f64.ln()).sqrt();
    let over = |hi: f64| -> Result<f64> {
        match split {
            Some(s) if s > 0.0 && s < hi => Ok(quadrature::integrate(f, 0.0, s, QUAD_REL_TOL, 0.0)?
                + quadrature::integrate(f, s, hi, QUAD_REL_TOL, 0.0)?),
            _ => quadrature::integrate(f, 0.0, hi, QUAD_REL_TOL, 0.0),
        }
    };
    let a = over(cutoff)?;
    let b = a + quadrature::integrate(f, cutoff, 2.0 * cutoff, QUAD_REL_TOL, 1e-300)?;
    let residual = ((b - a) / b).abs();
    if residual > 1e-14 {
        return Err(Error::Numerical {
            what: "radial cut-off too small".into(),
            residual,
        });
    }
    Ok(b)
}

/// `m_k(M)` by one-dimensional radial quadrature.
pub fn radial_moment_quadrature(p: &MaxwellianParams, k: f64) -> Result<f64> {
    check_moment_args(p, k)?;
    radial_integral(p, k, |r| r.powf(2.0 * k), None)
}

fn unit_centered(p: &MaxwellianParams) -> Result<MaxwellianParams> {
    MaxwellianParams::centered(p.dimension(), 1.0, p.theta)
}

/// `∬ M M_* |u|³ dv dv_*`, reduced to `2^{3/2} ρ² ∫ M_{1,0,θ}(y) |y|³ dy`.
///
/// Depends only on the relative velocity, so the mean `u` drops out.
pub fn pair_moment_u3(p: &MaxwellianParams) -> Result<f64> {
    if !(p.theta > 0.0) {
        return Err(contract("theta must be positive"));
    }
    let unit = unit_centered(p)?;
    Ok(2f64.powf(1.5) * p.rho * p.rho * radial_moment_quadrature(&unit, 1.5)?)
}

/// `∬ M M_* |v|² |u|³ dv dv_*` for a centred Maxwellian, reduced to
/// `√2 ρ² [m_1(x) m_{3/2}(y) + m_{5/2}(y)]` with unit-mass radial moments.
pub fn pair_moment_v2u3(p: &MaxwellianParams) -> Result<f64> {
    if !(p.theta > 0.0) {
        return Err(contract("theta must be positive"));
    }
    if !p.is_centered() {
        return Err(contract("pair_moment_v2u3 requires a centred Maxwellian"));
    }
    let unit = unit_centered(p)?;
    let q1 = radial_moment_quadrature(&unit, 1.0)?;
    let q32 = radial_moment_quadrature(&unit, 1.5)?;
    let q52 = radial_moment_quadrature(&unit, 2.5)?;
    Ok(SQRT_2 * p.rho * p.rho * (q1 * q32 + q52))
}

/// Energy dissipation functional `D_E(M) = b1 ∬ M M_* |u|³`.
pub fn dissipation_of_maxwellian(p: &MaxwellianParams, moments: &AngularMoments) -> Result<f64> {
    Ok(moments.b1 * pair_moment_u3(p)?)
}

/// Constants of the quasi-elastic limit for given mass and kernel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryConstants {
    pub dimension: usize,
    pub rho: f64,
    /// Temperature of the limiting Maxwellian of the self-similar profiles.
    pub theta_bar_1: f64,
    /// `ρ N θ̄₁`.
    pub e_bar_1: f64,
    /// `ρ² N`.
    pub k1: f64,
    /// `2^{3/2} ρ² b1 m_{3/2}(M_{1,0,1})`.
    pub k2: f64,
    /// Normaliser of `φ₁ = c0 (|v|² - N θ̄₁) M_{ρ,0,θ̄₁}` in `L¹₂`.
    pub c0: f64,
}

/// `θ̄₁ = N² / (8 b1²) · m_{3/2}(M_{1,0,1})^{-2}` together with `k1`, `k2`
/// of `Ψ(θ) = k1 θ - k2 θ^{3/2}` and the normaliser `c0`.
pub fn quasi_elastic_temperature(moments: &AngularMoments, dim: usize, rho: f64) -> Result<TheoryConstants> {
    if !(moments.b1 > 0.0) {
        return Err(contract("b1 must be positive"));
    }
    if !(rho > 0.0) {
        return Err(contract("rho must be positive"));
    }
    let n = dim as f64;
    let m32 = radial_moment(&MaxwellianParams::centered(dim, 1.0, 1.0)?, 1.5)?;
    let theta_bar_1 = n * n / (8.0 * moments.b1 * moments.b1 * m32 * m32);
    let k1 = rho * rho * n;
    let k2 = 2f64.powf(1.5) * rho * rho * moments.b1 * m32;
    let c0 = phi1_normaliser(dim, rho, theta_bar_1)?;
    Ok(TheoryConstants {
        dimension: dim,
        rho,
        theta_bar_1,
        e_bar_1: rho * n * theta_bar_1,
        k1,
        k2,
        c0,
    })
}

/// `1 / ∫ |(|v|² - N θ̄₁)| M_{ρ,0,θ̄₁} (1 + |v|²) dv`, split at the sign change.
fn phi1_normaliser(dim: usize, rho: f64, theta: f64) -> Result<f64> {
    let g = MaxwellianParams::centered(dim, rho, theta)?;
    let shift = dim as f64 * theta;
    let norm = radial_integral(&g, 2.0, |r| (r * r - shift).abs() * (1.0 + r * r), Some(shift.sqrt()))?;
    Ok(1.0 / norm)
}

/// `Ψ(θ) = k1 θ - k2 θ^{3/2}`: the profile energy balance evaluated on `M_θ`.
pub fn psi(theta: f64, tc: &TheoryConstants) -> f64 {
    tc.k1 * theta - tc.k2 * theta.powf(1.5)
}

/// Quadrature evaluation of the first-order energy-eigenvalue identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenIdentity {
    /// `E(φ₁) = ∫ φ₁ |v|²`.
    pub e_phi1: f64,
    /// `D̃(Ḡ₁, φ₁) = b1 ∬ Ḡ₁ (φ₁)_* |u|³`.
    pub d_tilde: f64,
    /// `|2ρ E(φ₁) - 4 D̃ + ρ E(φ₁)|`.
    pub residual: f64,
}

impl EigenIdentity {
    /// `(2ρ E(φ₁) - 4 D̃) / E(φ₁)`, the slope of `μ_α` in `(1 - α)`.
    pub fn eigenvalue_slope(&self, rho: f64) -> f64 {
        (2.0 * rho * self.e_phi1 - 4.0 * self.d_tilde) / self.e_phi1
    }
}

pub fn energy_eigen_identity(moments: &AngularMoments, tc: &TheoryConstants, rho: f64) -> Result<EigenIdentity> {
    let g1 = MaxwellianParams::centered(tc.dimension, rho, tc.theta_bar_1)?;
    let shift = tc.dimension as f64 * tc.theta_bar_1;
    let e_phi1 = tc.c0 * (radial_moment_quadrature(&g1, 2.0)? - shift * radial_moment_quadrature(&g1, 1.0)?);
    let d_tilde = moments.b1 * tc.c0 * (pair_moment_v2u3(&g1)? - shift * pair_moment_u3(&g1)?);
    let residual = (2.0 * rho * e_phi1 - 4.0 * d_tilde + rho * e_phi1).abs();
    Ok(EigenIdentity {
        e_phi1,
        d_tilde,
        residual,
    })
}

/// `count` i.i.d. draws from `M_{ρ,u,θ}`, each carrying mass `ρ / count`.
pub fn sample_maxwellian<R: Rng + ?Sized>(p: &MaxwellianParams, count: usize, rng: &mut R) -> Result<ParticleEnsemble> {
    if count < 2 {
        return Err(contract("an ensemble needs at least two particles"));
    }
    let dim = p.dimension();
    let s = p.theta.sqrt();
    let mut velocities = Vec::with_capacity(count * dim);
    for _ in 0..count {
        for k in 0..dim {
            let z: f64 = rng.sample(StandardNormal);
            velocities.push(p.u[k] + s * z);
        }
    }
    ParticleEnsemble::new(dim, p.rho, velocities)
}

/// Mixture `Σ_i w_i M_{ρ w_i, u_i, θ_i}` sampled with component counts
/// proportional to the weights.
pub fn sample_mixture<R: Rng + ?Sized>(
    components: &[(f64, MaxwellianParams)],
    rho: f64,
    count: usize,
    rng: &mut R,
) -> Result<ParticleEnsemble> {
    if components.is_empty() {
        return Err(contract("mixture needs at least one component"));
    }
    let dim = components[0].1.dimension();
    let total: f64 = components.iter().map(|c| c.0).sum();
    let mut velocities = Vec::with_capacity(count * dim);
    let mut assigned = 0usize;
    for (idx, (w, p)) in components.iter().enumerate() {
        if p.dimension() != dim {
            return Err(contract("mixture components disagree on dimension"));
        }
        let m = if idx + 1 == components.len() {
            count - assigned
        } else {
            ((w / total) * count as f64).round() as usize
        };
        assigned += m;
        let s = p.theta.sqrt();
        for _ in 0..m {
            for k in 0..dim {
                let z: f64 = rng.sample(StandardNormal);
                velocities.push(p.u[k] + s * z);
            }
        }
    }
    ParticleEnsemble::new(dim, rho, velocities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{angular_moments, CrossSection};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn unit(dim: usize) -> MaxwellianParams {
        MaxwellianParams::centered(dim, 1.0, 1.0).unwrap()
    }

    #[test]
    fn density_point_values() {
        for dim in [2, 3, 4] {
            let v0 = maxwellian_density(&unit(dim), &vec![0.0; dim]).unwrap();
            assert!(rel(v0, (2.0 * PI).powf(-(dim as f64) / 2.0)) < 1e-15);
            let two = MaxwellianParams::centered(dim, 2.0, 1.0).unwrap();
            let v = vec![0.3; dim];
            assert!(
                rel(
                    maxwellian_density(&two, &v).unwrap(),
                    2.0 * maxwellian_density(&unit(dim), &v).unwrap()
                ) < 1e-15
            );
        }
        let d = maxwellian_density(&unit(3), &[1.0, 1.0, 1.0]).unwrap();
        assert!((d - 0.014167).abs() < 5e-7, "{d}");
        assert!(MaxwellianParams::centered(3, 1.0, 0.0).is_err());
    }

    #[test]
    fn density_integrates_to_mass() {
        let p = MaxwellianParams::centered(3, 2.5, 0.7).unwrap();
        let mass = radial_moment_quadrature(&p, 0.0).unwrap();
        assert!(rel(mass, 2.5) < 1e-12);
    }

    #[test]
    fn closed_form_moments_against_quadrature() {
        for dim in [2, 3, 5] {
            let p = MaxwellianParams::centered(dim, 1.3, 0.8).unwrap();
            for k in [0.5, 1.0, 1.5, 2.0, 2.5, 3.0] {
                let a = radial_moment(&p, k).unwrap();
                let b = radial_moment_quadrature(&p, k).unwrap();
                assert!(rel(a, b) < 1e-10, "dim={dim} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn known_moment_values() {
        for dim in [2usize, 3, 4] {
            let n = dim as f64;
            assert!(rel(radial_moment(&unit(dim), 1.0).unwrap(), n) < 1e-13);
            assert!(rel(radial_moment(&unit(dim), 2.0).unwrap(), n * (n + 2.0)) < 1e-13);
        }
        let m32 = radial_moment(&unit(3), 1.5).unwrap();
        assert!(rel(m32, 32.0 * PI / (2.0 * PI).powf(1.5)) < 1e-13);
        assert!((m32 - 6.383076).abs() < 1e-6);
        assert!(radial_moment(&MaxwellianParams::new(1.0, vec![1.0, 0.0, 0.0], 1.0).unwrap(), 1.0).is_err());
        assert!(radial_moment(&unit(3), -2.0).is_err());
    }

    #[test]
    fn pair_moments_and_scalings() {
        let m32 = radial_moment(&unit(3), 1.5).unwrap();
        let u3 = pair_moment_u3(&unit(3)).unwrap();
        assert!(rel(u3, 2f64.powf(1.5) * m32) < 1e-8);
        assert!((u3 - 18.0540).abs() < 1e-3);
        let rho2 = MaxwellianParams::centered(3, 2.0, 1.0).unwrap();
        assert!(rel(pair_moment_u3(&rho2).unwrap(), 4.0 * u3) < 1e-12);
        let hot = MaxwellianParams::centered(3, 1.0, 2.5).unwrap();
        assert!(rel(pair_moment_u3(&hot).unwrap(), 2.5f64.powf(1.5) * u3) < 1e-10);
        let moving = MaxwellianParams::new(1.0, vec![3.0, -1.0, 0.5], 1.0).unwrap();
        assert!(rel(pair_moment_u3(&moving).unwrap(), u3) < 1e-14);

        let v2u3 = pair_moment_v2u3(&unit(3)).unwrap();
        assert!(rel(v2u3, SQRT_2 * 9.0 * m32) < 1e-8);
        assert!((v2u3 - 81.244).abs() < 1e-3);
        let m32_2d = radial_moment(&unit(2), 1.5).unwrap();
        assert!(rel(pair_moment_v2u3(&unit(2)).unwrap(), SQRT_2 * 7.0 * m32_2d) < 1e-8);
    }

    #[test]
    fn quasi_elastic_temperature_hard_spheres() {
        let m = angular_moments(&CrossSection::hard_sphere(1.0).unwrap()).unwrap();
        let tc = quasi_elastic_temperature(&m, 3, 1.0).unwrap();
        assert!(rel(tc.theta_bar_1, 9.0 / (256.0 * PI)) < 1e-12);
        assert!((tc.theta_bar_1 - 0.0111906).abs() < 1e-7);
        assert!(rel(tc.theta_bar_1, (tc.k1 / tc.k2).powi(2)) < 1e-12);
        assert!(psi(tc.theta_bar_1, &tc).abs() <= 1e-12 * tc.k1 * tc.theta_bar_1);

        let m3 = angular_moments(&CrossSection::hard_sphere(3.0).unwrap()).unwrap();
        let tc3 = quasi_elastic_temperature(&m3, 3, 1.0).unwrap();
        assert!(rel(tc3.theta_bar_1, tc.theta_bar_1 / 9.0) < 1e-12);

        for rho in [0.5, 2.0] {
            let t = quasi_elastic_temperature(&m, 3, rho).unwrap();
            assert!(rel(t.theta_bar_1, tc.theta_bar_1) < 1e-14);
        }
    }

    #[test]
    fn psi_sign_structure() {
        let m = angular_moments(&CrossSection::hard_sphere(1.0).unwrap()).unwrap();
        let tc = quasi_elastic_temperature(&m, 3, 1.0).unwrap();
        let t = tc.theta_bar_1;
        let at4 = psi(4.0 * t, &tc);
        assert!(rel(at4, -4.0 * tc.k2 * t.powf(1.5)) < 1e-12);
        let quarter = psi(t / 4.0, &tc);
        assert!(rel(quarter, tc.k2 * t.powf(1.5) / 8.0) < 1e-12);
        assert!(psi(1e-12, &tc) > 0.0);
        for f in [0.1, 0.5, 0.9, 0.999] {
            assert!(psi(f * t, &tc) > 0.0);
            assert!(psi(t / f, &tc) < 0.0);
        }
    }

    #[test]
    fn eigen_identity_closed_forms() {
        for dim in [2usize, 3] {
            let cs = CrossSection::constant(dim, 1.0).unwrap();
            let m = angular_moments(&cs).unwrap();
            for rho in [0.5, 1.0, 2.0] {
                let tc = quasi_elastic_temperature(&m, dim, rho).unwrap();
                let id = energy_eigen_identity(&m, &tc, rho).unwrap();
                let n = dim as f64;
                let t2 = tc.theta_bar_1 * tc.theta_bar_1;
                assert!(rel(id.e_phi1, 2.0 * n * tc.c0 * rho * t2) < 1e-9);
                assert!(rel(id.d_tilde, 1.5 * n * tc.c0 * rho * rho * t2) < 1e-9);
                assert!(id.residual < 1e-8 * rho * id.e_phi1);
                assert!(rel(id.eigenvalue_slope(rho), -rho) < 1e-8);
            }
        }
    }

    #[test]
    fn phi1_is_normalised() {
        let m = angular_moments(&CrossSection::hard_sphere(1.0).unwrap()).unwrap();
        let tc = quasi_elastic_temperature(&m, 3, 1.0).unwrap();
        // Brute-force L¹₂ norm on a fine uniform radial grid.
        let g = MaxwellianParams::centered(3, 1.0, tc.theta_bar_1).unwrap();
        let n = 400_000;
        let r_max = 20.0 * tc.theta_bar_1.sqrt();
        let h = r_max / n as f64;
        let shift = 3.0 * tc.theta_bar_1;
        let norm: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                4.0 * PI * r * r * tc.c0 * (r * r - shift).abs() * radial_density(&g, r) * (1.0 + r * r) * h
            })
            .sum();
        assert!((norm - 1.0).abs() < 1e-6, "{norm}");
    }
}
