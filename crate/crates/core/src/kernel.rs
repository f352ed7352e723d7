//! Collision kinematics and cross-section geometry.
//!
//! Velocities are plain `&[f64]` slices of length `N`. A binary collision with
//! restitution coefficient `alpha` and scattering direction `sigma` maps
//! `(v, v_*)` to
//!
//! ```text
//! v'   = w/2 + u'/2,   v'_* = w/2 - u'/2,
//! w    = v + v_*,      u    = v - v_*,
//! u'   = (1 - alpha)/2 * u + (1 + alpha)/2 * |u| * sigma.
//! ```
//!
//! The cross-section `b(x)` is a function of `x = û·σ`; surface integrals over
//! `S^{N-1}` reduce to `|S^{N-2}| ∫_0^π h(cos φ) sin^{N-2} φ dφ`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::gamma;

use crate::error::{contract, Error, Result};
use crate::quadrature::composite_gauss_legendre;

/// Tolerance on `|sigma| = 1`.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Rejection cap for non-uniform scattering kernels.
pub const SIGMA_REJECTION_CAP: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum CrossSectionForm {
    /// `b(x) = b'_0`, the three-dimensional hard-sphere kernel.
    HardSphereConstant { b0prime: f64 },
    /// Samples of `b` on a uniform grid over `[-1, 1]`, interpolated linearly.
    Tabulated(Vec<f64>),
}

/// Angular part `b(û·σ)` of the collision kernel `b(û·σ)|u|`.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossSection {
    dimension: usize,
    form: CrossSectionForm,
}

impl CrossSection {
    pub fn hard_sphere(b0prime: f64) -> Result<Self> {
        if !(b0prime.is_finite() && b0prime > 0.0) {
            return Err(contract(format!("b0prime must be positive, got {b0prime}")));
        }
        Ok(Self {
            dimension: 3,
            form: CrossSectionForm::HardSphereConstant { b0prime },
        })
    }

    /// Tabulated kernel in dimension `dimension`. Samples must be positive,
    /// finite and non-decreasing in `x`.
    pub fn tabulated(dimension: usize, samples: Vec<f64>) -> Result<Self> {
        if dimension < 2 {
            return Err(contract(format!("dimension must be at least 2, got {dimension}")));
        }
        if samples.len() < 2 {
            return Err(contract("a tabulated cross-section needs at least two samples"));
        }
        if samples.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(contract("tabulated cross-section must be positive and finite"));
        }
        if samples.windows(2).any(|w| w[1] < w[0]) {
            return Err(contract("tabulated cross-section must be non-decreasing"));
        }
        Ok(Self {
            dimension,
            form: CrossSectionForm::Tabulated(samples),
        })
    }

    /// Constant kernel in any dimension (a two-point table).
    pub fn constant(dimension: usize, value: f64) -> Result<Self> {
        if dimension == 3 {
            Self::hard_sphere(value)
        } else {
            Self::tabulated(dimension, vec![value, value])
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn form(&self) -> &CrossSectionForm {
        &self.form
    }

    /// `b(x)` for `x` in `[-1, 1]` (clamped).
    pub fn eval(&self, x: f64) -> f64 {
        match &self.form {
            CrossSectionForm::HardSphereConstant { b0prime } => *b0prime,
            CrossSectionForm::Tabulated(s) => {
                let x = x.clamp(-1.0, 1.0);
                let pos = (x + 1.0) * 0.5 * (s.len() - 1) as f64;
                let k = (pos.floor() as usize).min(s.len() - 2);
                let frac = pos - k as f64;
                s[k] + frac * (s[k + 1] - s[k])
            }
        }
    }

    /// `(b_m, b_M)`: lower and upper bounds of `b` on `[-1, 1]`.
    pub fn bounds(&self) -> (f64, f64) {
        match &self.form {
            CrossSectionForm::HardSphereConstant { b0prime } => (*b0prime, *b0prime),
            CrossSectionForm::Tabulated(s) => (s[0], s[s.len() - 1]),
        }
    }

    /// True when `b` is constant, so that `σ` is uniform on the sphere.
    pub fn is_uniform(&self) -> bool {
        let (lo, hi) = self.bounds();
        lo == hi
    }

    /// The kernel `λ b`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        match &self.form {
            CrossSectionForm::HardSphereConstant { b0prime } => Self::hard_sphere(b0prime * lambda),
            CrossSectionForm::Tabulated(s) => Self::tabulated(self.dimension, s.iter().map(|b| b * lambda).collect()),
        }
    }

    fn knots(&self) -> Vec<f64> {
        match &self.form {
            CrossSectionForm::HardSphereConstant { .. } => vec![],
            CrossSectionForm::Tabulated(s) => {
                let m = s.len() - 1;
                (0..=m).map(|k| -1.0 + 2.0 * k as f64 / m as f64).collect()
            }
        }
    }
}

/// Surface measure of the unit sphere `S^{k}` in `R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    let h = (k + 1) as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Angular integrals of the cross-section.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngularMoments {
    /// `∫ b(σ₁) dσ`, the total rate factor of the loss operator.
    pub b0: f64,
    /// `(1/8) ∫ (1 - û·σ) b(û·σ) dσ`, the energy-dissipation factor.
    pub b1: f64,
    /// `‖b‖_{L¹(S^{N-1})}`; equal to `b0` because `b > 0`.
    pub b2: f64,
}

/// Restitution coefficient and mass with the matching anti-drift rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestitutionParams {
    pub alpha: f64,
    pub rho: f64,
    /// Always `rho * (1 - alpha)`.
    pub tau_alpha: f64,
}

impl RestitutionParams {
    pub fn new(alpha: f64, rho: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(contract(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(contract(format!("rho must be positive, got {rho}")));
        }
        Ok(Self {
            alpha,
            rho,
            tau_alpha: rho * (1.0 - alpha),
        })
    }
}

fn check_collision_args(v: &[f64], v_star: &[f64], sigma: &[f64], alpha: f64) -> Result<()> {
    if v.len() != v_star.len() || v.len() != sigma.len() || v.len() < 2 {
        return Err(contract("velocity and sigma dimensions disagree"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(contract(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    let norm = sigma.iter().map(|s| s * s).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(contract(format!("sigma is not a unit vector (|sigma| = {norm})")));
    }
    Ok(())
}

/// Post-collisional velocities `(v', v'_*)`.
pub fn post_collision(v: &[f64], v_star: &[f64], sigma: &[f64], alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_collision_args(v, v_star, sigma, alpha)?;
    let mut a = v.to_vec();
    let mut b = v_star.to_vec();
    collide_in_place(&mut a, &mut b, sigma, alpha);
    Ok((a, b))
}

/// Energy change `|v'|² + |v'_*|² - |v|² - |v_*|²` of one collision, in the
/// closed form `-((1 - α²)/4) (1 - û·σ) |u|²`.
pub fn collision_energy_delta(v: &[f64], v_star: &[f64], sigma: &[f64], alpha: f64) -> Result<f64> {
    check_collision_args(v, v_star, sigma, alpha)?;
    let mut u2 = 0.0;
    let mut u_dot_sigma = 0.0;
    for k in 0..v.len() {
        let u = v[k] - v_star[k];
        u2 += u * u;
        u_dot_sigma += u * sigma[k];
    }
    Ok(energy_delta_from(u2, u_dot_sigma, alpha))
}

/// `-((1 - α²)/4)(|u|² - |u| u·σ)`; zero when `u = 0`.
#[inline(always)]
pub(crate) fn energy_delta_from(u2: f64, u_dot_sigma: f64, alpha: f64) -> f64 {
    if u2 == 0.0 {
        return 0.0;
    }
    -0.25 * (1.0 - alpha * alpha) * (u2 - u2.sqrt() * u_dot_sigma)
}

/// Applies the collision rule in place and returns the closed-form energy
/// change. `u = 0` leaves both velocities untouched.
#[inline(always)]
pub(crate) fn collide_in_place(v: &mut [f64], v_star: &mut [f64], sigma: &[f64], alpha: f64) -> f64 {
    let dim = v.len();
    let mut u2 = 0.0;
    let mut u_dot_sigma = 0.0;
    for k in 0..dim {
        let u = v[k] - v_star[k];
        u2 += u * u;
        u_dot_sigma += u * sigma[k];
    }
    if u2 == 0.0 {
        return 0.0;
    }
    let speed = u2.sqrt();
    let a = 0.5 * (1.0 - alpha);
    let c = 0.5 * (1.0 + alpha) * speed;
    for k in 0..dim {
        let half_w = 0.5 * (v[k] + v_star[k]);
        let half_up = 0.5 * (a * (v[k] - v_star[k]) + c * sigma[k]);
        v[k] = half_w + half_up;
        v_star[k] = half_w - half_up;
    }
    energy_delta_from(u2, u_dot_sigma, alpha)
}

/// `b0`, `b1`, `b2` of a cross-section.
///
/// The constant 3D kernel uses exact values; tabulated kernels use a
/// composite 256-node Gauss–Legendre rule in the polar angle, with knot
/// angles added as panel breaks, and a half-resolution rule as error estimate.
pub fn angular_moments(cs: &CrossSection) -> Result<AngularMoments> {
    if let CrossSectionForm::HardSphereConstant { b0prime } = cs.form {
        let b0 = 4.0 * PI * b0prime;
        return Ok(AngularMoments {
            b0,
            b1: 0.5 * PI * b0prime,
            b2: b0,
        });
    }
    let n = cs.dimension;
    let area = sphere_area(n - 2);
    let weight = |phi: f64| phi.sin().powi(n as i32 - 2);
    let knot_angles: Vec<f64> = cs.knots().iter().map(|x| x.clamp(-1.0, 1.0).acos()).collect();
    let integrate = |f: &dyn Fn(f64) -> f64, panels: usize| {
        let mut breaks: Vec<f64> = (0..=panels).map(|k| PI * k as f64 / panels as f64).collect();
        breaks.extend(knot_angles.iter().copied());
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        area * composite_gauss_legendre(f, &breaks, 8)
    };
    let f0 = |phi: f64| cs.eval(phi.cos()) * weight(phi);
    let f1 = |phi: f64| 0.125 * (1.0 - phi.cos()) * cs.eval(phi.cos()) * weight(phi);
    let (b0, b0_half) = (integrate(&f0, 32), integrate(&f0, 16));
    let (b1, b1_half) = (integrate(&f1, 32), integrate(&f1, 16));
    let residual = ((b0 - b0_half) / b0).abs().max(((b1 - b1_half) / b1).abs());
    if !(residual < 1e-9) {
        return Err(Error::Numerical {
            what: "angular moment quadrature".into(),
            residual,
        });
    }
    Ok(AngularMoments { b0, b1, b2: b0 })
}

/// Uniform direction on `S^{N-1}` written into `out`.
#[inline(always)]
pub(crate) fn uniform_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 3 {
        let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
        let phi = 2.0 * PI * rng.random::<f64>();
        let r = (1.0 - z * z).max(0.0).sqrt();
        let (s, c) = phi.sin_cos();
        out[0] = r * c;
        out[1] = r * s;
        out[2] = z;
        return;
    }
    loop {
        let mut norm2 = 0.0;
        for x in out.iter_mut() {
            *x = rng.sample(StandardNormal);
            norm2 += *x * *x;
        }
        if norm2 > 1e-300 {
            let inv = norm2.sqrt().recip();
            out.iter_mut().for_each(|x| *x *= inv);
            return;
        }
    }
}

/// Draws `σ` with density `b(û·σ)/b0` into `out`.
#[inline]
pub(crate) fn sample_sigma_into<R: Rng + ?Sized>(
    u_hat: &[f64],
    cs: &CrossSection,
    rng: &mut R,
    out: &mut [f64],
) -> Result<()> {
    if cs.is_uniform() {
        uniform_direction(rng, out);
        return Ok(());
    }
    let (_, b_max) = cs.bounds();
    for _ in 0..SIGMA_REJECTION_CAP {
        uniform_direction(rng, out);
        let x: f64 = u_hat.iter().zip(out.iter()).map(|(a, b)| a * b).sum();
        if rng.random::<f64>() * b_max < cs.eval(x) {
            return Ok(());
        }
    }
    Err(Error::Sampling(format!(
        "scattering direction rejection exceeded {SIGMA_REJECTION_CAP} iterations"
    )))
}

/// Scattering direction with density `b(û·σ)/b0` on the unit sphere.
pub fn sample_sigma<R: Rng + ?Sized>(u_hat: &[f64], cs: &CrossSection, rng: &mut R) -> Result<Vec<f64>> {
    if u_hat.len() != cs.dimension() {
        return Err(contract("u_hat dimension does not match the cross-section"));
    }
    let norm = u_hat.iter().map(|s| s * s).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(contract(format!("u_hat is not a unit vector (|u_hat| = {norm})")));
    }
    let mut out = vec![0.0; u_hat.len()];
    sample_sigma_into(u_hat, cs, rng, &mut out)?;
    Ok(out)
}
