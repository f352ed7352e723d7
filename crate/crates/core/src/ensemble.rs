//! Particle ensembles and every scalar diagnostic measured on them.
//!
//! An ensemble of `n` particles with mass `ρ` stands for the empirical
//! density `(ρ/n) Σ δ(v - v_i)`. Diagnostics never mutate the ensemble.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::gamma;

use crate::error::{contract, Result};
use crate::gaussian::{radial_density, MaxwellianParams};
use crate::kernel::{sphere_area, AngularMoments};
use crate::quadrature::composite_gauss_legendre;

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    rho: f64,
    velocities: Vec<f64>,
}

impl ParticleEnsemble {
    /// Velocities are stored row-major, `dim` components per particle.
    pub fn new(dim: usize, rho: f64, velocities: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(contract(format!("dimension must be at least 2, got {dim}")));
        }
        if !(rho.is_finite() && rho > 0.0) {
            return Err(contract(format!("rho must be positive, got {rho}")));
        }
        if !velocities.len().is_multiple_of(dim) || velocities.len() / dim < 2 {
            return Err(contract("an ensemble needs at least two complete velocity vectors"));
        }
        if velocities.iter().any(|x| !x.is_finite()) {
            return Err(contract("velocity components must be finite"));
        }
        Ok(Self { dim, rho, velocities })
    }

    /// Same as [`ParticleEnsemble::new`] followed by subtraction of the mean
    /// velocity, placing the ensemble in the zero-momentum class.
    pub fn with_zero_momentum(dim: usize, rho: f64, velocities: Vec<f64>) -> Result<Self> {
        let mut e = Self::new(dim, rho, velocities)?;
        e.recenter();
        Ok(e)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn count(&self) -> usize {
        self.velocities.len() / self.dim
    }

    /// Mass carried by each particle.
    pub fn weight(&self) -> f64 {
        self.rho / self.count() as f64
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub(crate) fn velocities_mut(&mut self) -> &mut [f64] {
        &mut self.velocities
    }

    pub fn mean_velocity(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim];
        for v in self.velocities.chunks_exact(self.dim) {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        let n = self.count() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }

    /// Subtracts the mean velocity; returns the removed mean.
    pub fn recenter(&mut self) -> Vec<f64> {
        let mean = self.mean_velocity();
        for v in self.velocities.chunks_exact_mut(self.dim) {
            for (x, m) in v.iter_mut().zip(&mean) {
                *x -= m;
            }
        }
        mean
    }

    /// Copy with every velocity multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            dim: self.dim,
            rho: self.rho,
            velocities: self.velocities.iter().map(|x| x * lambda).collect(),
        }
    }

    /// Copy representing mass `rho` with the same velocities.
    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(self.dim, rho, self.velocities.clone())
    }

    /// `Σ |v_i|²` times the particle weight.
    pub fn energy(&self) -> f64 {
        self.weight() * self.velocities.iter().map(|x| x * x).sum::<f64>()
    }
}

/// Mass, momentum, energy, temperature and homogeneous moments
/// `m_k = ∫ g |v|^{2k}` for `k ∈ {1/2, 3/2, 2, 3}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub rho: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
    /// `E / (ρ N)`.
    pub theta: f64,
    pub m_half: f64,
    pub m_32: f64,
    pub m_2: f64,
    pub m_3: f64,
}

pub fn moments(e: &ParticleEnsemble) -> Moments {
    let dim = e.dim;
    let mut momentum = vec![0.0; dim];
    let (mut s1, mut s2, mut s3, mut s4, mut s6) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for v in e.velocities.chunks_exact(dim) {
        let mut r2 = 0.0;
        for k in 0..dim {
            momentum[k] += v[k];
            r2 += v[k] * v[k];
        }
        let r = r2.sqrt();
        s1 += r;
        s2 += r2;
        s3 += r2 * r;
        s4 += r2 * r2;
        s6 += r2 * r2 * r2;
    }
    let w = e.weight();
    momentum.iter_mut().for_each(|p| *p *= w);
    let energy = w * s2;
    Moments {
        rho: e.rho,
        momentum,
        energy,
        theta: energy / (e.rho * dim as f64),
        m_half: w * s1,
        m_32: w * s3,
        m_2: w * s4,
        m_3: w * s6,
    }
}

/// The Maxwellian `M[g]` with the ensemble's mass, mean velocity and
/// temperature (about the mean).
pub fn matched_maxwellian(e: &ParticleEnsemble) -> Result<MaxwellianParams> {
    let mean = e.mean_velocity();
    let mut s2 = 0.0;
    for v in e.velocities.chunks_exact(e.dim) {
        for k in 0..e.dim {
            let d = v[k] - mean[k];
            s2 += d * d;
        }
    }
    let theta = s2 / (e.count() * e.dim) as f64;
    MaxwellianParams::new(e.rho, mean, theta)
}

/// Monte Carlo estimate of `D_E(g) = b1 ∬ g g_* |u|³` from `pair_samples`
/// uniformly drawn pairs `i ≠ j`; returns `(value, standard error)`.
pub fn energy_dissipation_estimate<R: Rng + ?Sized>(
    e: &ParticleEnsemble,
    moments: &AngularMoments,
    pair_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if pair_samples < 100 {
        return Err(contract("energy_dissipation_estimate needs at least 100 pair samples"));
    }
    let n = e.count();
    let (mut sum, mut sum2) = (0.0, 0.0);
    for _ in 0..pair_samples {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (e.velocity(i), e.velocity(j));
        let u2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let u3 = u2 * u2.sqrt();
        sum += u3;
        sum2 += u3 * u3;
    }
    let m = pair_samples as f64;
    let mean = sum / m;
    let var = ((sum2 / m - mean * mean) * m / (m - 1.0)).max(0.0);
    let scale = moments.b1 * e.rho * e.rho;
    Ok((scale * mean, scale * (var / m).sqrt()))
}

/// Bin count used by the histogram diagnostics unless configured otherwise.
pub const DEFAULT_BINS: usize = 64;

/// A reference density that is isotropic about the origin.
pub trait RadialReference {
    fn dimension(&self) -> usize;
    /// `∫_{r0 ≤ |v| < r1} f(v) ⟨v⟩^{weight_power} dv` (`r1` may be infinite).
    fn bin_integral(&self, r0: f64, r1: f64, weight_power: u32) -> f64;
}

impl RadialReference for MaxwellianParams {
    fn dimension(&self) -> usize {
        MaxwellianParams::dimension(self)
    }

    /// Exact, through chi-squared distribution functions of `|v - u|² / θ`.
    fn bin_integral(&self, r0: f64, r1: f64, weight_power: u32) -> f64 {
        let n = self.dimension() as f64;
        let cdf = |dof: f64, r: f64| -> f64 {
            if r.is_infinite() {
                1.0
            } else {
                ChiSquared::new(dof).expect("positive dof").cdf(r * r / self.theta)
            }
        };
        let mass = self.rho * (cdf(n, r1) - cdf(n, r0));
        match weight_power {
            0 => mass,
            2 => mass + self.rho * n * self.theta * (cdf(n + 2.0, r1) - cdf(n + 2.0, r0)),
            p => panic!("unsupported weight power {p}"),
        }
    }
}

/// An isotropic density given by its radial profile `f(|v|)`; bin integrals
/// use composite Gauss–Legendre quadrature.
pub struct RadialFn<F: Fn(f64) -> f64> {
    pub dim: usize,
    pub profile: F,
    /// Radius beyond which the density is treated as zero.
    pub r_max: f64,
}

impl<F: Fn(f64) -> f64> RadialReference for RadialFn<F> {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn bin_integral(&self, r0: f64, r1: f64, weight_power: u32) -> f64 {
        let hi = r1.min(self.r_max);
        if hi <= r0 {
            return 0.0;
        }
        let area = sphere_area(self.dim - 1);
        let panels = 16;
        let breaks: Vec<f64> = (0..=panels)
            .map(|k| r0 + (hi - r0) * k as f64 / panels as f64)
            .collect();
        composite_gauss_legendre(
            |r| area * r.powi(self.dim as i32 - 1) * (1.0 + r * r).powf(weight_power as f64 / 2.0) * (self.profile)(r),
            &breaks,
            8,
        )
    }
}

impl MaxwellianParams {
    /// Radial profile of a centred Maxwellian, for use with [`RadialFn`].
    pub fn radial_profile(&self) -> impl Fn(f64) -> f64 + '_ {
        move |r| radial_density(self, r)
    }
}

/// Histogram of `|v - center|` with masses and `⟨v⟩²`-weighted masses.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialHistogram {
    /// `bins + 1` increasing radii; the last is `+∞`.
    pub edges: Vec<f64>,
    pub center: Vec<f64>,
    pub masses: Vec<f64>,
    /// Bin sums of `w_i (1 + |v_i|²)` (the `L¹₂` weight, about the origin).
    pub weighted_masses: Vec<f64>,
    pub total_mass: f64,
}

/// `bins` equal-probability radial bins under `binning` (about its mean).
pub fn equal_probability_edges(binning: &MaxwellianParams, bins: usize) -> Vec<f64> {
    let chi = ChiSquared::new(binning.dimension() as f64).expect("positive dof");
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(0.0);
    for b in 1..bins {
        let q = chi.inverse_cdf(b as f64 / bins as f64);
        edges.push((q * binning.theta).sqrt());
    }
    edges.push(f64::INFINITY);
    edges
}

impl RadialHistogram {
    pub fn from_ensemble(e: &ParticleEnsemble, edges: &[f64], center: &[f64]) -> Self {
        let bins = edges.len() - 1;
        let mut masses = vec![0.0; bins];
        let mut weighted = vec![0.0; bins];
        let w = e.weight();
        for v in e.velocities.chunks_exact(e.dim) {
            let (mut r2c, mut r2) = (0.0, 0.0);
            for k in 0..e.dim {
                let d = v[k] - center[k];
                r2c += d * d;
                r2 += v[k] * v[k];
            }
            let r = r2c.sqrt();
            let b = edges.partition_point(|&x| x <= r).saturating_sub(1).min(bins - 1);
            masses[b] += w;
            weighted[b] += w * (1.0 + r2);
        }
        Self {
            edges: edges.to_vec(),
            center: center.to_vec(),
            total_mass: masses.iter().sum(),
            masses,
            weighted_masses: weighted,
        }
    }

    /// Per-bin averages of histograms sharing one binning.
    pub fn average(hists: &[RadialHistogram]) -> Result<Self> {
        let first = hists.first().ok_or_else(|| contract("nothing to average"))?;
        if hists.iter().any(|h| h.edges != first.edges) {
            return Err(contract("histograms use different binnings"));
        }
        let k = hists.len() as f64;
        let mut out = first.clone();
        for b in 0..out.masses.len() {
            out.masses[b] = hists.iter().map(|h| h.masses[b]).sum::<f64>() / k;
            out.weighted_masses[b] = hists.iter().map(|h| h.weighted_masses[b]).sum::<f64>() / k;
        }
        out.total_mass = out.masses.iter().sum();
        Ok(out)
    }

    /// Reference bin integrals on this histogram's binning.
    pub fn reference_masses(&self, reference: &dyn RadialReference, weight_power: u32) -> Vec<f64> {
        self.edges
            .windows(2)
            .map(|w| reference.bin_integral(w[0], w[1], weight_power))
            .collect()
    }

    fn bins_for(&self, weight_power: u32) -> &[f64] {
        match weight_power {
            0 => &self.masses,
            _ => &self.weighted_masses,
        }
    }

    /// `Σ_b |g_b - f_b|` for reference bin integrals `f_b`.
    pub fn l1_to(&self, reference: &[f64], weight_power: u32) -> f64 {
        self.bins_for(weight_power)
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Partition distance between two histograms on the same binning.
    pub fn l1_between(&self, other: &RadialHistogram, weight_power: u32) -> Result<f64> {
        if self.edges != other.edges {
            return Err(contract("histograms use different binnings"));
        }
        Ok(self.l1_to(other.bins_for(weight_power), weight_power))
    }
}

fn check_weight_power(p: u32) -> Result<()> {
    if p == 0 || p == 2 {
        Ok(())
    } else {
        Err(contract(format!("weight power must be 0 or 2, got {p}")))
    }
}

/// Edges used for isotropic comparisons about the origin: equal probability
/// under `M_{ρ,0,θ(g)}`.
pub fn origin_edges(e: &ParticleEnsemble, bins: usize) -> Result<Vec<f64>> {
    let m = moments(e);
    Ok(equal_probability_edges(
        &MaxwellianParams::centered(e.dim, e.rho, m.theta)?,
        bins,
    ))
}

/// Histogram approximation of `∫ |g - f| ⟨v⟩^p dv`, `p ∈ {0, 2}`.
pub fn l1_distance(
    e: &ParticleEnsemble,
    reference: &dyn RadialReference,
    weight_power: u32,
    bins: usize,
) -> Result<f64> {
    check_weight_power(weight_power)?;
    if reference.dimension() != e.dim {
        return Err(contract("reference dimension does not match the ensemble"));
    }
    let edges = origin_edges(e, bins)?;
    let h = RadialHistogram::from_ensemble(e, &edges, &vec![0.0; e.dim]);
    Ok(h.l1_to(&h.reference_masses(reference, weight_power), weight_power))
}

/// Plug-in `ρ Σ π_b ln(π_b / q_b)` of a histogram against reference bin masses.
fn partition_entropy(h: &RadialHistogram, reference: &[f64]) -> f64 {
    let total_ref: f64 = reference.iter().sum();
    let mut kl = 0.0;
    for (p, q) in h.masses.iter().zip(reference) {
        if *p > 0.0 && *q > 0.0 {
            let pi = p / h.total_mass;
            kl += pi * (pi / (q / total_ref)).ln();
        }
    }
    h.total_mass * kl
}

/// `H(g | ref)` estimated on `bins` equal-probability radial bins of `ref`.
pub fn relative_entropy_against(e: &ParticleEnsemble, reference: &MaxwellianParams, bins: usize) -> Result<f64> {
    if reference.dimension() != e.dim {
        return Err(contract("reference dimension does not match the ensemble"));
    }
    let edges = equal_probability_edges(reference, bins);
    let h = RadialHistogram::from_ensemble(e, &edges, &reference.u);
    let centred = MaxwellianParams::centered(e.dim, reference.rho, reference.theta)?;
    Ok(partition_entropy(&h, &h.reference_masses(&centred, 0)).max(0.0))
}

/// `H(g | M[g]) = ∫ g ln(g / M[g])`, clamped at zero.
pub fn relative_entropy_estimate(e: &ParticleEnsemble, bins: usize) -> Result<f64> {
    let m = matched_maxwellian(e)?;
    if !(m.theta > 0.0) {
        return Err(contract("degenerate ensemble (zero temperature)"));
    }
    relative_entropy_against(e, &m, bins)
}

/// Both sides of `‖g - M[g]‖²_{L¹} ≤ 2 ρ H(g | M[g])` on the histogram partition.
#[derive(Clone, Copy, Debug)]
pub struct PinskerCheck {
    pub l1_squared: f64,
    pub two_rho_entropy: f64,
}

impl PinskerCheck {
    pub fn holds(&self) -> bool {
        self.l1_squared <= self.two_rho_entropy * (1.0 + 1e-12) + 1e-300
    }
}

pub fn pinsker_check(e: &ParticleEnsemble, bins: usize) -> Result<PinskerCheck> {
    let m = matched_maxwellian(e)?;
    let edges = equal_probability_edges(&m, bins);
    let h = RadialHistogram::from_ensemble(e, &edges, &m.u);
    let centred = MaxwellianParams::centered(e.dim, m.rho, m.theta)?;
    let reference = h.reference_masses(&centred, 0);
    let l1 = h.l1_to(&reference, 0);
    Ok(PinskerCheck {
        l1_squared: l1 * l1,
        two_rho_entropy: 2.0 * e.rho * partition_entropy(&h, &reference),
    })
}

/// A-priori energy bounds on self-similar profiles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBounds {
    pub energy: f64,
    /// `N² α⁴ ρ / (2 (1 + α)² b2²)`.
    pub lower: f64,
    /// `4 ρ / b1²`.
    pub upper: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

impl EnergyBounds {
    /// `(E - lower) / lower` and `(upper - E) / upper`.
    pub fn margins(&self) -> (f64, f64) {
        (
            (self.energy - self.lower) / self.lower,
            (self.upper - self.energy) / self.upper,
        )
    }
}

/// Upper bound from the steady energy balance with Jensen and Hölder;
/// lower bound from the steady entropy balance
/// (`∬ G G_* |u| ≥ α² N ρ² / ((1 + α) b2)`) with Cauchy–Schwarz.
pub fn energy_bounds_check(e: &ParticleEnsemble, alpha: f64, moments: &AngularMoments) -> EnergyBounds {
    let n = e.dim as f64;
    let rho = e.rho;
    let energy = self::moments(e).energy;
    let lower = n * n * alpha.powi(4) * rho / (2.0 * (1.0 + alpha).powi(2) * moments.b2 * moments.b2);
    let upper = 4.0 * rho / (moments.b1 * moments.b1);
    EnergyBounds {
        energy,
        lower,
        upper,
        lower_ok: energy >= lower,
        upper_ok: energy <= upper,
    }
}

/// Moment envelope `m_k / ρ ≤ Γ(k + 1/2) X^k`, `k ∈ {1, 3/2, 2, 3}`.
#[derive(Clone, Debug, PartialEq)]
pub struct PovznerEnvelope {
    /// `(k, X_k)` with `X_k = (m_k / (ρ Γ(k + 1/2)))^{1/k}`.
    pub per_order: Vec<(f64, f64)>,
    /// The single `X = max_k X_k` bounding every order.
    pub x: f64,
}

impl PovznerEnvelope {
    /// Gaussian-like tails: the per-order `X_k` stay within a factor 1.5.
    pub fn is_flat(&self) -> bool {
        let min = self.per_order.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        self.x <= 1.5 * min
    }
}

pub fn povzner_envelope(e: &ParticleEnsemble) -> PovznerEnvelope {
    let m = moments(e);
    let per_order: Vec<(f64, f64)> = [(1.0, m.energy), (1.5, m.m_32), (2.0, m.m_2), (3.0, m.m_3)]
        .iter()
        .map(|&(k, mk)| (k, (mk / (m.rho * gamma(k + 0.5))).powf(1.0 / k)))
        .collect();
    let x = per_order.iter().map(|p| p.1).fold(0.0, f64::max);
    PovznerEnvelope { per_order, x }
}

/// One time-stamped row of scalar observables.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub rho: f64,
    pub momentum: Vec<f64>,
    pub energy: f64,
    pub theta: f64,
    pub m_half: f64,
    pub m_32: f64,
    pub m_2: f64,
    pub m_3: f64,
    pub de_est: f64,
    pub de_se: f64,
    pub rel_entropy: f64,
    pub l1_dist: f64,
    pub collisions: u64,
    pub replica: u64,
}

/// What [`record_diagnostics`] measures besides the moments.
#[derive(Clone, Debug)]
pub struct DiagnosticsSpec {
    pub moments: AngularMoments,
    pub pair_samples: usize,
    pub bins: usize,
    /// Reference for the `L¹₂` distance column.
    pub reference: MaxwellianParams,
}

pub fn record_diagnostics<R: Rng + ?Sized>(
    e: &ParticleEnsemble,
    t: f64,
    collisions: u64,
    replica: u64,
    spec: &DiagnosticsSpec,
    rng: &mut R,
) -> Result<DiagnosticsRecord> {
    let m = moments(e);
    let (de_est, de_se) = energy_dissipation_estimate(e, &spec.moments, spec.pair_samples, rng)?;
    Ok(DiagnosticsRecord {
        t,
        rho: m.rho,
        momentum: m.momentum,
        energy: m.energy,
        theta: m.theta,
        m_half: m.m_half,
        m_32: m.m_32,
        m_2: m.m_2,
        m_3: m.m_3,
        de_est,
        de_se,
        rel_entropy: relative_entropy_estimate(e, spec.bins)?,
        l1_dist: l1_distance(e, &spec.reference, 2, spec.bins)?,
        collisions,
        replica,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::sample_maxwellian;
    use crate::kernel::{angular_moments, CrossSection};
    use crate::rng::{stream, Purpose};

    fn hs_moments() -> AngularMoments {
        angular_moments(&CrossSection::hard_sphere(1.0).unwrap()).unwrap()
    }

    #[test]
    fn construction_contract() {
        assert!(ParticleEnsemble::new(3, 1.0, vec![0.0; 3]).is_err());
        assert!(ParticleEnsemble::new(3, 1.0, vec![0.0; 7]).is_err());
        assert!(ParticleEnsemble::new(3, 0.0, vec![0.0; 6]).is_err());
        assert!(ParticleEnsemble::new(3, 1.0, vec![f64::NAN; 6]).is_err());
        let e = ParticleEnsemble::with_zero_momentum(2, 1.0, vec![1.0, 2.0, 3.0, 5.0, 2.0, 2.0]).unwrap();
        let mean = e.mean_velocity();
        assert!(mean.iter().all(|m| m.abs() < 1e-15));
    }

    #[test]
    fn two_particle_moments() {
        let e = ParticleEnsemble::new(3, 1.0, vec![1.0, 0.0, 0.0, -1.0, 0.0, 0.0]).unwrap();
        let m = moments(&e);
        assert_eq!(m.momentum, vec![0.0, 0.0, 0.0]);
        assert_eq!(m.energy, 1.0);
        assert!((m.theta - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn moments_are_linear_in_rho_and_homogeneous() {
        let mut rng = stream(3, 0, Purpose::Analysis);
        let e = sample_maxwellian(&MaxwellianParams::centered(3, 1.0, 1.0).unwrap(), 1000, &mut rng).unwrap();
        let m = moments(&e);
        let m2 = moments(&e.with_rho(2.5).unwrap());
        assert!((m2.energy - 2.5 * m.energy).abs() < 1e-12 * m.energy);
        assert!((m2.m_3 - 2.5 * m.m_3).abs() < 1e-12 * m.m_3);
        let ms = moments(&e.scaled(1.7));
        assert!((ms.energy - 1.7f64.powi(2) * m.energy).abs() < 1e-12 * ms.energy);
        assert!((ms.m_32 - 1.7f64.powi(3) * m.m_32).abs() < 1e-12 * ms.m_32);
    }

    #[test]
    fn large_sample_energy_and_maxwellian_identities() {
        let mut rng = stream(5, 0, Purpose::Analysis);
        let e = sample_maxwellian(&MaxwellianParams::centered(3, 1.0, 1.0).unwrap(), 1_000_000, &mut rng).unwrap();
        let m = moments(&e);
        assert!((m.energy - 3.0).abs() < 0.01, "{}", m.energy);
        assert!((m.theta - 1.0).abs() < 0.005);
        assert!((m.m_2 - 15.0).abs() < 0.2);
        let tol = 3.0 / (3.0e6f64).sqrt();
        assert!(e.mean_velocity().iter().all(|x| x.abs() < tol));
    }

    #[test]
    fn dissipation_estimate_vanishes_and_scales() {
        let m = hs_moments();
        let e = ParticleEnsemble::new(3, 1.0, [0.3, -0.2, 0.9].repeat(10)).unwrap();
        let (v, se) = energy_dissipation_estimate(&e, &m, 500, &mut stream(1, 0, Purpose::Analysis)).unwrap();
        assert_eq!((v, se), (0.0, 0.0));

        let mut rng = stream(2, 0, Purpose::Analysis);
        let g = sample_maxwellian(&MaxwellianParams::centered(3, 1.0, 1.0).unwrap(), 500, &mut rng).unwrap();
        let (a, _) = energy_dissipation_estimate(&g, &m, 1000, &mut stream(9, 0, Purpose::Analysis)).unwrap();
        let (b, _) =
            energy_dissipation_estimate(&g.scaled(2.0), &m, 1000, &mut stream(9, 0, Purpose::Analysis)).unwrap();
        assert!((b - 8.0 * a).abs() < 1e-12 * b);
        assert!(energy_dissipation_estimate(&g, &m, 50, &mut rng).is_err());
    }

    #[test]
    fn dissipation_estimate_on_maxwellian_sample() {
        let m = hs_moments();
        let mut rng = stream(4, 0, Purpose::Analysis);
        let g = sample_maxwellian(&MaxwellianParams::centered(3, 1.0, 1.0).unwrap(), 200_000, &mut rng).unwrap();
        let (v, se) = energy_dissipation_estimate(&g, &m, 400_000, &mut rng).unwrap();
        let oracle = m.b1 * 18.05405;
        assert!((v - oracle).abs() < 3.0 * se + 0.01 * oracle, "{v} ± {se} vs {oracle}");
    }

    #[test]
    fn histogram_masses_sum_to_rho() {
        let mut rng = stream(6, 0, Purpose::Analysis);
        let p = MaxwellianParams::centered(3, 2.0, 0.5).unwrap();
        let e = sample_maxwellian(&p, 10_000, &mut rng).unwrap();
        let edges = equal_probability_edges(&p, 64);
        assert_eq!(edges.len(), 65);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));
        let h = RadialHistogram::from_ensemble(&e, &edges, &[0.0; 3]);
        assert!((h.total_mass - 2.0).abs() < 1e-12 * 2.0);
        let q = h.reference_masses(&p, 0);
        assert!(q.iter().all(|x| (x - 2.0 / 64.0).abs() < 1e-9));
    }

    #[test]
    fn maxwellian_bin_integrals_match_quadrature() {
        let p = MaxwellianParams::centered(3, 1.5, 0.7).unwrap();
        let f = RadialFn {
            dim: 3,
            profile: p.radial_profile(),
            r_max: 30.0,
        };
        for (a, b) in [(0.0, 0.4), (0.4, 1.1), (1.1, 3.0), (3.0, f64::INFINITY)] {
            for w in [0, 2] {
                let exact = p.bin_integral(a, b, w);
                let quad = f.bin_integral(a, b, w);
                assert!((exact - quad).abs() < 1e-10, "[{a},{b}) w={w}: {exact} vs {quad}");
            }
        }
    }

    #[test]
    fn entropy_is_small_for_matched_samples_and_positive_otherwise() {
        let mut rng = stream(7, 0, Purpose::Analysis);
        let e = sample_maxwellian(&MaxwellianParams::centered(3, 1.0, 1.0).unwrap(), 1_000_000, &mut rng).unwrap();
        let h = relative_entropy_estimate(&e, 64).unwrap();
        assert!((0.0..=0.01).contains(&h), "{h}");
        let hot = e.scaled(2f64.sqrt());
        let kl = relative_entropy_against(&hot, &MaxwellianParams::centered(3, 1.0, 1.0).unwrap(), 64).unwrap();
        let continuum = 1.5 * (1.0 - 2f64.ln());
        let unit = MaxwellianParams::centered(3, 1.0, 1.0).unwrap();
        let hot_ref = MaxwellianParams::centered(3, 1.0, 2.0).unwrap();
        let edges = equal_probability_edges(&unit, 64);
        let partition: f64 = edges
            .windows(2)
            .map(|w| {
                let p = hot_ref.bin_integral(w[0], w[1], 0);
                if p > 0.0 {
                    p * (p * 64.0).ln()
                } else {
                    0.0
                }
            })
            .sum();
        assert!(partition < continuum);
        assert!((kl - partition).abs() < 0.01 * partition, "{kl} vs {partition}");
        assert!(relative_entropy_estimate(&hot, 64).unwrap() < 0.01);
    }

    #[test]
    fn pinsker_holds_on_partitions() {
        let mut rng = stream(8, 0, Purpose::Analysis);
        let a = sample_maxwellian(&MaxwellianParams::centered(3, 1.0, 1.0).unwrap(), 5000, &mut rng).unwrap();
        let b = sample_maxwellian(
            &MaxwellianParams::new(1.0, vec![2.0, 0.0, 0.0], 1.0).unwrap(),
            5000,
            &mut rng,
        )
        .unwrap();
        let mut v = a.velocities().to_vec();
        v.extend_from_slice(b.velocities());
        let mix = ParticleEnsemble::new(3, 2.0, v).unwrap();
        for e in [&a, &mix] {
            let c = pinsker_check(e, 64).unwrap();
            assert!(c.holds(), "{c:?}");
        }
    }

    #[test]
    fn energy_bounds() {
        let m = hs_moments();
        let e = ParticleEnsemble::new(3, 1.0, vec![0.0; 6]).unwrap();
        let b = energy_bounds_check(&e, 0.5, &m);
        assert!(!b.lower_ok && b.upper_ok);
        let pi = std::f64::consts::PI;
        let elastic = energy_bounds_check(&e, 1.0, &m);
        assert!((elastic.lower - 9.0 / (128.0 * pi * pi)).abs() < 1e-15);
        assert!((elastic.upper - 16.0 / (pi * pi)).abs() < 1e-14);
        let mut rng = stream(9, 0, Purpose::Analysis);
        let g = sample_maxwellian(&MaxwellianParams::centered(3, 1.0, 0.0112).unwrap(), 10_000, &mut rng).unwrap();
        let b1 = energy_bounds_check(&g, 0.99, &m);
        let b2 = energy_bounds_check(&g.with_rho(2.0).unwrap(), 0.99, &m);
        assert!(b1.lower_ok && b1.upper_ok);
        assert_eq!((b1.lower_ok, b1.upper_ok), (b2.lower_ok, b2.upper_ok));
    }

    #[test]
    fn povzner_envelope_is_flat_for_gaussians() {
        let mut rng = stream(10, 0, Purpose::Analysis);
        let g = sample_maxwellian(&MaxwellianParams::centered(3, 1.0, 0.3).unwrap(), 200_000, &mut rng).unwrap();
        let env = povzner_envelope(&g);
        assert!(env.is_flat(), "{env:?}");
        let m = moments(&g);
        for (k, mk) in [(1.0, m.energy), (1.5, m.m_32), (2.0, m.m_2), (3.0, m.m_3)] {
            assert!(mk / m.rho <= gamma(k + 0.5) * env.x.powf(k) * (1.0 + 1e-12));
        }
    }
}
