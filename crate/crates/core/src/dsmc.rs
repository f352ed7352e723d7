//! Direct simulation Monte Carlo for the homogeneous inelastic Boltzmann
//! equation, in original or self-similar (rescaled) variables.
//!
//! Each step runs a Bird-type collision substep with a global
//! relative-speed majorant, then (rescaled mode) stretches every velocity by
//! `exp(τ_α dt)`, then optionally removes the mean velocity.

use rand::Rng;

use crate::ensemble::{record_diagnostics, DiagnosticsRecord, DiagnosticsSpec, ParticleEnsemble};
use crate::error::{contract, Error, Result};
use crate::kernel::{
    angular_moments, collide_in_place, sample_sigma_into, AngularMoments, CrossSection, RestitutionParams,
};
use crate::rng::{stream, Purpose, Stream};

/// Largest supported velocity dimension.
pub const MAX_DIM: usize = 8;

/// Upper bound on the expected collision count of a particle in one step.
pub const MAX_COLLISION_PROBABILITY: f64 = 0.2;

/// Upper bound on `τ_α dt` in rescaled mode.
pub const MAX_STRETCH_PER_STEP: f64 = 1e-3;

/// Ratio between the majorant and the largest sampled relative speed.
pub const MAJORANT_SAFETY: f64 = 1.5;

/// Pairs inspected when refreshing the majorant.
pub const MAJORANT_SUBSAMPLE: usize = 2048;

const MAX_CANDIDATES: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// `∂_t f = Q_α(f, f)`.
    Original,
    /// `∂_t g + τ_α ∇·(v g) = Q_α(g, g)`.
    Rescaled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DsmcConfig {
    pub particle_count: usize,
    /// Largest time step; the stepper may take shorter ones.
    pub dt: f64,
    /// Initial relative-speed majorant `u_max`.
    pub majorant_relvel: f64,
    pub majorant_refresh_interval: u64,
    pub seed: u64,
    pub mode: Mode,
    pub recenter_momentum: bool,
}

impl DsmcConfig {
    /// Defaults for `mode`: `dt = 0.05`, refresh every 10 steps, re-centring
    /// only in rescaled mode, majorant measured from the initial ensemble.
    pub fn new(particle_count: usize, mode: Mode) -> Self {
        Self {
            particle_count,
            dt: 0.05,
            majorant_relvel: 1.0,
            majorant_refresh_interval: 10,
            seed: 1,
            mode,
            recenter_momentum: mode == Mode::Rescaled,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.majorant_relvel.is_finite() && self.majorant_relvel > 0.0) {
            return Err(Error::Config("majorant_relvel must be positive".into()));
        }
        if self.majorant_refresh_interval == 0 {
            return Err(Error::Config("majorant_refresh_interval must be at least 1".into()));
        }
        Ok(())
    }
}

/// Bookkeeping of one step. Energies include the particle weight.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub dt: f64,
    pub candidates: u64,
    pub accepted: u64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// Sum of the closed-form per-collision energy changes.
    pub sum_of_deltas: f64,
    /// Energy added by the `exp(τ_α dt)` stretch.
    pub stretch_energy: f64,
    /// Energy removed by momentum re-centring (`-ρ |ū|²`).
    pub recenter_energy: f64,
    pub majorant_violations: u64,
}

impl StepStats {
    /// `|E_after - E_before - (Σδ + stretch + recentre)| / E_before`.
    pub fn balance_residual(&self) -> f64 {
        let expected = self.sum_of_deltas + self.stretch_energy + self.recenter_energy;
        let scale = self.energy_before.abs().max(f64::MIN_POSITIVE);
        (self.energy_after - self.energy_before - expected).abs() / scale
    }
}

/// Running totals over the life of a stepper.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Totals {
    pub steps: u64,
    pub candidates: u64,
    pub accepted: u64,
    pub majorant_violations: u64,
}

impl Totals {
    pub fn violation_fraction(&self) -> f64 {
        if self.accepted == 0 {
            0.0
        } else {
            self.majorant_violations as f64 / self.accepted as f64
        }
    }
}

/// Maximum and mean relative speed over `samples` random pairs.
fn pair_speed_survey<R: Rng + ?Sized>(e: &ParticleEnsemble, samples: usize, rng: &mut R) -> (f64, f64) {
    let n = e.count();
    let (mut max, mut sum) = (0.0f64, 0.0);
    for _ in 0..samples {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let u2: f64 = e
            .velocity(i)
            .iter()
            .zip(e.velocity(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let u = u2.sqrt();
        max = max.max(u);
        sum += u;
    }
    (max, sum / samples as f64)
}

/// Uniform unordered pair `(a, b)`, `a < b`, by multiply-shift reduction of
/// 64-bit draws (bias below `n / 2^64`).
#[inline(always)]
fn random_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (usize, usize) {
    let i = ((rng.next_u64() as u128 * n as u128) >> 64) as usize;
    let mut j = ((rng.next_u64() as u128 * (n - 1) as u128) >> 64) as usize;
    if j >= i {
        j += 1;
    }
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

fn round_stochastic<R: Rng + ?Sized>(x: f64, rng: &mut R) -> u64 {
    let floor = x.floor();
    let extra = if rng.random::<f64>() < x - floor { 1 } else { 0 };
    floor as u64 + extra
}

struct CollisionOutcome {
    accepted: u64,
    sum_of_deltas: f64,
    violations: u64,
}

/// Collision substep with a constant dimension so the inner loops unroll.
fn collide_dim<const D: usize, R: Rng + ?Sized>(
    v: &mut [f64],
    candidates: u64,
    u_max: f64,
    alpha: f64,
    cs: &CrossSection,
    rng: &mut R,
) -> Result<CollisionOutcome> {
    collide_generic(D, v, candidates, u_max, alpha, cs, rng)
}

#[inline(always)]
fn collide_generic<R: Rng + ?Sized>(
    dim: usize,
    v: &mut [f64],
    candidates: u64,
    u_max: f64,
    alpha: f64,
    cs: &CrossSection,
    rng: &mut R,
) -> Result<CollisionOutcome> {
    let n = v.len() / dim;
    let mut out = CollisionOutcome {
        accepted: 0,
        sum_of_deltas: 0.0,
        violations: 0,
    };
    let mut sigma = [0.0; MAX_DIM];
    let mut u_hat = [0.0; MAX_DIM];
    let sigma = &mut sigma[..dim];
    let u_hat = &mut u_hat[..dim];
    for _ in 0..candidates {
        let (a, b) = random_pair(n, rng);
        let (lo, hi) = v.split_at_mut(b * dim);
        let va = &mut lo[a * dim..(a + 1) * dim];
        let vb = &mut hi[..dim];
        let mut u2 = 0.0;
        for k in 0..dim {
            let d = va[k] - vb[k];
            u2 += d * d;
        }
        let speed = u2.sqrt();
        if speed > u_max {
            out.violations += 1;
        } else if rng.random::<f64>() * u_max >= speed {
            continue;
        }
        if speed == 0.0 {
            out.accepted += 1;
            continue;
        }
        if !cs.is_uniform() {
            for k in 0..dim {
                u_hat[k] = (va[k] - vb[k]) / speed;
            }
        }
        sample_sigma_into(u_hat, cs, rng, sigma)?;
        if cfg!(debug_assertions) {
            let before: [f64; MAX_DIM * 2] = {
                let mut b = [0.0; MAX_DIM * 2];
                b[..dim].copy_from_slice(va);
                b[MAX_DIM..MAX_DIM + dim].copy_from_slice(vb);
                b
            };
            let delta = collide_in_place(va, vb, sigma, alpha);
            check_collision(&before[..dim], &before[MAX_DIM..MAX_DIM + dim], va, vb, delta);
            out.sum_of_deltas += delta;
        } else {
            out.sum_of_deltas += collide_in_place(va, vb, sigma, alpha);
        }
        out.accepted += 1;
    }
    Ok(out)
}

/// Momentum to 4 ulps of the largest magnitude involved; energy change equal
/// to the closed form within `1e-12 (|v|² + |v_*|²)`.
fn check_collision(v: &[f64], vs: &[f64], vp: &[f64], vsp: &[f64], delta: f64) {
    let mut scale = 0.0f64;
    for k in 0..v.len() {
        scale = scale
            .max(v[k].abs())
            .max(vs[k].abs())
            .max(vp[k].abs())
            .max(vsp[k].abs());
    }
    let ulp = scale * f64::EPSILON;
    for k in 0..v.len() {
        let drift = ((vp[k] + vsp[k]) - (v[k] + vs[k])).abs();
        debug_assert!(
            drift <= 4.0 * ulp,
            "momentum drift {drift:e} exceeds 4 ulps of {scale:e}"
        );
    }
    let e0: f64 = v.iter().chain(vs).map(|x| x * x).sum();
    let e1: f64 = vp.iter().chain(vsp).map(|x| x * x).sum();
    debug_assert!(
        ((e1 - e0) - delta).abs() <= 1e-12 * e0.max(f64::MIN_POSITIVE),
        "energy change {:e} differs from closed form {delta:e}",
        e1 - e0
    );
}

fn collide(
    dim: usize,
    v: &mut [f64],
    candidates: u64,
    u_max: f64,
    alpha: f64,
    cs: &CrossSection,
    rng: &mut Stream,
) -> Result<CollisionOutcome> {
    match dim {
        2 => collide_dim::<2, _>(v, candidates, u_max, alpha, cs, rng),
        3 => collide_dim::<3, _>(v, candidates, u_max, alpha, cs, rng),
        _ => collide_generic(dim, v, candidates, u_max, alpha, cs, rng),
    }
}

fn check_inputs(e: &ParticleEnsemble, cfg: &DsmcConfig, rp: &RestitutionParams, cs: &CrossSection) -> Result<()> {
    cfg.validate()?;
    if e.dim() != cs.dimension() {
        return Err(contract("ensemble and cross-section dimensions differ"));
    }
    if e.dim() > MAX_DIM {
        return Err(contract(format!(
            "dimension {} exceeds the supported maximum {MAX_DIM}",
            e.dim()
        )));
    }
    if e.count() != cfg.particle_count {
        return Err(Error::Config(format!(
            "particle_count is {} but the ensemble holds {} particles",
            cfg.particle_count,
            e.count()
        )));
    }
    if (e.rho() - rp.rho).abs() > 1e-12 * rp.rho {
        return Err(contract("ensemble mass differs from the restitution parameters' rho"));
    }
    Ok(())
}

/// Collision substep on velocities stored as `v / scale`; `u_max` is the
/// physical majorant. Returns the candidate count and the outcome in stored
/// units.
#[allow(clippy::too_many_arguments)]
fn collision_substep(
    e: &mut ParticleEnsemble,
    scale: f64,
    dt: f64,
    u_max: f64,
    b0: f64,
    alpha: f64,
    cs: &CrossSection,
    rng: &mut Stream,
) -> Result<(u64, CollisionOutcome)> {
    let expected = e.count() as f64 * e.rho() * b0 * u_max * dt / 2.0;
    if !(expected.is_finite() && expected < MAX_CANDIDATES) {
        return Err(Error::Config(format!(
            "candidate count {expected:e} overflows; reduce dt or particle_count"
        )));
    }
    let candidates = round_stochastic(expected, rng);
    let dim = e.dim();
    let outcome = collide(dim, e.velocities_mut(), candidates, u_max / scale, alpha, cs, rng)?;
    Ok((candidates, outcome))
}

/// Multiplies the stored velocities by `scale`, optionally removing the mean
/// first. Returns the exact energy afterwards and the energy removed by
/// re-centring.
fn fold_velocities(e: &mut ParticleEnsemble, scale: f64, recenter: bool) -> Result<(f64, f64)> {
    let dim = e.dim();
    let n = e.count() as f64;
    let rho = e.rho();
    let w = e.weight();
    let v = e.velocities_mut();
    let mut mean = [0.0; MAX_DIM];
    let mut drift2 = 0.0;
    if recenter {
        for p in v.chunks_exact(dim) {
            for k in 0..dim {
                mean[k] += p[k];
            }
        }
        for m in &mut mean[..dim] {
            *m /= n;
            drift2 += *m * *m * scale * scale;
        }
    }
    let mut sum = 0.0;
    for p in v.chunks_exact_mut(dim) {
        for k in 0..dim {
            p[k] = scale * (p[k] - mean[k]);
            sum += p[k] * p[k];
        }
    }
    let energy = w * sum;
    if !energy.is_finite() {
        return Err(Error::CorruptedState("non-finite velocity after a DSMC step".into()));
    }
    Ok((energy, -rho * drift2))
}

fn stretch_factor(cfg: &DsmcConfig, rp: &RestitutionParams, dt: f64) -> f64 {
    match cfg.mode {
        Mode::Original => 1.0,
        Mode::Rescaled => (rp.tau_alpha * dt).exp(),
    }
}

/// One step of length `cfg.dt` with majorant `cfg.majorant_relvel`.
///
/// Stateless form of [`Dsmc::step`]: no majorant refresh and no time-step
/// adaptation.
pub fn step(
    e: &mut ParticleEnsemble,
    cfg: &DsmcConfig,
    rp: &RestitutionParams,
    cs: &CrossSection,
    rng: &mut Stream,
) -> Result<StepStats> {
    check_inputs(e, cfg, rp, cs)?;
    let b0 = angular_moments(cs)?.b0;
    let energy_before = e.energy();
    let (candidates, out) = collision_substep(e, 1.0, cfg.dt, cfg.majorant_relvel, b0, rp.alpha, cs, rng)?;
    let sum_of_deltas = e.weight() * out.sum_of_deltas;
    let stretch = stretch_factor(cfg, rp, cfg.dt);
    let (energy_after, recenter_energy) = fold_velocities(e, stretch, cfg.recenter_momentum)?;
    Ok(StepStats {
        dt: cfg.dt,
        candidates,
        accepted: out.accepted,
        energy_before,
        energy_after,
        sum_of_deltas,
        stretch_energy: (stretch * stretch - 1.0) * (energy_before + sum_of_deltas),
        recenter_energy,
        majorant_violations: out.violations,
    })
}

/// Stateful solver owning one ensemble and its random streams.
///
/// Between majorant refreshes the stretch is kept as a running factor and the
/// velocities are stored divided by it, so a step costs time proportional to
/// its collisions only. The factor is folded back (with re-centring) at every
/// refresh and whenever the ensemble is observed.
#[derive(Clone, Debug)]
pub struct Dsmc {
    cfg: DsmcConfig,
    rp: RestitutionParams,
    cs: CrossSection,
    moments: AngularMoments,
    ensemble: ParticleEnsemble,
    replica: u64,
    dynamics: Stream,
    diagnostics: Stream,
    t: f64,
    scale: f64,
    /// Energy of the stored velocities.
    stored_energy: f64,
    u_max: f64,
    dt: f64,
    totals: Totals,
}

impl Dsmc {
    /// `replica` selects the random streams; the time step is the largest of
    /// `cfg.dt` keeping the collision probability per particle at most 0.2
    /// and, in rescaled mode, `τ_α dt ≤ 1e-3`.
    pub fn new(
        ensemble: ParticleEnsemble,
        cfg: DsmcConfig,
        rp: RestitutionParams,
        cs: CrossSection,
        replica: u64,
    ) -> Result<Self> {
        check_inputs(&ensemble, &cfg, &rp, &cs)?;
        let moments = angular_moments(&cs)?;
        let mut s = Self {
            stored_energy: ensemble.energy(),
            scale: 1.0,
            u_max: cfg.majorant_relvel,
            dt: cfg.dt,
            dynamics: stream(cfg.seed, replica, Purpose::Dynamics),
            diagnostics: stream(cfg.seed, replica, Purpose::Diagnostics),
            cfg,
            rp,
            cs,
            moments,
            ensemble,
            replica,
            t: 0.0,
            totals: Totals::default(),
        };
        s.refresh(true);
        Ok(s)
    }

    fn refresh(&mut self, initial: bool) {
        let (max, mean) = pair_speed_survey(&self.ensemble, MAJORANT_SUBSAMPLE, &mut self.dynamics);
        let estimate = MAJORANT_SAFETY * max;
        self.u_max = if initial { self.u_max.max(estimate) } else { estimate };
        if !(self.u_max > 0.0) {
            self.u_max = self.cfg.majorant_relvel;
        }
        let nu = self.ensemble.rho() * self.moments.b0 * mean;
        let mut dt = self.cfg.dt;
        if nu > 0.0 {
            dt = dt.min(MAX_COLLISION_PROBABILITY / nu);
        }
        if self.cfg.mode == Mode::Rescaled && self.rp.tau_alpha > 0.0 {
            dt = dt.min(MAX_STRETCH_PER_STEP / self.rp.tau_alpha);
        }
        self.dt = dt;
    }

    pub fn ensemble(&self) -> &ParticleEnsemble {
        &self.ensemble
    }

    pub fn into_ensemble(self) -> ParticleEnsemble {
        self.ensemble
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Current majorant `u_max`.
    pub fn majorant(&self) -> f64 {
        self.u_max
    }

    /// Current time step.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn totals(&self) -> Totals {
        self.totals
    }

    pub fn config(&self) -> &DsmcConfig {
        &self.cfg
    }

    pub fn angular_moments(&self) -> &AngularMoments {
        &self.moments
    }

    /// One step of the current time step.
    pub fn step(&mut self) -> Result<StepStats> {
        self.step_by(self.dt, true)
    }

    fn step_by(&mut self, dt: f64, observe: bool) -> Result<StepStats> {
        let (candidates, out) = collision_substep(
            &mut self.ensemble,
            self.scale,
            dt,
            self.u_max,
            self.moments.b0,
            self.rp.alpha,
            &self.cs,
            &mut self.dynamics,
        )?;
        let s2 = self.scale * self.scale;
        let energy_before = s2 * self.stored_energy;
        let deltas = self.ensemble.weight() * out.sum_of_deltas;
        self.stored_energy += deltas;
        self.scale *= stretch_factor(&self.cfg, &self.rp, dt);
        let s2_new = self.scale * self.scale;
        let mut stats = StepStats {
            dt,
            candidates,
            accepted: out.accepted,
            energy_before,
            energy_after: s2_new * self.stored_energy,
            sum_of_deltas: s2 * deltas,
            stretch_energy: (s2_new - s2) * self.stored_energy,
            recenter_energy: 0.0,
            majorant_violations: out.violations,
        };
        if !stats.energy_after.is_finite() {
            return Err(Error::CorruptedState("non-finite energy after a DSMC step".into()));
        }
        self.t += dt;
        self.totals.steps += 1;
        self.totals.candidates += candidates;
        self.totals.accepted += out.accepted;
        self.totals.majorant_violations += out.violations;
        let refresh = self.totals.steps.is_multiple_of(self.cfg.majorant_refresh_interval);
        if refresh || observe {
            stats.recenter_energy = self.fold()?;
            stats.energy_after = self.stored_energy;
        }
        if refresh {
            self.refresh(false);
        }
        Ok(stats)
    }

    fn fold(&mut self) -> Result<f64> {
        let (energy, recenter) = fold_velocities(&mut self.ensemble, self.scale, self.cfg.recenter_momentum)?;
        self.scale = 1.0;
        self.stored_energy = energy;
        Ok(recenter)
    }

    /// Steps until `time()` equals `t`, shortening the final step.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.t {
            return Err(contract(format!("cannot step backwards from {} to {t}", self.t)));
        }
        while self.t < t {
            let remaining = t - self.t;
            if remaining <= self.dt * (1.0 + 1e-9) {
                self.step_by(remaining, true)?;
                self.t = t;
            } else {
                self.step_by(self.dt, false)?;
            }
        }
        Ok(())
    }

    /// Diagnostics of the current state.
    pub fn record(&mut self, spec: &DiagnosticsSpec) -> Result<DiagnosticsRecord> {
        record_diagnostics(
            &self.ensemble,
            self.t,
            self.totals.accepted,
            self.replica,
            spec,
            &mut self.diagnostics,
        )
    }

    /// Advances through the increasing `schedule`, recording at each time.
    pub fn run(&mut self, schedule: &[f64], spec: &DiagnosticsSpec) -> Result<Vec<DiagnosticsRecord>> {
        if schedule.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(contract("schedule must be strictly increasing"));
        }
        let mut out = Vec::with_capacity(schedule.len());
        for &t in schedule {
            self.advance_to(t)?;
            out.push(self.record(spec)?);
        }
        Ok(out)
    }
}

/// Maps rescaled-mode records to original variables through
/// `f(t, v) = λ^N g(ln λ / τ_α, λ v)`, `λ = V0 + τ_α t`.
///
/// Times map as `t = (e^{τ_α s} - V0) / τ_α`; records landing before
/// `t = 0` are dropped. Homogeneous quantities of degree `q` in velocity are
/// divided by `λ^q`; mass and relative entropy are unchanged. The `L¹₂`
/// distance column is left as measured in rescaled variables. `τ_α = 0` is
/// the identity.
pub fn transform_rescaled_to_original(
    records: &[DiagnosticsRecord],
    rp: &RestitutionParams,
    v0: f64,
) -> Result<Vec<DiagnosticsRecord>> {
    if !(v0.is_finite() && v0 > 0.0) {
        return Err(contract(format!("V0 must be positive, got {v0}")));
    }
    let tau = rp.tau_alpha;
    if tau == 0.0 {
        return Ok(records.to_vec());
    }
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let lambda = (tau * r.t).exp();
        let t = (lambda - v0) / tau;
        if t < 0.0 {
            continue;
        }
        let l2 = lambda * lambda;
        let l3 = l2 * lambda;
        out.push(DiagnosticsRecord {
            t,
            momentum: r.momentum.iter().map(|p| p / lambda).collect(),
            energy: r.energy / l2,
            theta: r.theta / l2,
            m_half: r.m_half / lambda,
            m_32: r.m_32 / l3,
            m_2: r.m_2 / (l2 * l2),
            m_3: r.m_3 / (l3 * l3),
            de_est: r.de_est / l3,
            de_se: r.de_se / l3,
            ..r.clone()
        });
    }
    Ok(out)
}
