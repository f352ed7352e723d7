//! Run configuration in a flat `key = value` text format.
//!
//! ```text
//! # comments run to the end of the line
//! alpha = 0.95
//! particles = 20000
//! alphas = 0.9, 0.95, 0.99
//! ```
//!
//! Every key has a default, unknown keys are errors, and
//! [`RunConfig::to_text`] emits a text that parses back to the same value.
//! `auto` selects a value derived from the other keys (documented per key).

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::dsmc::{DsmcConfig, Mode, MAX_DIM};
use crate::error::{Error, Result};
use crate::kernel::{CrossSection, RestitutionParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleKind {
    Linear,
    Geometric,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Subcommand recorded in reports (`simulate`, `haff`, ...).
    pub experiment: String,
    pub dimension: usize,
    pub alpha: f64,
    pub rho: f64,
    /// Constant cross-section value `b'₀`.
    pub b0prime: f64,
    pub particles: usize,
    pub replicas: usize,
    pub seed: u64,
    /// Worker threads for replica parallelism; 0 uses every core.
    pub threads: usize,
    pub mode: Mode,
    /// Largest DSMC time step.
    pub dt: f64,
    pub majorant_relvel: f64,
    pub majorant_refresh_interval: u64,
    /// `auto`: on in rescaled mode only.
    pub recenter_momentum: Option<bool>,
    /// Initial Maxwellian temperature; `auto` is experiment specific.
    pub initial_theta: Option<f64>,
    /// Half separation of a two-Maxwellian start along the first axis.
    pub initial_shift: f64,
    /// Final time of `simulate`.
    pub t_end: f64,
    pub schedule: ScheduleKind,
    pub schedule_points: usize,
    /// First positive time of a geometric schedule.
    pub schedule_t0: f64,
    /// Steady-run horizon; `auto` scales with `1 / (ρ (1 - α))`.
    pub horizon: Option<f64>,
    pub pair_samples: usize,
    pub bins: usize,
    pub bootstrap: usize,
    /// Restitution coefficients of the elastic-limit sweep.
    pub alphas: Vec<f64>,
    /// Masses of the eigenvalue experiment.
    pub rhos: Vec<f64>,
    /// Initial temperatures of the Lyapunov / uniqueness runs.
    pub initial_thetas: Vec<f64>,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: "simulate".into(),
            dimension: 3,
            alpha: 0.99,
            rho: 1.0,
            b0prime: 1.0,
            particles: 100_000,
            replicas: 8,
            seed: 1,
            threads: 0,
            mode: Mode::Rescaled,
            dt: 0.05,
            majorant_relvel: 1.0,
            majorant_refresh_interval: 10,
            recenter_momentum: None,
            initial_theta: None,
            initial_shift: 0.0,
            t_end: 10.0,
            schedule: ScheduleKind::Linear,
            schedule_points: 101,
            schedule_t0: 0.01,
            horizon: None,
            pair_samples: 20_000,
            bins: 64,
            bootstrap: 200,
            alphas: vec![0.9, 0.95, 0.99],
            rhos: vec![1.0, 2.0],
            initial_thetas: vec![1.0, 9.0],
            output_dir: PathBuf::from("."),
        }
    }
}

/// Every key in emission order.
pub const KEYS: &[&str] = &[
    "experiment",
    "dimension",
    "alpha",
    "rho",
    "b0prime",
    "particles",
    "replicas",
    "seed",
    "threads",
    "mode",
    "dt",
    "majorant_relvel",
    "majorant_refresh_interval",
    "recenter_momentum",
    "initial_theta",
    "initial_shift",
    "t_end",
    "schedule",
    "schedule_points",
    "schedule_t0",
    "horizon",
    "pair_samples",
    "bins",
    "bootstrap",
    "alphas",
    "rhos",
    "initial_thetas",
    "output_dir",
];

fn parse_err(line: usize, key: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

fn num<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        parse_err(
            line,
            key,
            format!("cannot parse `{value}` as {}", std::any::type_name::<T>()),
        )
    })
}

fn real(line: usize, key: &str, value: &str) -> Result<f64> {
    let x: f64 = num(line, key, value)?;
    if !x.is_finite() {
        return Err(parse_err(line, key, "must be finite"));
    }
    Ok(x)
}

fn positive(line: usize, key: &str, value: &str) -> Result<f64> {
    let x = real(line, key, value)?;
    if !(x > 0.0) {
        return Err(parse_err(line, key, format!("must be positive, got {x}")));
    }
    Ok(x)
}

fn in_unit_interval(line: usize, key: &str, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(parse_err(line, key, format!("must lie in [0, 1], got {x}")));
    }
    Ok(x)
}

fn at_least<T: FromStr + PartialOrd + std::fmt::Display>(line: usize, key: &str, value: &str, min: T) -> Result<T> {
    let x: T = num(line, key, value)?;
    if x < min {
        return Err(parse_err(line, key, format!("must be at least {min}, got {x}")));
    }
    Ok(x)
}

fn auto_or<T>(value: &str, f: impl FnOnce(&str) -> Result<T>) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        f(value).map(Some)
    }
}

fn list(line: usize, key: &str, value: &str, check: impl Fn(f64) -> Result<f64>) -> Result<Vec<f64>> {
    let items: Vec<f64> = value
        .split(',')
        .map(|s| real(line, key, s.trim()).and_then(&check))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(parse_err(line, key, "list must not be empty"));
    }
    Ok(items)
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn fmt_auto<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl RunConfig {
    /// Parses a configuration text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| parse_err(line, content, "expected `key = value`"))?;
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(parse_err(line, key, "duplicate key"));
            }
            cfg.set_at(line, key, value.trim())?;
            seen.push(key.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one `key = value` override (reported as line 0 on error).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        self.set_at(0, key.trim(), value.trim())?;
        self.validate()
    }

    fn set_at(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => {
                if value.is_empty() {
                    return Err(parse_err(line, key, "must not be empty"));
                }
                self.experiment = value.to_string();
            }
            "dimension" => {
                let d: usize = at_least(line, key, value, 2)?;
                if d > MAX_DIM {
                    return Err(parse_err(line, key, format!("must be at most {MAX_DIM}")));
                }
                self.dimension = d;
            }
            "alpha" => self.alpha = in_unit_interval(line, key, real(line, key, value)?)?,
            "rho" => self.rho = positive(line, key, value)?,
            "b0prime" => self.b0prime = positive(line, key, value)?,
            "particles" => self.particles = at_least(line, key, value, 2)?,
            "replicas" => self.replicas = at_least(line, key, value, 1)?,
            "seed" => self.seed = num(line, key, value)?,
            "threads" => self.threads = num(line, key, value)?,
            "mode" => {
                self.mode = match value {
                    "original" => Mode::Original,
                    "rescaled" => Mode::Rescaled,
                    _ => return Err(parse_err(line, key, "expected `original` or `rescaled`")),
                }
            }
            "dt" => self.dt = positive(line, key, value)?,
            "majorant_relvel" => self.majorant_relvel = positive(line, key, value)?,
            "majorant_refresh_interval" => self.majorant_refresh_interval = at_least(line, key, value, 1)?,
            "recenter_momentum" => {
                self.recenter_momentum = auto_or(value, |v| match v {
                    "true" => Ok(true),
                    "false" => Ok(false),
                    _ => Err(parse_err(line, key, "expected `true`, `false` or `auto`")),
                })?
            }
            "initial_theta" => self.initial_theta = auto_or(value, |v| positive(line, key, v))?,
            "initial_shift" => {
                let x = real(line, key, value)?;
                if x < 0.0 {
                    return Err(parse_err(line, key, "must be non-negative"));
                }
                self.initial_shift = x;
            }
            "t_end" => self.t_end = positive(line, key, value)?,
            "schedule" => {
                self.schedule = match value {
                    "linear" => ScheduleKind::Linear,
                    "geometric" => ScheduleKind::Geometric,
                    _ => return Err(parse_err(line, key, "expected `linear` or `geometric`")),
                }
            }
            "schedule_points" => self.schedule_points = at_least(line, key, value, 2)?,
            "schedule_t0" => self.schedule_t0 = positive(line, key, value)?,
            "horizon" => self.horizon = auto_or(value, |v| positive(line, key, v))?,
            "pair_samples" => self.pair_samples = at_least(line, key, value, 100)?,
            "bins" => self.bins = at_least(line, key, value, 2)?,
            "bootstrap" => self.bootstrap = at_least(line, key, value, 2)?,
            "alphas" => self.alphas = list(line, key, value, |x| in_unit_interval(line, key, x))?,
            "rhos" => {
                self.rhos = list(line, key, value, |x| {
                    if x > 0.0 {
                        Ok(x)
                    } else {
                        Err(parse_err(line, key, "entries must be positive"))
                    }
                })?
            }
            "initial_thetas" => {
                self.initial_thetas = list(line, key, value, |x| {
                    if x > 0.0 {
                        Ok(x)
                    } else {
                        Err(parse_err(line, key, "entries must be positive"))
                    }
                })?
            }
            "output_dir" => self.output_dir = PathBuf::from(value),
            _ => return Err(parse_err(line, key, "unknown key")),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.schedule == ScheduleKind::Geometric && self.schedule_t0 >= self.t_end {
            return Err(parse_err(0, "schedule_t0", "must be smaller than t_end"));
        }
        Ok(())
    }

    /// Resolved configuration, one `key = value` per line in [`KEYS`] order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let value = match *key {
                "experiment" => self.experiment.clone(),
                "dimension" => self.dimension.to_string(),
                "alpha" => self.alpha.to_string(),
                "rho" => self.rho.to_string(),
                "b0prime" => self.b0prime.to_string(),
                "particles" => self.particles.to_string(),
                "replicas" => self.replicas.to_string(),
                "seed" => self.seed.to_string(),
                "threads" => self.threads.to_string(),
                "mode" => match self.mode {
                    Mode::Original => "original".into(),
                    Mode::Rescaled => "rescaled".into(),
                },
                "dt" => self.dt.to_string(),
                "majorant_relvel" => self.majorant_relvel.to_string(),
                "majorant_refresh_interval" => self.majorant_refresh_interval.to_string(),
                "recenter_momentum" => fmt_auto(&self.recenter_momentum),
                "initial_theta" => fmt_auto(&self.initial_theta),
                "initial_shift" => self.initial_shift.to_string(),
                "t_end" => self.t_end.to_string(),
                "schedule" => match self.schedule {
                    ScheduleKind::Linear => "linear".into(),
                    ScheduleKind::Geometric => "geometric".into(),
                },
                "schedule_points" => self.schedule_points.to_string(),
                "schedule_t0" => self.schedule_t0.to_string(),
                "horizon" => fmt_auto(&self.horizon),
                "pair_samples" => self.pair_samples.to_string(),
                "bins" => self.bins.to_string(),
                "bootstrap" => self.bootstrap.to_string(),
                "alphas" => fmt_list(&self.alphas),
                "rhos" => fmt_list(&self.rhos),
                "initial_thetas" => fmt_list(&self.initial_thetas),
                "output_dir" => self.output_dir.display().to_string(),
                other => unreachable!("key table out of sync: {other}"),
            };
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }

    /// Hard spheres (`b = b'₀`) in 3D, a constant kernel otherwise.
    pub fn cross_section(&self) -> Result<CrossSection> {
        if self.dimension == 3 {
            CrossSection::hard_sphere(self.b0prime)
        } else {
            CrossSection::constant(self.dimension, self.b0prime)
        }
    }

    pub fn restitution(&self) -> Result<RestitutionParams> {
        RestitutionParams::new(self.alpha, self.rho)
    }

    pub fn dsmc(&self, mode: Mode) -> DsmcConfig {
        DsmcConfig {
            particle_count: self.particles,
            dt: self.dt,
            majorant_relvel: self.majorant_relvel,
            majorant_refresh_interval: self.majorant_refresh_interval,
            seed: self.seed,
            mode,
            recenter_momentum: self.recenter_momentum.unwrap_or(mode == Mode::Rescaled),
        }
    }

    /// Output times of `simulate`: `schedule_points` times ending at
    /// `t_end`, linear from 0 or geometric from `schedule_t0`.
    pub fn schedule_times(&self) -> Vec<f64> {
        let n = self.schedule_points;
        match self.schedule {
            ScheduleKind::Linear => (0..n).map(|k| self.t_end * k as f64 / (n - 1) as f64).collect(),
            ScheduleKind::Geometric => {
                let ratio = (self.t_end / self.schedule_t0).ln();
                let mut v = vec![0.0];
                v.extend((0..n - 1).map(|k| self.schedule_t0 * (ratio * k as f64 / (n - 2).max(1) as f64).exp()));
                *v.last_mut().unwrap() = self.t_end;
                v
            }
        }
    }
}
