//! Command-line front end.
//!
//! ```text
//! granular-kinetics <subcommand> [--config PATH] [--set key=value ...] [--out DIR]
//! ```
//!
//! Subcommands: `selftest`, `simulate`, `haff`, `profile`, `eigen`, `sweep`,
//! `lyapunov`, `energy-ode`. Settings resolve in order: defaults, the config
//! file, `--set` overrides, `--out`, then the `GK_THREADS` environment
//! variable for the `threads` key.
//!
//! Every experiment writes three files into the output directory, each
//! atomically (temporary file, then rename):
//!
//! * `<name>_trace.csv`: one row per diagnostics record with header
//!   `t,rho,px,py,pz,energy,theta,m_half,m_32,m_2,m_3,de_est,de_se,rel_entropy,l1_dist,collisions,replica`.
//!   Floats are written in `{:.16e}` scientific notation (17 significant
//!   digits), integers in decimal. `px, py, pz` are the first three momentum
//!   components, zero-padded in two dimensions. `t` is in the variables of
//!   the run (rescaled or original).
//! * `<name>_report.txt`: flat `key = value` summary (see
//!   [`ExperimentReport::to_text`]).
//! * `<name>_config.txt`: the resolved configuration, which parses back to
//!   the same run.
//!
//! Exit codes: 0 every criterion passed, 1 a criterion failed or the run was
//! inconclusive, 2 usage error, 3 runtime error.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::ensemble::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentOutput, Status};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

pub const CSV_HEADER: &str =
    "t,rho,px,py,pz,energy,theta,m_half,m_32,m_2,m_3,de_est,de_se,rel_entropy,l1_dist,collisions,replica";

pub const THREADS_ENV: &str = "GK_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "granular-kinetics",
    version,
    about = "DSMC studies of a cooling inelastic hard-sphere gas"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gaussian identities by quadrature against closed forms.
    Selftest(Common),
    /// Free run on the configured time grid.
    Simulate(Common),
    /// Temperature decay exponent and prefactor.
    Haff(Common),
    /// Steady rescaled profile, energy balance and bounds.
    Profile(Common),
    /// Energy relaxation rate and its scaling in rho.
    Eigen(Common),
    /// Distance of the steady profile to the limit Maxwellian across alphas.
    Sweep(Common),
    /// Lyapunov functional and uniqueness of the plateau.
    Lyapunov(Common),
    /// Energy evolution against its Maxwellian closure.
    EnergyOde(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

impl Command {
    fn split(self) -> (&'static str, Common) {
        match self {
            Command::Selftest(c) => ("selftest", c),
            Command::Simulate(c) => ("simulate", c),
            Command::Haff(c) => ("haff", c),
            Command::Profile(c) => ("profile", c),
            Command::Eigen(c) => ("eigen", c),
            Command::Sweep(c) => ("sweep", c),
            Command::Lyapunov(c) => ("lyapunov", c),
            Command::EnergyOde(c) => ("energy-ode", c),
        }
    }
}

/// Resolves the configuration for `name` from the command-line options and
/// the environment.
fn resolve(name: &str, opts: &Common, threads_env: Option<String>) -> Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::parse(&fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    for item in &opts.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got `{item}`")))?;
        cfg.set(k, v)?;
    }
    if let Some(out) = &opts.out {
        cfg.output_dir = out.clone();
    }
    if let Some(t) = threads_env {
        cfg.set("threads", &t)?;
    }
    cfg.experiment = name.to_string();
    Ok(cfg)
}

/// Runs the experiment named by `cfg.experiment`.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentOutput> {
    match cfg.experiment.as_str() {
        "simulate" => experiments::simulate(cfg),
        "haff" => experiments::haff_experiment(cfg),
        "profile" => experiments::profile_experiment(cfg),
        "eigen" => experiments::eigenvalue_experiment(cfg),
        "sweep" => experiments::elastic_limit_sweep(cfg),
        "lyapunov" => experiments::lyapunov_monitor(cfg),
        "energy-ode" => experiments::energy_ode_check(cfg),
        other => Err(Error::Config(format!("unknown experiment `{other}`"))),
    }
}

/// Serialises records in the trace CSV format.
pub fn trace_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::with_capacity(CSV_HEADER.len() + 1 + records.len() * 400);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        let p = |i: usize| r.momentum.get(i).copied().unwrap_or(0.0);
        let floats = [
            r.t,
            r.rho,
            p(0),
            p(1),
            p(2),
            r.energy,
            r.theta,
            r.m_half,
            r.m_32,
            r.m_2,
            r.m_3,
            r.de_est,
            r.de_se,
            r.rel_entropy,
            r.l1_dist,
        ];
        for x in floats {
            s.push_str(&format!("{x:.16e},"));
        }
        s.push_str(&format!("{},{}\n", r.collisions, r.replica));
    }
    s
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Writes the trace, report and resolved configuration of one run and
/// returns the paths written.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let name = &out.report.name;
    let files = [
        (format!("{name}_trace.csv"), trace_csv(&out.trace)),
        (format!("{name}_report.txt"), out.report.to_text()),
        (format!("{name}_config.txt"), out.report.config.to_text()),
    ];
    let mut paths = Vec::new();
    for (file, text) in files {
        let path = dir.join(file);
        write_atomic(&path, text.as_bytes())?;
        paths.push(path);
    }
    Ok(paths)
}

fn selftest(cfg: &RunConfig) -> Result<i32> {
    let rows = experiments::gaussian_selftest(cfg)?;
    println!(
        "{:<24} {:>3} {:>5} {:>24} {:>24} {:>10}  result",
        "identity", "N", "rho", "value", "oracle", "rel_resid"
    );
    let mut ok = true;
    for r in &rows {
        ok &= r.passed();
        println!(
            "{:<24} {:>3} {:>5} {:>24.16e} {:>24.16e} {:>10.2e}  {}",
            r.identity,
            r.dimension,
            r.rho,
            r.value,
            r.oracle,
            r.rel_residual,
            if r.passed() { "pass" } else { "FAIL" }
        );
    }
    println!(
        "tolerance {:e}: {}",
        experiments::SelftestRow::TOLERANCE,
        if ok { "pass" } else { "FAIL" }
    );
    Ok(if ok { EXIT_PASS } else { EXIT_FAIL })
}

fn dispatch(cfg: &RunConfig) -> Result<i32> {
    if cfg.experiment == "selftest" {
        return selftest(cfg);
    }
    let out = run_experiment(cfg)?;
    let paths = write_outputs(&out, &cfg.output_dir)?;
    let r = &out.report;
    for c in &r.checks {
        println!(
            "{:<40} {}  {}",
            c.name,
            if c.passed { "pass" } else { "FAIL" },
            c.detail
        );
    }
    for n in &r.notes {
        println!("note: {n}");
    }
    println!("{}: {} ({:.1} s)", r.name, r.status.as_str(), r.wall_clock_s);
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(match r.status {
        Status::Pass => EXIT_PASS,
        Status::Fail | Status::Inconclusive => EXIT_FAIL,
    })
}

/// Parses `args` (including the program name) and runs; returns the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    let (name, opts) = cli.command.split();
    let cfg = match resolve(name, &opts, std::env::var(THREADS_ENV).ok()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("granular-kinetics: {e}");
            return EXIT_USAGE;
        }
    };
    match dispatch(&cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("granular-kinetics: {e}");
            EXIT_RUNTIME
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(set: &[&str]) -> Common {
        Common {
            config: None,
            set: set.iter().map(|s| s.to_string()).collect(),
            out: Some(PathBuf::from("/tmp/x")),
        }
    }

    #[test]
    fn resolution_order() {
        let cfg = resolve("haff", &opts(&["alpha=0.95", "threads = 2"]), Some("3".into())).unwrap();
        assert_eq!(cfg.experiment, "haff");
        assert_eq!(cfg.alpha, 0.95);
        assert_eq!(cfg.threads, 3);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/x"));
        assert!(resolve("haff", &opts(&["alpha"]), None).is_err());
        assert!(resolve("haff", &opts(&["alpha=2"]), None).is_err());
    }

    #[test]
    fn csv_rows_have_every_column() {
        let r = DiagnosticsRecord {
            t: 0.5,
            rho: 1.0,
            momentum: vec![1e-17, -2.0],
            energy: 3.0,
            theta: 1.0,
            m_half: 0.1,
            m_32: 0.2,
            m_2: 0.3,
            m_3: 0.4,
            de_est: 0.5,
            de_se: 0.01,
            rel_entropy: 0.0,
            l1_dist: 0.02,
            collisions: 12,
            replica: 7,
        };
        let text = trace_csv(&[r]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        let cells: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(cells.len(), CSV_HEADER.split(',').count());
        assert_eq!(cells[0], "5.0000000000000000e-1");
        assert_eq!(cells[4], "0.0000000000000000e0");
        assert_eq!(&cells[15..], ["12", "7"]);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(main_with_args(["granular-kinetics", "frobnicate"]), EXIT_USAGE);
        assert_eq!(main_with_args(["granular-kinetics"]), EXIT_USAGE);
        assert_eq!(
            main_with_args(["granular-kinetics", "haff", "--set", "nope=1"]),
            EXIT_USAGE
        );
    }
}
