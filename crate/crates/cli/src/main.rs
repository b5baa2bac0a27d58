//! `pmheat`: thresholds, solves, invariant checks and asymptotic experiments
//! for the heat equation with singular potentials, driven by a JSON config.

mod config;
mod output;
mod verify;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use pmheat::analysis::{convergence_experiment, equivalence_probe, require_subcritical, AsymptoticSeries, Equivalence};
use pmheat::cartesian_backend::crosscheck;
use pmheat::picard_solver::{picard_solve, SolveSummary, TimeGrid};
use pmheat::potential_catalog::{threshold_report, ThresholdReport};
use pmheat::spectral_field::SpectralField;
use pmheat::Error;
use serde::Serialize;

use config::{Command, RunConfig};
use output::write_json;

#[derive(Debug, Parser)]
#[command(name = "pmheat", version, about = "Heat flow with singular potentials in PM^k spaces")]
struct Cli {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for reports; overrides `output_dir` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Failure classes and their exit codes.
#[derive(Debug)]
enum Failure {
    Checks(String),
    Validation(String),
    Refused(String),
    NonConvergence(String),
}

impl Failure {
    fn code(&self) -> (&'static str, u8) {
        match self {
            Failure::Checks(_) => ("checks_failed", 1),
            Failure::Validation(_) => ("validation", 2),
            Failure::Refused(_) => ("refused", 3),
            Failure::NonConvergence(_) => ("non_convergence", 4),
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Checks(m) | Failure::Validation(m) | Failure::Refused(m) | Failure::NonConvergence(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Refused { .. } => Failure::Refused(e.to_string()),
            Error::NonConvergence { .. } => Failure::NonConvergence(e.to_string()),
            other => Failure::Validation(other.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

fn emit<T: Serialize>(dir: &Path, name: &str, cfg: &RunConfig, body: T) -> Result<(), Failure> {
    write_json(&dir.join(name), &Report { config: cfg, body })?;
    Ok(())
}

fn load(cli: &Cli) -> Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("invalid config: {e}")))?;
    match cfg.command {
        Some(c) if c != cli.command => {
            return Err(Failure::Validation(format!(
                "config is for command {c:?}, but {:?} was requested",
                cli.command
            )))
        }
        _ => cfg.command = Some(cli.command),
    }
    if let Some(dir) = &cli.output {
        cfg.output_dir = Some(dir.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Failure::Validation(format!("output directory {} is not writable: {e}", dir.display())))?;
    Ok(dir)
}

#[derive(Serialize)]
struct ThresholdBody {
    report: ThresholdReport,
}

#[derive(Serialize)]
struct SolveBody {
    summary: SolveSummary,
}

#[derive(Serialize)]
struct AsymptoticsBody {
    verdict: Equivalence,
    decade_ratio: f64,
    semigroup_gap: AsymptoticSeries,
    solution_gap: Option<AsymptoticSeries>,
}

#[derive(Serialize)]
struct VerifyBody {
    all_passed: bool,
    checks: Vec<verify::Check>,
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = load(cli)?;
    let dir = output_dir(&cfg)?;
    match cli.command {
        Command::Threshold => {
            let report = threshold_report(&cfg.potential, cfg.n, cfg.k)?;
            emit(&dir, "threshold_report.json", &cfg, ThresholdBody { report })
        }
        Command::Solve => {
            let u0 = cfg.initial_field()?;
            let rep = picard_solve(&cfg.potential, &u0, &cfg.times()?, &cfg.solve_options())?;
            rep.trajectory.write_csv(dir.join("trajectory.csv"))?;
            emit(&dir, "solve_report.json", &cfg, SolveBody { summary: rep.summary() })
        }
        Command::Asymptotics => {
            let u0 = cfg.initial_field()?;
            let v0 = match &cfg.asymptotics.reference {
                Some(d) => d.field(cfg.n, cfg.k, cfg.grid)?,
                None => SpectralField::zero(cfg.n, cfg.k, cfg.grid)?,
            };
            let probe = equivalence_probe(&u0, &v0, cfg.asymptotics.horizon)?;
            probe.series.write_csv(dir.join("series.csv"))?;
            let solution_gap = if cfg.asymptotics.solve {
                require_subcritical(&cfg.potential, cfg.n, cfg.k)?;
                let tg = TimeGrid::standard(cfg.asymptotics.horizon, cfg.time.count)?;
                let s = convergence_experiment(&cfg.potential, &u0, &v0, &tg, &cfg.solve_options())?;
                s.write_csv(dir.join("solution_series.csv"))?;
                Some(s)
            } else {
                None
            };
            emit(
                &dir,
                "asymptotics_report.json",
                &cfg,
                AsymptoticsBody {
                    verdict: probe.verdict,
                    decade_ratio: probe.ratio,
                    semigroup_gap: probe.series,
                    solution_gap,
                },
            )
        }
        Command::Crosscheck => {
            let report = crosscheck(&cfg.crosscheck)?;
            let passes = report.passes;
            emit(&dir, "crosscheck.json", &cfg, report)?;
            if passes {
                Ok(())
            } else {
                Err(Failure::Checks("cross-check tolerance or positivity not met; see crosscheck.json".into()))
            }
        }
        Command::Verify => {
            let checks = verify::run(&cfg)?;
            let all_passed = checks.iter().all(|c| c.status != verify::Status::Fail);
            let failed: Vec<&str> =
                checks.iter().filter(|c| c.status == verify::Status::Fail).map(|c| c.name).collect();
            emit(&dir, "verify_report.json", &cfg, VerifyBody { all_passed, checks })?;
            if all_passed {
                Ok(())
            } else {
                Err(Failure::Checks(format!("failed checks: {}", failed.join(", "))))
            }
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("PMHEAT_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Validation(format!("PMHEAT_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Validation(format!("cannot size thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, exit) = f.code();
            let body = serde_json::json!({ "error": { "code": code, "message": f.message() } });
            eprintln!("{body}");
            ExitCode::from(exit)
        }
    }
}
