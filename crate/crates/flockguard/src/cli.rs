//! Command-line interface: `run`, `validate`, `balance`, and `batch`.
//!
//! Exit codes: 0 success, 1 validation failure, 2 numerical abort,
//! 3 I/O error, 64 usage error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::controllers;
use crate::engine;
use crate::output;
use crate::potentials::BoundedPotential;
use crate::scenario;
use crate::swarm::{validate_scenario, ScenarioConfig, Vector};
use crate::topology;
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "flockguard",
    about = "Deterministic simulation of hierarchical flocking control against a malicious agent"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a scenario and simulate it, writing the output bundle.
    Run(RunArgs),
    /// Check a scenario against the standing assumptions and report.
    Validate { scenario: PathBuf },
    /// Print the Lemma-1 balance residual for a polygon configuration.
    Balance(BalanceArgs),
    /// Run every `*.json` scenario in a directory, in parallel.
    Batch(BatchArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    scenario: PathBuf,
    /// Override the integration step.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the end time.
    #[arg(long = "t-end")]
    t_end: Option<f64>,
    /// Output directory for the artifact bundle.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Simulate even if validation fails.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct BalanceArgs {
    /// Number of leaders on the polygon.
    #[arg(long)]
    s: usize,
    /// Polygon radius delta_bar in meters.
    #[arg(long)]
    delta: f64,
    /// Falsified gains as `kv,ka,kr`.
    #[arg(long, value_parser = parse_gains)]
    k: Gains,
}

#[derive(Debug, Clone, Copy)]
struct Gains {
    k_v: f64,
    k_a: f64,
    k_r: f64,
}

fn parse_gains(s: &str) -> Result<Gains, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected kv,ka,kr, got {s:?}"));
    }
    let mut vals = [0.0f64; 3];
    for (slot, text) in vals.iter_mut().zip(&parts) {
        *slot = text
            .trim()
            .parse()
            .map_err(|e| format!("bad gain {text:?}: {e}"))?;
    }
    Ok(Gains {
        k_v: vals[0],
        k_a: vals[1],
        k_r: vals[2],
    })
}

#[derive(Debug, Args)]
struct BatchArgs {
    dir: PathBuf,
    /// Root directory for per-scenario output bundles.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        Error::NumericalAbort { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

/// Parse arguments and dispatch; returns the process exit code.
pub fn main_entry<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Run(args) => run_command(&args),
        Command::Validate { scenario } => validate_command(&scenario),
        Command::Balance(args) => balance_command(&args),
        Command::Batch(args) => batch_command(&args),
    }
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig, i32> {
    scenario::parse_scenario(path).map_err(|e| {
        eprintln!("error: {e}");
        exit_code_for(&e)
    })
}

fn run_command(args: &RunArgs) -> i32 {
    let mut cfg = match load_scenario(&args.scenario) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    if let Some(dt) = args.dt {
        cfg.dt = dt;
    }
    if let Some(t_end) = args.t_end {
        cfg.t_end = t_end;
    }
    match execute_run(&cfg, args.force, &args.out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn execute_run(cfg: &ScenarioConfig, force: bool, out: &Path) -> crate::Result<i32> {
    let record = if force {
        engine::run_forced(cfg)?
    } else {
        engine::run(cfg)?
    };
    let bundle = output::write_outputs(&record, out)?;
    let summary = &record.summary;
    println!(
        "contained={} velocity_spread_final={:e} min_distance={:e} events={}",
        summary.containment.contained,
        summary.velocity_spread_final,
        summary.min_distance_over_run,
        record.events.len()
    );
    println!("outputs: {}", bundle.summary.parent().unwrap_or(out).display());
    if let Some(reason) = &summary.aborted {
        eprintln!("numerical abort: {reason}");
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}

fn validate_command(path: &Path) -> i32 {
    let cfg = match load_scenario(path) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    let report = validate_scenario(&cfg);
    if report.pass() {
        println!("pass");
        EXIT_OK
    } else {
        print!("{report}");
        EXIT_VALIDATION
    }
}

fn balance_command(args: &BalanceArgs) -> i32 {
    // The sensing radius only needs to cover the polygon; three times the
    // radius keeps every neighbor and separation strictly inside range.
    let radius = 3.0 * args.delta;
    let pot = BoundedPotential::new(radius, 20000.0);
    let disp = match controllers::desired_polygon(args.s, args.delta, 0.0) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let mut positions = vec![Vector::zeros(2)];
    for d in &disp {
        positions.push(-d);
    }
    let velocities = vec![Vector::zeros(2); positions.len()];
    let graph = topology::build_graph(&positions, radius);
    match controllers::u_malicious(
        0,
        &positions,
        &velocities,
        &graph,
        &pot,
        args.k.k_v,
        args.k.k_a,
        args.k.k_r,
    ) {
        Ok(u) => {
            println!("residual={:e}", u.norm());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_VALIDATION
        }
    }
}

fn batch_command(args: &BatchArgs) -> i32 {
    let entries = match std::fs::read_dir(&args.dir) {
        Ok(entries) => entries,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    let mut scenarios: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    scenarios.sort();
    if scenarios.is_empty() {
        eprintln!("error: no *.json scenarios in {}", args.dir.display());
        return EXIT_IO;
    }

    let codes: Vec<i32> = scenarios
        .par_iter()
        .map(|path| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            let out = args.out.join(&stem);
            let code = match scenario::parse_scenario(path) {
                Ok(cfg) => match execute_run(&cfg, false, &out) {
                    Ok(code) => code,
                    Err(e) => {
                        eprintln!("{stem}: {e}");
                        exit_code_for(&e)
                    }
                },
                Err(e) => {
                    eprintln!("{stem}: {e}");
                    exit_code_for(&e)
                }
            };
            println!("{stem}: exit {code}");
            code
        })
        .collect();
    codes.into_iter().max().unwrap_or(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_parser() {
        let g = parse_gains("0.8,0,450000").unwrap();
        assert_eq!(g.k_v, 0.8);
        assert_eq!(g.k_a, 0.0);
        assert_eq!(g.k_r, 450000.0);
        assert!(parse_gains("1,2").is_err());
        assert!(parse_gains("a,b,c").is_err());
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(main_entry(["flockguard", "--definitely-not-a-flag"]), EXIT_USAGE);
        assert_eq!(main_entry(["flockguard", "frobnicate"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_cleanly() {
        assert_eq!(main_entry(["flockguard", "--help"]), EXIT_OK);
    }

    #[test]
    fn balance_residual_is_tiny() {
        assert_eq!(
            main_entry(["flockguard", "balance", "--s", "3", "--delta", "12", "--k", "0.8,0,450000"]),
            EXIT_OK
        );
    }

    #[test]
    fn missing_scenario_is_io_error() {
        assert_eq!(main_entry(["flockguard", "run", "/no/such/file.json"]), EXIT_IO);
        assert_eq!(
            main_entry(["flockguard", "validate", "/no/such/file.json"]),
            EXIT_IO
        );
    }
}
