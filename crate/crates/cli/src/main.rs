//! `gibbslab`: config-driven runner for the ground-state, sampling, oracle,
//! DLR, energy and diagnostic pipelines.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use output::{Output, Report};

#[derive(Parser)]
#[command(name = "gibbslab", version, about = "Path-space Gibbs measure laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    config: PathBuf,
    /// Exit with status 1 when any check fails.
    #[arg(long)]
    strict: bool,
    /// Output directory; overrides GIBBSLAB_OUT and `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state, heat kernel and semigroup residuals.
    SolveGroundState(RunArgs),
    /// MCMC over the finite-volume Gibbs measure.
    Sample(RunArgs),
    /// MCMC marginals against exact enumeration on the oracle instance.
    OracleCompare(RunArgs),
    /// Local Gibbs kernel against the exact conditional, plus a local chain.
    DlrTest(RunArgs),
    /// Interaction energies, folding identity and shift inequality on reference paths.
    EnergyCheck(RunArgs),
    /// Hitting-time, ratio, Feynman-Kac, tightness, window and growth reports.
    Diagnose(RunArgs),
    /// C_inf, monotonicity in t and the sufficient shift conditions.
    Conditions(RunArgs),
}

impl Command {
    fn split(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::SolveGroundState(a) => ("solve-ground-state", a),
            Command::Sample(a) => ("sample", a),
            Command::OracleCompare(a) => ("oracle-compare", a),
            Command::DlrTest(a) => ("dlr-test", a),
            Command::EnergyCheck(a) => ("energy-check", a),
            Command::Diagnose(a) => ("diagnose", a),
            Command::Conditions(a) => ("conditions", a),
        }
    }
}

fn execute(name: &str, cfg: &ExperimentConfig, out: &mut Output) -> Result<Report> {
    match name {
        "solve-ground-state" => commands::solve_ground_state_cmd(cfg, out),
        "sample" => commands::sample_cmd(cfg, out),
        "oracle-compare" => commands::oracle_compare_cmd(cfg, out),
        "dlr-test" => commands::dlr_test_cmd(cfg, out),
        "energy-check" => commands::energy_check_cmd(cfg, out),
        "diagnose" => commands::diagnose_cmd(cfg, out),
        "conditions" => commands::conditions_cmd(cfg, out),
        _ => unreachable!(),
    }
}

fn run(cli: Cli) -> Result<bool> {
    let (name, args) = cli.command.split();
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.resolve_out_dir();
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    eprintln!("effective config:\n{}", toml::to_string(&cfg)?);
    let mut out = Output::new(name, &cfg)?;
    let report = execute(name, &cfg, &mut out)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &report.checks {
        println!("{}: {} | {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    let path = out.finish(&report)?;
    println!("summary: {}", path.display());
    Ok(report.checks.iter().all(|c| c.passed) || !args.strict)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
