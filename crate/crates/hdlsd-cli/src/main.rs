//! `hdlsd`: experiment harness for spectra of high-dimensional linear
//! time series. Simulates sample paths, estimates symmetrized lag
//! autocovariances and tapered spectral matrices, solves the limiting
//! spectral curves, and compares the two sides with KS distances.
//!
//! Exit codes: 0 full success, 1 config or environment error, 2 when at
//! least one cell failed while others completed.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use hdlsd::model::validate_assumptions;
use hdlsd_cli::config::ExperimentConfig;
use hdlsd_cli::run::{run, Action};

#[derive(Parser)]
#[command(
    name = "hdlsd",
    version,
    about = "Spectra of high-dimensional linear time series: simulation, estimation, limiting curves"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate sample paths and store them as binary containers.
    Simulate(RunArgs),
    /// Eigenvalues of symmetrized lag-autocovariance estimates.
    Esd(RunArgs),
    /// Limiting spectral curves from the kernel fixed point.
    Lsd(RunArgs),
    /// Empirical spectra against limiting curves, with KS distances.
    Compare(RunArgs),
    /// Tapered spectral estimator against its limiting curve.
    Taper(RunArgs),
    /// Check a config and report the model's standing assumptions.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: Cli) -> Result<usize> {
    match cli.cmd {
        Cmd::Simulate(a) => run_action(Action::Simulate, a),
        Cmd::Esd(a) => run_action(Action::Esd, a),
        Cmd::Lsd(a) => run_action(Action::Lsd, a),
        Cmd::Compare(a) => run_action(Action::Compare, a),
        Cmd::Taper(a) => run_action(Action::Taper, a),
        Cmd::Validate(a) => validate_config(a),
    }
}

fn run_action(action: Action, args: RunArgs) -> Result<usize> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("building the worker pool")?;
    }
    run(action, &cfg, &args.out)
}

fn validate_config(args: ValidateArgs) -> Result<usize> {
    let cfg = ExperimentConfig::load(&args.config)?;
    println!("mode: {}", cfg.mode.name());
    println!("c = {}, replicates = {}, seed = {}", cfg.c, cfg.replicates, cfg.seed);
    println!("truncation q = {}", cfg.truncation_for());
    for &p in &cfg.p_list {
        println!("p = {p} -> n = {}", cfg.n_for(p));
    }
    let report = validate_assumptions(&cfg.model);
    for check in &report.checks {
        let tag = if check.passed { "ok" } else { "FAIL" };
        println!("[{tag}] {}: {}", check.name, check.detail);
    }
    println!("sum sup |f_l| = {}", report.sum_sup_f);
    println!("sum l sup |f_l| = {}", report.sum_ell_sup_f);
    if report.all_passed() {
        Ok(0)
    } else {
        anyhow::bail!("model violates standing assumptions")
    }
}
