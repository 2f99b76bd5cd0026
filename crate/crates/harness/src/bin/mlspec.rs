use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mlspec::config::{ConfigError, ExperimentConfig, ExperimentKind};
use mlspec::experiments::HarnessError;
use mlspec::{emit, run, selftest};

const EXIT_CONFIG: u8 = 2;
const EXIT_SELFTEST: u8 = 3;

#[derive(Parser)]
#[command(
    name = "mlspec",
    version,
    about = "Monte Carlo studies for bias-corrected joint spectral embedding"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON experiment config; defaults to the desk-scale preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: config `output`, else results/<kind>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Use the published simulation sizes instead of the desk-scale preset.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    SubspaceError(RunArgs),
    PowerTable(RunArgs),
    NullDist(RunArgs),
    Ellipse(RunArgs),
    Community(RunArgs),
    /// Quick correctness checks; exits 3 if any fails.
    Selftest,
}

fn load(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match (&args.config, args.full_scale) {
        (Some(_), true) => {
            return Err(ConfigError::Invalid(
                "--full-scale selects a preset and cannot be combined with --config".into(),
            ))
        }
        (Some(path), false) => ExperimentConfig::load(path)?,
        (None, true) => ExperimentConfig::full_preset(kind),
        (None, false) => ExperimentConfig::desk_preset(kind),
    };
    if cfg.kind != kind {
        return Err(ConfigError::Invalid(format!(
            "config is for {}, not {}",
            cfg.kind.as_str(),
            kind.as_str()
        )));
    }
    if let Ok(seed) = std::env::var("MLSPEC_SEED") {
        cfg.seed = seed
            .trim()
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("MLSPEC_SEED={seed:?} is not an unsigned integer")))?;
    }
    if let Some(t) = args.threads {
        cfg.threads = t;
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_experiment(kind: ExperimentKind, args: &RunArgs) -> ExitCode {
    let cfg = match load(kind, args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = match run(&cfg) {
        Ok(o) => o,
        Err(HarnessError::Config(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let dir = cfg
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("results").join(kind.as_str()));
    match emit(&out, &cfg, &dir) {
        Ok(files) => {
            for r in &out.summary {
                println!(
                    "rho={:<6} {:<10} {:<24} {:>12.6} ({}/{})",
                    r.rho, r.subject, r.statistic, r.value, r.successes, r.replicates
                );
            }
            eprintln!("wrote {}", files.records.parent().unwrap_or(&dir).display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: writing results: {e}");
            ExitCode::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::SubspaceError(a) => run_experiment(ExperimentKind::SubspaceError, a),
        Command::PowerTable(a) => run_experiment(ExperimentKind::PowerTable, a),
        Command::NullDist(a) => run_experiment(ExperimentKind::NullDist, a),
        Command::Ellipse(a) => run_experiment(ExperimentKind::Ellipse, a),
        Command::Community(a) => run_experiment(ExperimentKind::Community, a),
        Command::Selftest => {
            let checks = selftest::run_all();
            for c in &checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {} {}", c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_SELFTEST)
            }
        }
    }
}
