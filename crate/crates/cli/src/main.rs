//! `wavepair`: config-driven experiments over the coupled-wave coefficient
//! laboratory. Exit codes: 0 success, 2 named precondition refused, 1 any
//! other failure.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wavepair_cli::config::{parse_config, ExperimentConfig, ExperimentKind};
use wavepair_cli::experiments::{fbi, svd, sweep, weights, ExperimentError};

#[derive(Parser)]
#[command(
    name = "wavepair",
    about = "Experiment harness for the coupled-wave coefficient laboratory",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Noise sweep: reconstruct across a ladder of noise levels and fit rates
    Sweep(RunArgs),
    /// Singular spectrum of the linearized observation map
    Svd(RunArgs),
    /// Transform diagnostics: identity decay, mean value, energy comparison
    Fbi(RunArgs),
    /// Weight bookkeeping audit: level constants, ordering, decay scalars
    Weights(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for independent rows (0 uses all cores)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Override the seed from the configuration
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (expected, args) = match &cli.cmd {
        Cmd::Sweep(a) => (ExperimentKind::Sweep, a),
        Cmd::Svd(a) => (ExperimentKind::Svd, a),
        Cmd::Fbi(a) => (ExperimentKind::FbiDiagnostics, a),
        Cmd::Weights(a) => (ExperimentKind::WeightsAudit, a),
    };
    match execute(expected, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(ExperimentError::Refused(msg)) => {
            eprintln!("refused: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load(expected: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = parse_config(&args.config)?;
    if cfg.kind != expected {
        // wrong subcommand for the file: a usage error, not a refusal
        return Err(wavepair_cli::config::ConfigError::Invalid(format!(
            "config declares kind {} but the {} subcommand was invoked",
            cfg.kind.as_str(),
            expected.as_str()
        ))
        .into());
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn execute(expected: ExperimentKind, args: &RunArgs) -> Result<(), ExperimentError> {
    if args.jobs > 0 {
        // A one-shot binary; the pool can only be configured once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build_global();
    }
    let cfg = load(expected, args)?;
    match cfg.kind {
        ExperimentKind::Sweep => {
            sweep::run_noise_sweep(&cfg, &args.out)?;
        }
        ExperimentKind::Svd => {
            svd::run_svd(&cfg, &args.out)?;
        }
        ExperimentKind::FbiDiagnostics => {
            fbi::run_fbi(&cfg, &args.out)?;
        }
        ExperimentKind::WeightsAudit => {
            weights::run_weights_audit(&cfg, &args.out)?;
        }
    }
    Ok(())
}
