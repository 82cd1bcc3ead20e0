//! `qbind`: train, evaluate, and probe peptide-binding classifiers built on
//! an emulated gate-model quantum device.
//!
//! Every command reads one TOML config and writes a self-contained run
//! directory. Exit codes: 0 success, 2 invalid configuration, 3 data error,
//! 4 numerical failure.

mod commands;
mod config;
mod rundir;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qbind_core::Error;

use commands::CommandKind;
use config::ExperimentConfig;
use rundir::RunDir;

#[derive(Parser)]
#[command(name = "qbind", version, about = "Peptide-binding classifiers on an emulated quantum device")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest or generate a labeled peptide dataset
    PrepareData(RunArgs),
    /// Class balance, residue frequencies, and length distribution
    Stats(RunArgs),
    /// Train one fold and save a checkpoint
    Train(RunArgs),
    /// Train and score every fold
    CrossValidate(RunArgs),
    /// Score the test split under shot and depolarizing noise
    Emulate(RunArgs),
    /// Zero-noise extrapolation on test-set circuits
    Mitigate(RunArgs),
    /// Native and decomposed gate tallies for the configured model
    GateCount(RunArgs),
    /// Worst-case F1 interval under finite-shot readout
    ShotBounds(RunArgs),
    /// Per-position attributions and residue heatmaps
    Attribute(RunArgs),
}

/// Flags shared by every command; each one overrides its config field.
#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (TOML)
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Run-directory suffix (default: the command name)
    #[arg(long)]
    tag: Option<String>,
    /// Parent directory for run output
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads; 0 means all available cores
    #[arg(long)]
    workers: Option<usize>,
    /// Fold index for single-fold commands
    #[arg(long)]
    fold: Option<usize>,
}

impl Command {
    fn split(&self) -> (CommandKind, &RunArgs) {
        match self {
            Command::PrepareData(a) => (CommandKind::PrepareData, a),
            Command::Stats(a) => (CommandKind::Stats, a),
            Command::Train(a) => (CommandKind::Train, a),
            Command::CrossValidate(a) => (CommandKind::CrossValidate, a),
            Command::Emulate(a) => (CommandKind::Emulate, a),
            Command::Mitigate(a) => (CommandKind::Mitigate, a),
            Command::GateCount(a) => (CommandKind::GateCount, a),
            Command::ShotBounds(a) => (CommandKind::ShotBounds, a),
            Command::Attribute(a) => (CommandKind::Attribute, a),
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    use Error::*;
    match err {
        // The run was asked for something the library cannot represent.
        Config(_) | ModelShape { .. } | QubitOutOfRange { .. } | QubitCountUnsupported { .. }
        | MissingAngle { .. } | UnexpectedAngle { .. } | BadControl { .. } | ParamIdGap { .. }
        | ParamCountMismatch { .. } | LengthMismatch { .. } | UnboundParams { .. } | ZeroShots
        | BadFoldFactor { .. } | DegenerateFit | ZeroSamples | BadTargetFraction { .. }
        | EmptySequence => 2,
        // The inputs on disk are missing, malformed, or unusable.
        DataFormat { .. } | DatasetTooSmall { .. } | AlreadyBalanced { .. }
        | UnknownToken { .. } | EmptyBatch | NoLengthNine | Io(_) | Checkpoint(_) => 3,
        // The computation itself went off the rails.
        NonFiniteLoss { .. } | ScoreOutOfRange { .. } => 4,
    }
}

fn execute(kind: CommandKind, args: &RunArgs) -> qbind_core::Result<()> {
    let bytes = std::fs::read(&args.config).map_err(|e| {
        Error::Config(format!("cannot read config {}: {e}", args.config.display()))
    })?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::Config(format!("config {} is not UTF-8", args.config.display())))?;
    let mut cfg: ExperimentConfig = toml::from_str(text)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    cfg.apply_overrides(
        args.tag.as_deref(),
        args.out_dir.as_ref(),
        args.workers,
        args.fold,
    );
    // Everything checkable without running is checked here, so a rejected
    // config leaves no output directory behind.
    cfg.validate_for(kind)?;

    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build_global()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let tag = cfg.tag.clone().unwrap_or_else(|| kind.name().to_string());
    let mut run = RunDir::create(&cfg.out_dir, &tag, &bytes)?;
    run.log(&format!("qbind {} v{}", kind.name(), env!("CARGO_PKG_VERSION")));
    run.log(&format!(
        "workers: {} (0 = all cores); effective {}",
        cfg.workers,
        rayon::current_num_threads()
    ));
    let result = commands::dispatch(kind, &cfg, &mut run);
    match &result {
        Ok(()) => {
            run.log("done");
            println!("{}", run.root.display());
        }
        Err(e) => run.log(&format!("failed: {e}")),
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
