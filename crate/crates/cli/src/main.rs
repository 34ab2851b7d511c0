//! `nifs-atlas`: build non-autonomous IFS from JSON configs and emit piece
//! tables, thinness certificates, dichotomy reports, images and samples.

mod actions;
mod config;
mod presets;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::actions::Artifact;
use crate::config::{Action, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] nifs_atlas::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_hypothesis_failure() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nifs-atlas", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Piece enclosures X_k^(j) as CSV.
    Pieces(RunArgs),
    /// Thinness certificate as JSON.
    Certify(RunArgs),
    /// Per-stage separation report for a polynomial sequence.
    Dichotomy(RunArgs),
    /// Escape-time classification as a binary PPM image.
    Render(RunArgs),
    /// Random coefficient sequences, or limit-set points for other families.
    Sample(RunArgs),
    /// Invariance checks between adjacent columns.
    Invariance(RunArgs),
    /// List the built-in presets, or run one.
    Examples(ExampleArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "NIFS_ATLAS_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Master seed for sampling; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ExampleArgs {
    name: Option<String>,
    #[command(flatten)]
    common: Common,
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn init_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn emit(path: &Path, artifact: &Artifact) -> Result<ExitCode, CliError> {
    write_atomic(path, &artifact.bytes)?;
    println!("{} -> {}", artifact.summary, path.display());
    Ok(ExitCode::from(if artifact.failed { 2 } else { 0 }))
}

fn run_action(action: Action, args: &RunArgs) -> Result<ExitCode, CliError> {
    let src = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = RunConfig::from_json(&src)?;
    if let Some(declared) = cfg.action {
        if declared != action {
            return Err(CliError::Config(format!("config declares action {declared:?} but {action:?} was requested")));
        }
    }
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let artifact = actions::run(action, &cfg, seed)?;
    let dir = args.common.out.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    let file = cfg.output.file.clone().unwrap_or_else(|| action.default_file().to_string());
    emit(&dir.join(file), &artifact)
}

fn run_example(args: &ExampleArgs) -> Result<ExitCode, CliError> {
    let Some(name) = &args.name else {
        print!("{}", presets::listing());
        return Ok(ExitCode::SUCCESS);
    };
    let preset = presets::find(name).ok_or_else(|| {
        CliError::Config(format!("unknown preset {name:?}; available:\n{}", presets::listing().trim_end()))
    })?;
    let artifact = match preset.config()? {
        Some((action, cfg)) => actions::run(action, &cfg, cfg.seed.unwrap_or(0))?,
        None => presets::closure_search(),
    };
    let dir = args.common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    emit(&dir.join(preset.file_name()), &artifact)
}

fn dispatch(command: &Command) -> Result<ExitCode, CliError> {
    let (action, args) = match command {
        Command::Examples(a) => {
            init_threads(a.common.threads)?;
            return run_example(a);
        }
        Command::Pieces(a) => (Action::Pieces, a),
        Command::Certify(a) => (Action::Certify, a),
        Command::Dichotomy(a) => (Action::Dichotomy, a),
        Command::Render(a) => (Action::Render, a),
        Command::Sample(a) => (Action::Sample, a),
        Command::Invariance(a) => (Action::Invariance, a),
    };
    init_threads(args.common.threads)?;
    run_action(action, args)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("nifs-atlas: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
