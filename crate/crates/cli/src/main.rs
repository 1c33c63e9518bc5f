mod backend;
mod commands;
mod config;
mod error;
mod manifest;
mod study_file;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use radsimp_core::corpus::{self, RadiologySentence};

use config::{BackendKind, RunConfig};
use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "radsimp", version, about = "Simplify radiology sentences and evaluate the results with human raters")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured worker count.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the configured chat backend.
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Produce the four simplification variants for every sentence.
    Generate(commands::generate::Args),
    /// Score originals and simplifications with FKGL, GFI and ARI.
    Readability(commands::readability::Args),
    /// Compute the human-evaluation report from a survey export.
    Analyze(commands::analyze::Args),
    /// Host one or more studies over HTTP.
    Serve(commands::serve::Args),
    /// Print the Latin-square variant assignment.
    Plan(commands::plan::Args),
    /// Check input files without doing anything else.
    Validate(commands::validate::Args),
}

/// Resolved configuration shared by every subcommand.
pub struct Settings {
    pub config: RunConfig,
    pub config_path: Option<PathBuf>,
}

impl Settings {
    fn from_cli(cli: &Cli) -> Result<Self> {
        let mut config = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        if let Some(w) = cli.workers {
            config.workers = w;
        }
        if let Some(b) = cli.backend {
            config.backend = b;
        }
        config.validate()?;
        Ok(Self {
            config,
            config_path: cli.config.clone(),
        })
    }
}

/// The bundled demo corpus when `path` is `None`.
pub fn load_corpus(path: Option<&Path>) -> Result<Vec<RadiologySentence>> {
    match path {
        Some(p) => corpus::load_corpus(p).map_err(|e| CliError::from((p, e))),
        None => Ok(corpus::demo_corpus()),
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Temp file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes)
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| CliError::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    let settings = Settings::from_cli(&cli)?;
    match cli.command {
        Command::Generate(a) => commands::generate::run(&settings, a),
        Command::Readability(a) => commands::readability::run(&settings, a),
        Command::Analyze(a) => commands::analyze::run(&settings, a),
        Command::Serve(a) => commands::serve::run(&settings, a),
        Command::Plan(a) => commands::plan::run(&settings, a),
        Command::Validate(a) => commands::validate::run(&settings, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = std::io::stdout().flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
