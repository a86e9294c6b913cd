//! `vhfplan`: data validation, training, the prediction modes, raster export
//! and the planning service from the command line.
//!
//! Exit codes: 0 on success, 1 when a command fails, 2 on usage errors.
//! Failures print `{"error": {"kind": ..., "message": ...}}` on stderr.

mod args;
mod commands;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "vhfplan", version, about = "Coverage planning for 169 MHz metering networks")]
#[command(args_override_self = true)]
struct Cli {
    /// Worker threads for feature extraction and grid search.
    #[arg(long, global = true, env = "VHFPLAN_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a map, measurement logs and a model file.
    Validate(commands::ValidateCmd),
    /// Dump the feature vector of every measurement.
    Features(commands::FeaturesCmd),
    /// Train and test on one area.
    Pm1(commands::Pm1Cmd),
    /// Train blind models on pooled donor areas.
    Train(commands::TrainCmd),
    /// Predict coverage rasters over a lattice.
    Pm2(commands::Pm2Cmd),
    /// Score blind models on measurements of an unseen area.
    Pm3(commands::Pm3Cmd),
    /// Render raster layers to PNG with sidecars and coverage outlines.
    Export(commands::ExportCmd),
    /// Serve predictions over HTTP.
    Serve(commands::ServeCmd),
    /// Generate a synthetic flat town with drive-test measurements.
    Synth(commands::SynthCmd),
    /// Repeat the run recorded in a manifest.
    Rerun(commands::RerunCmd),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] vhfplan_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().to_path_buf(), source }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "UsageError",
            CliError::Io { .. } => "IoError",
            CliError::Parse { .. } => "ParseError",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn report(kind: &str, message: &str) {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
}

fn execute(argv: Vec<String>) -> Result<(), CliError> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => return Err(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        // a rerun reaches here a second time with the pool already built
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::debug!("worker pool kept: {e}");
        }
    }
    let rest = argv[1..].to_vec();
    match cli.command {
        Command::Validate(c) => c.run(rest),
        Command::Features(c) => c.run(rest),
        Command::Pm1(c) => c.run(rest),
        Command::Train(c) => c.run(rest),
        Command::Pm2(c) => c.run(rest),
        Command::Pm3(c) => c.run(rest),
        Command::Export(c) => c.run(rest),
        Command::Serve(c) => c.run(rest),
        Command::Synth(c) => c.run(rest),
        Command::Rerun(c) => {
            let argv = c.argv()?;
            execute(std::iter::once("vhfplan".to_string()).chain(argv).collect())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::from(e.exit_code())
        }
    }
}
