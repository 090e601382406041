//! Command-line front end. Every command takes its settings from flags
//! and an optional JSON `--config` file, writes its outputs to `--out`,
//! and echoes the resolved settings to `<out>/config.json`; re-running from
//! that file reproduces every output byte for byte.
//!
//! Exit status: 0 on success, 1 for invalid input, 2 when a size guard
//! stops the computation.

mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use clap::{Parser, Subcommand};

pub use config::{ExperimentConfig, Flags};
pub use report::{emit_report, json_to_string, Format, Report};

use crate::error::{Error, Result};
use crate::model::io::write_text;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_GUARD: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "topic-ident", version, about = "Identifiability and estimation experiments for topic models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the identifiability order of one topic matrix
    Identify(Flags),
    /// Regenerate and classify the seven reference configurations
    Table1(Flags),
    /// MLE error against sample size and its log-log slope
    Rates(Flags),
    /// Likelihood-ratio test between a topic matrix and a perturbation
    #[command(name = "two-point")]
    TwoPoint(Flags),
    /// Check the distance inequalities on random perturbations
    Bounds(Flags),
    /// Fit topics to a corpus by constrained maximum likelihood
    Mle(Flags),
    /// Draw a corpus from a topic matrix
    Simulate(Flags),
}

impl Command {
    fn parts(&self) -> (&'static str, &Flags) {
        match self {
            Command::Identify(f) => ("identify", f),
            Command::Table1(f) => ("table1", f),
            Command::Rates(f) => ("rates", f),
            Command::TwoPoint(f) => ("two-point", f),
            Command::Bounds(f) => ("bounds", f),
            Command::Mle(f) => ("mle", f),
            Command::Simulate(f) => ("simulate", f),
        }
    }
}

/// Runs one command line (`argv[0]` is the program name) and returns the
/// process exit status.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let (name, flags) = cli.command.parts();
    match execute(name, flags) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_guard() {
                EXIT_GUARD
            } else {
                EXIT_INVALID
            }
        }
    }
}

fn execute(name: &str, flags: &Flags) -> Result<()> {
    let file = match &flags.config {
        Some(path) => Some(ExperimentConfig::from_json(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?),
        None => None,
    };
    let cfg = ExperimentConfig::merge(file, flags, name)?;
    let out = flags.out.as_deref().ok_or_else(|| Error::InvalidParameter("--out <dir> is required".into()))?;
    if flags.workers == Some(0) {
        return Err(Error::InvalidParameter("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(flags.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let resolved = pool.install(|| commands::dispatch(cfg, out))?;
    write_json(&out.join("config.json"), &resolved.to_json())
}

pub(crate) fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_text(path, &json_to_string(value))
}
