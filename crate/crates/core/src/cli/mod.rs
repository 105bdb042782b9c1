//! Command-line front end. Every command writes its outputs under one
//! directory together with the fully resolved settings it ran with.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::IsTerminal;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use config::{
    BaselineParams, BlockSpec, DatasetConfig, EvaluationParams, ExperimentConfig, ModelKind, SourceFormat, SplitParams,
};

use crate::dataset::DatasetFormat;
use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "ganmf", version, about = "Adversarial matrix factorization for top-N recommendation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Held-out test set, excluding train items.
    Test,
    /// Validation set, excluding subtrain items.
    Validation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    /// Feature-matching weight from 0 to 1 in steps of 0.2.
    FmSweep,
    /// Energy discriminator against a binary classifier.
    BinDisc,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a raw dataset and write the binary matrix cache.
    Ingest {
        #[arg(long)]
        dataset: DatasetFormat,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a cached matrix into train/test and the inner sets.
    Split {
        #[arg(long)]
        urm: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an adversarial model described by a config file.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Score a checkpoint or a baseline on a split.
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, conflicts_with = "baseline", required_unless_present = "baseline")]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        baseline: Option<ModelKind>,
        /// Directory written by `split` (or by `train`); built from the
        /// config when absent.
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<usize>>,
        /// Also report per profile-length bucket.
        #[arg(long)]
        buckets: bool,
        #[arg(long, value_enum, default_value_t = Target::Test)]
        target: Target,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random hyperparameter search.
    Search {
        #[arg(long)]
        config: PathBuf,
        /// TOML file replacing the config's [search] table.
        #[arg(long)]
        space: Option<PathBuf>,
        #[arg(long)]
        budget: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Feature-matching sweep or discriminator ablation.
    Ablate {
        #[arg(long, value_enum)]
        which: Ablation,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cosine similarity statistics of a checkpoint's generated profiles.
    Simstats {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Pairs to sample when all pairs would exceed a million.
        #[arg(long, default_value_t = 1_000_000)]
        sample: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Users included in the exported similarity matrix.
        #[arg(long, default_value_t = 500)]
        matrix_users: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Parse { .. } | Error::Format(_) | Error::Param(_) | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn report_error(msg: &str) {
    let color = std::io::stderr().is_terminal() && std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty());
    if color {
        eprintln!("\x1b[31merror:\x1b[0m {msg}");
    } else {
        eprintln!("error: {msg}");
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            report_error(&e.to_string());
            exit_code(&e)
        }
    }
}
