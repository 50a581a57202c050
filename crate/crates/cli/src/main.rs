//! `xrsynth`: synthetic radiographs, lung masks, training datasets, lung
//! structure enhancement and evaluation from the command line.
//!
//! Exit status is 0 on success, 2 for usage or input errors and 3 for
//! data-integrity failures. Errors are printed to standard error as a single
//! line `xrsynth: <CODE>: <message>`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xrsynth_core::ErrorClass;

use crate::config::PipelineConfig;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INTEGRITY: u8 = 3;

/// A failed command: machine-readable code, exit status, message.
#[derive(Debug)]
pub struct Failure {
    pub code: &'static str,
    pub exit: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: "E_USAGE",
            exit: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn integrity(code: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code,
            exit: EXIT_INTEGRITY,
            message: message.into(),
        }
    }
}

impl From<xrsynth_core::Error> for Failure {
    fn from(e: xrsynth_core::Error) -> Self {
        Failure {
            code: e.code(),
            exit: match e.class() {
                ErrorClass::Input => EXIT_INPUT,
                ErrorClass::Integrity => EXIT_INTEGRITY,
            },
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "xrsynth", version, about = "Synthetic radiographs and lung-structure enhancement from CT")]
struct Cli {
    /// `key = value` configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for data-parallel stages [default: the `workers`
    /// config key, then $XRSYNTH_WORKERS, then all cores].
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Default)]
pub struct DrrArgs {
    /// Water attenuation coefficient in cm^-1 [default: 0.2].
    #[arg(long)]
    pub mu_water: Option<f64>,
    /// Exponent scale of the radiograph [default: 0.02].
    #[arg(long)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Args, Default)]
pub struct SegArgs {
    /// Voxels strictly below this HU value are lung candidates [default: -500].
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<i16>,
    /// In-slice connectivity, 4 or 8 [default: 8].
    #[arg(long)]
    pub connectivity: Option<String>,
    /// Components kept per axial slice [default: 2].
    #[arg(long)]
    pub max_components: Option<usize>,
    /// Keep components touching the slice border.
    #[arg(long)]
    pub keep_border_components: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic CT volume with analytic ground truth.
    Phantom(commands::PhantomArgs),
    /// Project a CT volume into a radiograph.
    Drr(commands::DrrCmdArgs),
    /// Segment lungs in a CT volume and project the mask.
    Lungseg(commands::LungsegArgs),
    /// Generate training pairs and masks for a set of cases.
    Dataset(commands::DatasetArgs),
    /// Fuse a radiograph with an extracted lung image.
    Enhance(commands::EnhanceArgs),
    /// Score predictions against a dataset, or bootstrap average precision.
    Metrics(commands::MetricsArgs),
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if cfg.workers.is_none() {
        if let Ok(v) = std::env::var("XRSYNTH_WORKERS") {
            let n = v
                .trim()
                .parse::<usize>()
                .map_err(|_| Failure::usage(format!("XRSYNTH_WORKERS: `{v}` is not a worker count")))?;
            cfg.workers = Some(n);
        }
    }
    let workers = cfg.workers;
    xrsynth_core::exec::with_workers(workers, move || match cli.command {
        Command::Phantom(a) => commands::phantom(a),
        Command::Drr(a) => commands::drr(a, cfg),
        Command::Lungseg(a) => commands::lungseg(a, cfg),
        Command::Dataset(a) => commands::dataset(a, cfg),
        Command::Enhance(a) => commands::enhance(a, cfg),
        Command::Metrics(a) => commands::metrics(a, cfg),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("xrsynth: {}: {}", f.code, f.message.replace('\n', " "));
            ExitCode::from(f.exit)
        }
    }
}
