//! Command-line entry point: gradient checks, toy training, pair sampling,
//! and common-object-pair evaluation over documented file formats.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use copair_core::losses::LossKind;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "copair", version, about = "Common-object pair matching toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Flat key=value config file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for every random draw in the command.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check analytic loss gradients against finite differences.
    Gradcheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Loss to check (default: all).
        #[arg(long)]
        loss: Option<String>,
        /// Corrupt the analytic gradient first (failure-path test hook).
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Train embeddings on synthetic clusters and write the loss trace.
    TrainToy {
        #[command(flatten)]
        common: CommonArgs,
        /// Loss to train with.
        #[arg(long)]
        loss: Option<String>,
        /// Trace output path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build pair lists / class indexes / batch samples from annotations.
    SamplePairs {
        #[command(flatten)]
        common: CommonArgs,
        /// Annotation file (JSON lines).
        #[arg(long)]
        annotations: PathBuf,
        /// Output path.
        #[arg(long)]
        out: PathBuf,
        /// pair-list | class-index | batch.
        #[arg(long)]
        algorithm: Option<String>,
        /// Batch slots for the batch algorithm.
        #[arg(long)]
        batch_size: Option<usize>,
        /// Base class for the batch algorithm (default: most-populated).
        #[arg(long)]
        base_class: Option<usize>,
    },
    /// Evaluate detection dumps for one image pair against ground truth.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Detection dump for image A.
        #[arg(long)]
        dets_a: PathBuf,
        /// Detection dump for image B.
        #[arg(long)]
        dets_b: PathBuf,
        /// Ground-truth annotations: exactly two image records, A then B.
        #[arg(long)]
        gt: PathBuf,
        /// Report output path.
        #[arg(long)]
        out: PathBuf,
        /// sscod | hard_match | soft_match.
        #[arg(long)]
        mode: Option<String>,
        /// Threads for the per-threshold fan-out.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn usage_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(2)
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Gradcheck { common, loss, corrupt } => {
            let cfg = load_config(&common)?;
            let losses = match &loss {
                None => Vec::new(),
                Some(name) => match LossKind::parse(name) {
                    Some(kind) => vec![kind],
                    None => return Ok(usage_error(format!("unknown loss {name:?}"))),
                },
            };
            let outcome = commands::gradcheck::run(&cfg, &losses, corrupt)?;
            print!("{}", outcome.report);
            if outcome.failures > 0 {
                eprintln!("{} loss(es) failed the gradient check", outcome.failures);
                return Ok(ExitCode::FAILURE);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::TrainToy { common, loss, out } => {
            let mut cfg = load_config(&common)?;
            if let Some(name) = &loss {
                match LossKind::parse(name) {
                    Some(kind) => cfg.loss = kind,
                    None => return Ok(usage_error(format!("unknown loss {name:?}"))),
                }
            }
            let summary = commands::train_toy::run(&cfg, &out)?;
            println!("{summary}");
            Ok(ExitCode::SUCCESS)
        }
        Command::SamplePairs { common, annotations, out, algorithm, batch_size, base_class } => {
            let mut cfg = load_config(&common)?;
            if let Some(name) = &algorithm {
                cfg.algorithm = match config::SampleAlgorithm::parse(name) {
                    Ok(a) => a,
                    Err(e) => return Ok(usage_error(e)),
                };
            }
            if let Some(n) = batch_size {
                cfg.batch_size = n;
            }
            if base_class.is_some() {
                cfg.base_class = base_class;
            }
            let summary = commands::sample_pairs::run(&cfg, &annotations, &out)?;
            println!("{summary}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { common, dets_a, dets_b, gt, out, mode, jobs } => {
            let mut cfg = load_config(&common)?;
            if let Some(name) = &mode {
                cfg.mode = match config::EvalMode::parse(name) {
                    Ok(m) => m,
                    Err(e) => return Ok(usage_error(e)),
                };
            }
            if let Some(jobs) = jobs {
                cfg.jobs = jobs;
            }
            let inputs = commands::evaluate::EvalInputs { dets_a, dets_b, gt };
            let summary = commands::evaluate::run(&cfg, &inputs, &out)?;
            println!("{summary}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
