mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use xcu_core::error::ErrorClass;

#[derive(Debug, Parser)]
#[command(name = "xcu", version, about = "Residual XC functional toolkit: synthetic data, training, evaluation")]
pub struct Cli {
    /// Run configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for the command's random choices; overrides the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; overrides XCU_OUT_DIR and the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset (grids + manifest).
    Synth,
    /// Partition the reactions of a manifest 6:2:2.
    Split {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Train a model and write checkpoint + log.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        /// RBNET, DIRECT_U or MSE_RESNET
        #[arg(long)]
        loss_mode: Option<String>,
        /// X11 or Y16
        #[arg(long)]
        feature_set: Option<String>,
        /// Train this many consecutive seeds.
        #[arg(long)]
        repetitions: Option<usize>,
    },
    /// Evaluate checkpoints against the zero-network baseline.
    Eval {
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
        /// train, validation or test
        #[arg(long, default_value = "test")]
        subset: String,
    },
    /// Write the per-point residual field of one species.
    ExportResiduals {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        species: String,
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Retrain over a k1 x k2 grid and tabulate held-out RMSE.
    Sweep {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        split: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        k1: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        k2: Vec<f64>,
        #[arg(long)]
        epochs: Option<usize>,
    },
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Usage => 1,
        ErrorClass::Data => 2,
        ErrorClass::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
