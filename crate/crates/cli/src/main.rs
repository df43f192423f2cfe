use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use distreg_cli::{execute, Experiment, Overrides};

#[derive(Parser)]
#[command(name = "distreg", version, about = "Distribution regression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (dataset directory for gen-data); stdout if absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a two-stage dataset
    GenData(Common),
    /// Build analytic networks and report their error and certificates
    Construct(Common),
    /// Measured approximation error against the bound over an N grid
    ApproxRate(Common),
    /// Excess risk of trained networks over an m grid
    LearnRate(Common),
    /// Covering-number bounds over an (N, ε) grid
    CoverBound(Common),
    /// Two-stage error decomposition over repeated runs
    Decompose(Common),
    /// Train on one dataset
    Train(Common),
}

fn main() -> ExitCode {
    let (experiment, common) = match Cli::parse().command {
        Command::GenData(c) => (Experiment::GenData, c),
        Command::Construct(c) => (Experiment::Construct, c),
        Command::ApproxRate(c) => (Experiment::ApproxRate, c),
        Command::LearnRate(c) => (Experiment::LearnRate, c),
        Command::CoverBound(c) => (Experiment::CoverBound, c),
        Command::Decompose(c) => (Experiment::Decompose, c),
        Command::Train(c) => (Experiment::Train, c),
    };
    let ov = Overrides {
        seed: common.seed,
        out: common.out,
        jobs: common.jobs,
    };
    match execute(experiment, common.config.as_deref(), &ov) {
        Ok(text) => {
            if let Some(t) = text {
                print!("{t}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
