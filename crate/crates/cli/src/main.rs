//! `induct`: run, replay and score domain-induction experiments.
//!
//! Exit codes: 0 success, 1 runtime failure or replay divergence, 2 invalid
//! configuration or input.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use induct_core::envs::EnvId;
use induct_core::proposer::ProposerKind;

use config::Overrides;

/// Marks errors caused by bad configuration or input files (exit code 2).
#[derive(Debug)]
pub struct InvalidInput(pub String);

impl fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

#[derive(Parser)]
#[command(name = "induct", version, about = "Learn planning domains by interacting with symbolic environments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the learning loop for every configured task and seed.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run only this seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        env: Option<EnvId>,
        /// Run only this task.
        #[arg(long)]
        task: Option<String>,
        /// Use this proposer kind for every role.
        #[arg(long)]
        proposer: Option<ProposerKind>,
        /// Output directory for traces and the summary.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Concurrent runs (default: one per core).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Re-execute a recorded trace and check the environment answers identically.
    Replay { trace: PathBuf },
    /// Recompute metrics from traces; prints CSV.
    Eval {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Also write the rows as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the learned domain at a belief threshold.
    PrintDomain {
        trace: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config, seed, env, task, proposer, out, jobs } => {
            commands::cmd_run(config.as_deref(), &Overrides { seed, env, task, proposer, out }, jobs)
        }
        Command::Replay { trace } => commands::cmd_replay(&trace),
        Command::Eval { traces, out } => commands::cmd_eval(&traces, out.as_deref()).map(|_| true),
        Command::PrintDomain { trace, threshold } => commands::cmd_print_domain(&trace, threshold).map(|_| true),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InvalidInput>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
