//! `variety`: command-line front end for the variety toolkit.
//!
//! stdout carries results only. Diagnostics go to stderr. Exit codes:
//! 0 ok, 2 invalid input, 3 resource cap exceeded, 4 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use variety_core::{ErrorClass, PartitionMode};

mod commands;
mod report;

#[derive(Parser)]
#[command(
    name = "variety",
    version,
    about = "Variety, requisite-variety games and core/periphery analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VarietyMode {
    Entropy,
    Cardinality,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Prose,
    Formal,
}

impl From<ModeArg> for PartitionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Prose => PartitionMode::Prose,
            ModeArg::Formal => PartitionMode::Formal,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Variety of a distribution (JSON map), a JSON label array, or a file with one label per line
    Variety {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "entropy")]
        mode: VarietyMode,
        #[arg(long)]
        json: bool,
    },
    /// Core and periphery between two snapshots of a trajectory file
    Partition {
        snapshots: PathBuf,
        #[arg(long)]
        from: i64,
        #[arg(long)]
        to: i64,
        #[arg(long, value_enum, default_value = "prose")]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
    },
    /// Bound report for a regulation game; brute-forces the best policy when the file has none
    Simulate {
        game: PathBuf,
        /// Search all policies even if the file provides one
        #[arg(long)]
        brute_force: bool,
        /// Closed-loop coupling in [0, 1]; enables a simulated run
        #[arg(long)]
        coupling: Option<f64>,
        #[arg(long, default_value_t = 10_000, requires = "coupling")]
        steps: usize,
        #[arg(long, default_value_t = 0, requires = "coupling")]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Train the two-task context-shift experiment and write both runs
    TrainToy {
        experiment: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replace existing run directories
        #[arg(long)]
        force: bool,
        #[arg(long)]
        json: bool,
    },
    /// Per-layer entropy profile of a run, with core/periphery labels
    Profile {
        manifest: PathBuf,
        /// Stability threshold in bits (default: median layer range)
        #[arg(long)]
        threshold: Option<f64>,
        /// Also write layer,epoch,entropy_bits rows to this file
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Dominance verdict for a joint histogram file or a run manifest
    Classify {
        input: PathBuf,
        #[arg(long, default_value_t = f64::INFINITY)]
        delta: f64,
        #[arg(long, default_value_t = f64::INFINITY)]
        gamma: f64,
        /// Bins per axis when the input is a run
        #[arg(long, default_value_t = variety_core::analysis::DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Debug)]
pub enum CliError {
    Core(variety_core::Error),
    Input(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => match e.class() {
                ErrorClass::Resource => 3,
                ErrorClass::Numeric => 4,
                ErrorClass::Validation
                | ErrorClass::Corruption
                | ErrorClass::Version
                | ErrorClass::Environment => 2,
            },
            CliError::Input(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(s) => f.write_str(s),
        }
    }
}

impl From<variety_core::Error> for CliError {
    fn from(e: variety_core::Error) -> Self {
        CliError::Core(e)
    }
}

fn run(cli: Cli) -> Result<(report::Output, bool), CliError> {
    Ok(match cli.command {
        Command::Variety { input, mode, json } => (
            commands::variety(&input, matches!(mode, VarietyMode::Cardinality))?,
            json,
        ),
        Command::Partition {
            snapshots,
            from,
            to,
            mode,
            json,
        } => (
            commands::partition(&snapshots, from, to, mode.into())?,
            json,
        ),
        Command::Simulate {
            game,
            brute_force,
            coupling,
            steps,
            seed,
            json,
        } => {
            let closed_loop = coupling.map(|c| (c, steps, seed));
            (commands::simulate(&game, brute_force, closed_loop)?, json)
        }
        Command::TrainToy {
            experiment,
            out,
            force,
            json,
        } => (commands::train_toy(&experiment, &out, force)?, json),
        Command::Profile {
            manifest,
            threshold,
            csv,
            json,
        } => (
            commands::profile(&manifest, threshold, csv.as_deref())?,
            json,
        ),
        Command::Classify {
            input,
            delta,
            gamma,
            bins,
            json,
        } => (commands::classify(&input, delta, gamma, bins)?, json),
    })
}

fn main() -> ExitCode {
    let command: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let outcome = run(cli).and_then(|(out, json)| {
        if json {
            let doc = out.document(command)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&doc).expect("report serializes")
            );
        } else {
            match &out.text {
                Some(t) => println!("{t}"),
                None => println!("{}", report::fixed_json(&out.results)),
            }
        }
        Ok(())
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
