use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;
mod run;

use config::{parse_provenance_list, Overrides, ProvenanceList};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) | CliError::Io { .. } => 2,
            CliError::Verification(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ftc-sensor", version, about = "QFI dynamics of kicked-LMG time-crystal sensors")]
struct Cli {
    /// Recorded in manifests; every computation is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Working precision in bits (53 selects double).
    #[arg(long)]
    precision: Option<u32>,
    /// Comma-separated provenances, overriding the scenario.
    #[arg(long, value_parser = parse_provenance_list)]
    provenance: Option<ProvenanceList>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            precision: self.precision,
            provenance: self.provenance.clone().map(|p| p.0),
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// QFI series for every state and provenance of a scenario.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// `run` over the N × B × h grid of the scenario's [sweep] section.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare two single-provenance scenarios on the same grid.
    Verify {
        /// Reference scenario.
        a: PathBuf,
        /// Scenario compared against it.
        b: PathBuf,
        /// Largest allowed relative difference.
        #[arg(long)]
        tolerance: f64,
        #[arg(long)]
        precision: Option<u32>,
    },
    /// Floquet spectrum and doublets as JSON.
    Spectrum {
        #[command(flatten)]
        common: Common,
        /// Directory for spectrum.json; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Large-spin overlaps against exact diagonalization.
    Semiclassical {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { common, out } => commands::run(&common.config, &common.overrides(), &out, cli.seed),
        Command::Sweep { common, out } => commands::sweep(&common.config, &common.overrides(), &out, cli.seed),
        Command::Verify { a, b, tolerance, precision } => commands::verify(&a, &b, tolerance, precision),
        Command::Spectrum { common, out } => commands::spectrum(&common.config, &common.overrides(), out.as_deref()),
        Command::Semiclassical { common, out } => {
            commands::semiclassical(&common.config, &common.overrides(), &out, cli.seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
