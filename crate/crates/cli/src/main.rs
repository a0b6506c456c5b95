use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mimic_cli::{run, Command, Options};

#[derive(Parser)]
#[command(name = "mimic", version, about = "Simulate, project and mimic jump semimartingales")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed (overrides `sim.seed`)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Drive the mimicking process with closed-form coefficients
    #[arg(long, global = true)]
    oracle: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate the source ensemble
    Simulate,
    /// Estimate projected characteristics from an ensemble directory
    Project { ensemble: PathBuf },
    /// Simulate the mimicking process from a projection directory or --oracle
    Mimic { projection: Option<PathBuf> },
    /// Compare two ensemble directories
    Validate { a: PathBuf, b: PathBuf },
    /// simulate, project, mimic and validate in one go
    Pipeline,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Project { ensemble } => Command::Project { ensemble },
        Cmd::Mimic { projection } => Command::Mimic { projection },
        Cmd::Validate { a, b } => Command::Validate { a, b },
        Cmd::Pipeline => Command::Pipeline,
    };
    let opts = Options { config, out: cli.out, seed: cli.seed, threads: cli.threads, oracle: cli.oracle };
    match run(&command, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
