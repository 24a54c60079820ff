use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fep_core::experiment::{render_report, run_experiment, ExperimentConfig};
use fep_core::ingest::{write_synthetic, SyntheticSpec};
use fep_core::{Error, ErrorKind};

/// Early prediction of student outcomes with confidence-gated acquisition of
/// additional data.
#[derive(Parser)]
#[command(name = "fep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the single-source, multi-source and gated models for every seed.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Print accuracy and ESS tables for a finished run.
    Report { run_dir: PathBuf },
    /// Write synthetic primary and additional bundles.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Invariant => 4,
    }
}

fn execute(cmd: Command) -> Result<(), Error> {
    match cmd {
        Command::Run { config, jobs } => {
            let cfg = ExperimentConfig::read(&config)?;
            let summary = run_experiment(&cfg, jobs)?;
            println!(
                "wrote {} seed(s) to {}",
                summary.seeds.len(),
                summary.output_dir.display()
            );
        }
        Command::Report { run_dir } => print!("{}", render_report(&run_dir)?),
        Command::Synth { spec, seed, out } => {
            let spec = SyntheticSpec::read(&spec)?;
            for p in write_synthetic(&spec, seed, &out)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
