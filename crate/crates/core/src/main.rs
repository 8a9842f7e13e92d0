use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use pulseguard::runner::{self, emit_csv, emit_plot, ExperimentConfig, RunError};
use pulseguard::Error;

#[derive(Parser)]
#[command(
    version,
    about = "Fast-signal decoherence control and assisted adiabatic passage"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its result table.
    Run {
        #[command(flatten)]
        config: ConfigArg,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional SVG plot path.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for ensemble runs.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a config without running it.
    Validate {
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path).map_err(|e| {
        RunError::Config(Error::InvalidParameter {
            field: "config",
            reason: format!("{}: {e}", path.display()),
        })
    })?;
    ExperimentConfig::from_json(&text).map_err(RunError::Config)
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Validate { config } => {
            let cfg = load(&config.config)?;
            runner::validate(&cfg)?;
            println!("{}: ok", config.config.display());
            Ok(())
        }
        Command::Run {
            config,
            out,
            plot,
            seed,
            workers,
        } => {
            let mut cfg = load(&config.config)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            if workers.is_some() {
                cfg.workers = workers;
            }
            let out = match out.or_else(|| cfg.output.clone().map(PathBuf::from)) {
                Some(path) => path,
                None => {
                    return Err(RunError::Config(Error::InvalidParameter {
                        field: "output",
                        reason: "pass --out or set \"output\" in the config".into(),
                    }))
                }
            };
            let table = runner::run_experiment(&cfg)?;
            emit_csv(&table, &out)?;
            info!("wrote {}", out.display());
            if let Some(plot) = plot {
                emit_plot(&table, &plot)?;
                info!("wrote {}", plot.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
