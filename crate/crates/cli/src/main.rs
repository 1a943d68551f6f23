use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "polyfreq", version, about = "Frequency-superposed oscillator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file
    Run {
        config: PathBuf,
        /// Output directory (overrides `output` in the config)
        #[arg(long)]
        out: Option<PathBuf>,
        /// RNG seed (overrides `seed` in the config)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the available experiments
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            print!("{}", polyfreq_cli::list_experiments());
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed } => {
            let result = polyfreq_cli::load_config(&config, seed).and_then(|cfg| polyfreq_cli::run(&cfg, out.as_deref()));
            match result {
                Ok(summary) => {
                    let status = if summary.passed { "PASS" } else { "FAIL" };
                    println!("{} {status}: wrote {}", summary.experiment.name(), summary.out_dir.display());
                    if summary.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
