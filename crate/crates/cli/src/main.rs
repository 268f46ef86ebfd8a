use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ggwpd_cli::{CliError, Method, RunOptions, ScenarioConfig};

/// Complex-trajectory wave packet propagation with corrected Maslov indices.
#[derive(Debug, Parser)]
#[command(name = "ggwpd", version)]
struct Cli {
    /// Output directory (overrides $GGWPD_OUT and the config)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Maslov index correction method (overrides the config)
    #[arg(long, global = true, value_enum)]
    method: Option<Method>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and write its datasets
    Run { config: PathBuf },
    /// Run a scenario and its checks; exits nonzero on any failure
    Verify { config: PathBuf },
    /// Determinant zeros of one family member
    Zeros {
        config: PathBuf,
        #[arg(long)]
        family: usize,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
    },
    /// Foliations of the propagated Wigner contour
    Foliate { config: PathBuf },
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --jobs: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli) {
        Ok(ok) => {
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool, CliError> {
    let opts = RunOptions { out: cli.out, method: cli.method };
    match cli.command {
        Command::Run { config } => {
            let manifest = ggwpd_cli::run_scenario(ScenarioConfig::load(&config)?, &opts)?;
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            for e in &manifest.errors {
                eprintln!("error: {e}");
            }
            println!("{} files written", manifest.files.len());
            Ok(manifest.errors.is_empty())
        }
        Command::Verify { config } => {
            let (manifest, report) = ggwpd_cli::verify_scenario(ScenarioConfig::load(&config)?, &opts)?;
            for e in &manifest.errors {
                eprintln!("error: {e}");
            }
            match report {
                Some(r) => {
                    print_json(&r);
                    Ok(r.passed && manifest.errors.is_empty())
                }
                None => Ok(false),
            }
        }
        Command::Zeros { config, family, x } => {
            print_json(&ggwpd_cli::zeros(ScenarioConfig::load(&config)?, family, x)?);
            Ok(true)
        }
        Command::Foliate { config } => {
            print_json(&ggwpd_cli::foliate(ScenarioConfig::load(&config)?)?);
            Ok(true)
        }
    }
}
