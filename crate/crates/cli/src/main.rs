use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use log::error;
use stefan_cli::config::Command;
use stefan_cli::run::{EXIT_VALIDATION, EXIT_OK};
use stefan_cli::{load_config, run, RunOptions};

#[derive(Debug, Parser)]
#[command(name = "stefan", version, about = "Free-boundary spreading laboratory")]
struct Args {
    /// Configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Multiply every simulation horizon.
    #[arg(long, value_name = "X", default_value_t = 1.0)]
    horizon_scale: f64,
    #[arg(long)]
    verbose: bool,
    /// Override the configured command.
    command: Option<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let default_level = if args.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STEFAN_LOG_LEVEL", default_level)).init();

    let mut config = match load_config(&args.config) {
        Ok(c) => c,
        Err(errors) => {
            for e in &errors.0 {
                error!("{e}");
                eprintln!("error: {e}");
            }
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    if let Some(name) = &args.command {
        match Command::parse(name) {
            Some(c) => config.command = c,
            None => {
                eprintln!("error: unknown command `{name}`");
                return ExitCode::from(EXIT_VALIDATION as u8);
            }
        }
    }
    let out = config.output.clone().filter(|_| args.out.as_os_str() == "out").unwrap_or(args.out);
    let opts = RunOptions {
        out,
        jobs: args.jobs,
        horizon_scale: args.horizon_scale,
    };
    match run(&config, &opts) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::from(EXIT_OK as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
