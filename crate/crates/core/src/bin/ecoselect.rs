use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ecoselect::cli::{execute, load_config};
use ecoselect::config::Overrides;
use ecoselect::Error;

/// Cost-aware Bayesian variable selection.
#[derive(Parser)]
#[command(name = "ecoselect", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank every purchased set by cross-validated loss and pick the
    /// cost-aware optimum.
    Analyze(Common),
    /// Trace the optimum across a price grid.
    Sweep(Common),
    /// Decide when to start buying one predictor in panel data.
    Timed(Common),
    /// Run the built-in verification suites.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Configuration file, as an alternative to --config.
    #[arg(value_name = "CONFIG", conflicts_with = "config")]
    positional: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Fold assignment seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,
    /// Worker threads (0 = one per CPU).
    #[arg(long)]
    threads: Option<usize>,
}

fn fail(e: &Error) -> ExitCode {
    let class = e.class();
    eprintln!("error[{}]: {e}", class.code());
    ExitCode::from(class.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Analyze(c) => ("analyze", c),
        Command::Sweep(c) => ("sweep", c),
        Command::Timed(c) => ("timed", c),
        Command::Check(c) => ("check", c),
    };
    let Some(path) = common.config.as_ref().or(common.positional.as_ref()) else {
        return fail(&Error::Config(
            "a configuration file is required (--config <path>)".into(),
        ));
    };
    let overrides = Overrides {
        out: common.out.clone(),
        seed: common.seed,
        folds: common.folds,
        threads: common.threads,
    };
    let cfg = match load_config(path, &overrides) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    match execute(name, &cfg) {
        Ok((text, passed)) => {
            print!("{text}");
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => fail(&e),
    }
}
