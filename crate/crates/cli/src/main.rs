//! `tripole`: runs sparse tripole array designs from a TOML config and
//! writes CSV and JSON results.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Overrides;

#[derive(Debug, Parser)]
#[command(name = "tripole", version, about = "Sparse linear tripole array synthesis")]
struct Cli {
    /// Output directory (overrides `out_dir` in the config).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Pattern sweep resolution in degrees (overrides `sweep_res_deg`).
    #[arg(long, global = true)]
    sweep_res_deg: Option<f64>,

    /// Accepted for scripting compatibility; designs use no randomness.
    #[arg(long, global = true)]
    seedless: bool,

    /// Also write the pattern as an SVG plot.
    #[arg(long, global = true)]
    svg: bool,

    /// Log progress at info level.
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the method named in the config.
    Design { config: PathBuf },
    /// Run the plain, reweighted and ULA designs on the same spec.
    Compare { config: PathBuf },
    /// Re-evaluate a stored locations.csv without solving.
    SweepOnly { weights: PathBuf, config: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let ov = Overrides {
        out_dir: cli.out_dir,
        sweep_res_deg: cli.sweep_res_deg,
        svg: cli.svg,
    };
    let result = match &cli.command {
        Command::Design { config } => commands::design(config, &ov),
        Command::Compare { config } => commands::compare(config, &ov),
        Command::SweepOnly { weights, config } => commands::sweep_only(weights, config, &ov),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
