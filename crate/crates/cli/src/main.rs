use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oamsort_cli::commands::{self, Failure};
use oamsort_cli::config::parse_path;
use oamsort_cli::{parse_config, parse_config_file, Overrides};
use oamsort_core::{Error, ModeKind};

#[derive(Parser)]
#[command(name = "oamsort", version, about = "Simulate a log-polar OAM/ANG mode sorter with beam copying")]
struct Cli {
    /// Config file of `key = value` lines (any artifact of this tool works too).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of fan-out copies: 0 or odd.
    #[arg(long, global = true)]
    copies: Option<usize>,
    /// Basis to sort: oam or ang.
    #[arg(long, global = true, value_parser = parse_kind)]
    path: Option<ModeKind>,
    /// Seed for the fan-out search.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crosstalk matrix, metrics report and focal profiles for the whole basis.
    Run,
    /// Optimize a fan-out and export it with its phase images.
    FanoutOpt,
    /// Focal line-outs of the seven central modes.
    Profiles,
    /// Intensity and phase gallery of sample OAM and ANG modes.
    Modes,
}

fn parse_kind(s: &str) -> Result<ModeKind, String> {
    parse_path(s).ok_or_else(|| format!("`{s}` must be `oam` or `ang`"))
}

fn report(failure: &Failure) {
    match failure.error() {
        Error::Config(diags) => {
            eprintln!("error: invalid configuration");
            for d in diags {
                eprintln!("  {d}");
            }
        }
        e => eprintln!("error: {e}"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        copies: cli.copies,
        path: cli.path,
        seed: cli.seed,
        out_dir: cli.out,
    };
    let config = match &cli.config {
        Some(path) => parse_config_file(path, &overrides),
        None => parse_config("", &overrides),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            let failure = Failure::Validation(e);
            report(&failure);
            return ExitCode::from(failure.exit_code() as u8);
        }
    };

    let result = match cli.command {
        Command::Run => commands::run(&config).map(|s| {
            println!("separation_efficiency = {:.4}", s.separation_efficiency);
            println!("mutual_information_bits = {:.4}", s.mutual_information);
            s.files
        }),
        Command::FanoutOpt => commands::fanout_opt(&config).map(|s| {
            println!("efficiency = {:.5}", s.efficiency);
            println!("uniformity_error = {:.4}", s.uniformity_error);
            s.files
        }),
        Command::Profiles => commands::profiles(&config),
        Command::Modes => commands::modes(&config),
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            report(&failure);
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
