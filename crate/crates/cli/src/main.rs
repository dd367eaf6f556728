use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use spinamp_cli::{load_config, run_command, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Eigen,
    SweepFreq,
    SweepTheta,
    SweepField,
    Fit,
    Decoherence,
    Budget,
    Integrate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Eigen => Command::Eigen,
            Cmd::SweepFreq => Command::SweepFreq,
            Cmd::SweepTheta => Command::SweepTheta,
            Cmd::SweepField => Command::SweepField,
            Cmd::Fit => Command::Fit,
            Cmd::Decoherence => Command::Decoherence,
            Cmd::Budget => Command::Budget,
            Cmd::Integrate => Command::Integrate,
        }
    }
}

/// Simulate and analyze a coupled alkali / noble-gas spin pair.
#[derive(Debug, Parser)]
#[command(name = "spinamp", version)]
struct Args {
    command: Cmd,
    /// TOML configuration; an empty file selects the reference cell.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// `section.key=value`, applied after the file is read.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cmd = Command::from(args.command);
    let result = load_config(&args.config, &args.overrides)
        .and_then(|cfg| run_command(cmd, &cfg, &args.out));
    match result {
        Ok(outcome) => {
            for f in outcome.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.report(cmd.name()));
            ExitCode::FAILURE
        }
    }
}
