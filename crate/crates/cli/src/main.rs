use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use dopinv_cli::config::RunConfig;
use dopinv_cli::{run, Command};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    /// Write the phantom doping, gamma and N-region indicator
    Phantom,
    /// Simulate contact measurements of the phantom
    Forward,
    /// Reconstruct the N-region from measurements
    Invert,
    /// Compare adjoint and finite-difference gradients
    Gradcheck,
}

/// Forward simulation and level-set inversion of semiconductor doping profiles.
#[derive(Debug, Parser)]
#[command(name = "dopinv", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Run configuration (`key = value` lines)
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the config's `output`
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = match args.command {
        Cmd::Phantom => Command::Phantom,
        Cmd::Forward => Command::Forward,
        Cmd::Invert => Command::Invert,
        Cmd::Gradcheck => Command::Gradcheck,
    };
    let result = RunConfig::load(&args.config).and_then(|mut cfg| {
        if let Some(out) = args.out {
            cfg.output = out;
        }
        run(command, &cfg, &mut std::io::stdout().lock())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dopinv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
