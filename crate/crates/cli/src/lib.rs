//! Configuration parsing and commands behind the `dopinv` binary.

pub mod commands;
pub mod config;
mod error;

use std::io::Write;

pub use error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Phantom,
    Forward,
    Invert,
    Gradcheck,
}

pub fn run(command: Command, cfg: &config::RunConfig, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Phantom => commands::phantom_cmd(cfg, out),
        Command::Forward => commands::forward_cmd(cfg, out),
        Command::Invert => commands::invert_cmd(cfg, out),
        Command::Gradcheck => commands::gradcheck_cmd(cfg, out),
    }
}
