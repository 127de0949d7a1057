//! Command-line driver: rim transform, gradient checks, phantom generation,
//! the synthetic benchmark and the line/projection transforms.

pub mod args;
pub mod commands;
pub mod error;
pub mod files;

use std::io::Write;

pub use args::{Cli, Command};
pub use error::CliError;

/// Runs one parsed command, writing its report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Datr(a) => commands::datr::run(a, out),
        Command::Gradcheck(a) => commands::gradcheck::run(a, out),
        Command::Bench(a) => commands::bench::run(a, out),
        Command::Generate(a) => commands::generate::run(a, out),
        Command::Radon(a) => commands::transforms::radon(a, out),
        Command::Hough(a) => commands::transforms::hough(a, out),
        Command::Polar(a) => commands::transforms::polar(a, out),
    }
}
