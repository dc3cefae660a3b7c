//! Command-line front end for `qcp-core`: spectra, tracked sweeps, fits,
//! correlation profiles, entanglement entropy and the two-site self-check.
//! Every table is CSV with a `# qcp <version> key=value ...` first line.

pub mod cli;
pub mod commands;
pub mod error;
pub mod io;

use std::ffi::OsString;

use clap::Parser;

use cli::{Cli, Command};
pub use error::{CliError, Result};

/// Parses `args` (including the program name) and runs the subcommand.
/// Help, version and usage errors are handled by clap and exit directly.
pub fn run(args: Vec<OsString>) -> Result<()> {
    let args = cli::expand_config(args)?;
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    match &cli.command {
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Sweep(a) => commands::sweep(a, false),
        Command::Hermitian(a) => commands::sweep(a, true),
        Command::Fit(a) => commands::fit(a),
        Command::Corr(a) => commands::corr(a),
        Command::Entropy(a) => commands::entropy(a),
        Command::Oracle(a) => commands::oracle(a),
    }
}
