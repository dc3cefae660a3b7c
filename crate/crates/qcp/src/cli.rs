use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "qcp", version, about = "Exact diagonalization of the non-Hermitian quantum contact process")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Full complex spectrum at one or more Γ.
    Spectrum(SpectrumArgs),
    /// Ground-state observables along Γ = gamma_re + i·γ.
    Sweep(SweepArgs),
    /// Ground-state observables along real Γ (Hermitian counterpart).
    Hermitian(SweepArgs),
    /// Exponent fits and critical-point extrapolation from CSV output.
    Fit(FitArgs),
    /// Connected σx correlations from the first site.
    Corr(CorrArgs),
    /// Von Neumann entropy of leading blocks along a sweep.
    Entropy(EntropyArgs),
    /// Closed-form two-site cross-checks.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    /// Dense for dimensions up to 1024, targeted above.
    Auto,
    Dense,
    Targeted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Linear,
    /// Logarithmic in the distance from `--anchor`.
    Log,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Chain length(s); several lengths run as independent jobs.
    #[arg(long = "L", value_delimiter = ',', required = true)]
    pub sites: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long = "gamma-re", default_value_t = 0.0)]
    pub gamma_re: f64,
    #[arg(long = "gamma-im", default_value_t = 0.0)]
    pub gamma_im: f64,
    /// Defaults to periodic, except for `corr`.
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long = "gamma-min")]
    pub gamma_min: Option<f64>,
    #[arg(long = "gamma-max")]
    pub gamma_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Explicit grid instead of min/max/steps.
    #[arg(long = "gamma-list", value_delimiter = ',')]
    pub gamma_list: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "linear")]
    pub spacing: Spacing,
    /// Reference point for `--spacing log`, usually Γ_c.
    #[arg(long)]
    pub anchor: Option<f64>,
    /// Prepend evenly spaced points from here up to the grid, so the tracker
    /// approaches from below the transition.
    #[arg(long = "lead-in")]
    pub lead_in: Option<f64>,
    #[arg(long = "lead-step", default_value_t = 0.05)]
    pub lead_step: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: SolverArg,
    /// Eigenpairs requested from the targeted solver.
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    /// Seed of the targeted solver's start vector.
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Midpoint insertion depth where the overlap between grid points drops.
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
    /// Parallel jobs (independent chain lengths or spectrum points).
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true, args_override_self = true)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Values of γ (imaginary part of Γ); defaults to `--gamma-im`.
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true, args_override_self = true)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Subset of mx,my,mz,nup,chi,gap,svn.
    #[arg(long, value_delimiter = ',', default_value = "mx,my,mz,nup,chi,gap,svn")]
    pub observables: Vec<String>,
    /// Probe field for the susceptibility.
    #[arg(long, default_value_t = 1e-5)]
    pub dh: f64,
    /// Also compute χ at dh/2 and report non-convergence on stderr.
    #[arg(long = "check-dh")]
    pub check_dh: bool,
    /// Locate the transition of every L and write it to this CSV.
    #[arg(long = "critical-out")]
    pub critical_out: Option<PathBuf>,
    /// Start of the coarse scan for the transition search.
    #[arg(long = "scan-start")]
    pub scan_start: Option<f64>,
    /// Tolerance of the transition search.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitKindArg {
    Beta,
    Gamma,
    Xi,
    Nu,
    Gc,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true, args_override_self = true)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub kind: FitKindArg,
    #[arg(long)]
    pub input: PathBuf,
    /// Critical point; otherwise taken from `--critical` or inferred.
    #[arg(long = "gamma-c")]
    pub gamma_c: Option<f64>,
    /// CSV with columns L, gamma_c (as written by `sweep --critical-out`).
    #[arg(long)]
    pub critical: Option<PathBuf>,
    #[arg(long = "window-lo")]
    pub window_lo: Option<f64>,
    #[arg(long = "window-hi")]
    pub window_hi: Option<f64>,
    /// Restrict a multi-L input to one chain length.
    #[arg(long = "L")]
    pub sites: Option<usize>,
    /// JSON result; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One CSV row per fit.
    #[arg(long = "csv-out")]
    pub csv_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true, args_override_self = true)]
pub struct CorrArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// γ values at which profiles are written.
    #[arg(long = "gamma-list", value_delimiter = ',', required = true)]
    pub gamma_list: Vec<f64>,
    /// Where tracking starts; must lie below the transition.
    #[arg(long, default_value_t = 11.0)]
    pub start: f64,
    /// Tracking step between `--start` and the profile points.
    #[arg(long, default_value_t = 0.25)]
    pub step: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Fit a correlation length to every profile.
    #[arg(long)]
    pub xi: bool,
    #[arg(long = "window-lo")]
    pub window_lo: Option<f64>,
    #[arg(long = "window-hi")]
    pub window_hi: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true, args_override_self = true)]
pub struct EntropyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Sizes of the leading block; defaults to the half chain.
    #[arg(long = "la", value_delimiter = ',')]
    pub la: Option<Vec<usize>>,
    /// Sweep along real Γ instead of imaginary.
    #[arg(long)]
    pub hermitian: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct OracleArgs {
    /// Run the cross-check suite (the default action).
    #[arg(long)]
    pub check: bool,
    #[arg(long, default_value_t = qcp_core::oracle::DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Test fixture: flip the sign of the dissipative term.
    #[arg(long = "inject-sign-error", hide = true)]
    pub inject_sign_error: bool,
}

/// Turns a `key = value` file into `--key value` tokens. Blank lines and
/// lines starting with `#` are skipped; `key = true` becomes a bare flag.
pub fn config_tokens(path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Parse { path: path.to_path_buf(), message: format!("line {}: expected key=value", i + 1) });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.starts_with('-') {
            return Err(CliError::Parse { path: path.to_path_buf(), message: format!("line {}: bad key `{k}`", i + 1) });
        }
        match v {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{k}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Expands `--config FILE` (anywhere after the subcommand) into the file's
/// options, placed before the command-line flags so that flags win.
pub fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let pos = args.iter().position(|a| a == "--config");
    let Some(pos) = pos else {
        return Ok(args);
    };
    let path = args.get(pos + 1).ok_or_else(|| CliError::Config("--config needs a file".into()))?;
    let tokens = config_tokens(Path::new(path))?;
    if pos < 2 {
        return Err(CliError::Config("--config goes after the subcommand".into()));
    }
    let mut out: Vec<OsString> = args[..2].to_vec();
    out.extend(tokens);
    out.extend(args[2..pos].iter().cloned());
    out.extend(args[pos + 2..].iter().cloned());
    Ok(out)
}
