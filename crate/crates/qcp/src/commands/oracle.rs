use qcp_core::model::{build_heff, ModelParams};
use qcp_core::oracle::run_checks;

use crate::cli::OracleArgs;
use crate::error::{CliError, Result};

/// Runs the two-site cross-checks and prints one line per check.
pub fn run(args: &OracleArgs) -> Result<()> {
    if !(args.tolerance > 0.0) {
        return Err(CliError::Config("--tolerance must be positive".into()));
    }
    let flipped = |p: &ModelParams| build_heff(&p.clone().with_gamma(-p.gamma()));
    let report = if args.inject_sign_error {
        run_checks(&flipped, args.tolerance)?
    } else {
        run_checks(&build_heff, args.tolerance)?
    };
    let mut failed = 0;
    for c in &report.checks {
        let verdict = if c.passed() { "PASS" } else { "FAIL" };
        failed += usize::from(!c.passed());
        println!("{verdict} {:<32} error={:.3e} tol={:.1e}", c.name, c.error, c.tolerance);
    }
    if failed > 0 {
        return Err(CliError::OracleFailed { failed });
    }
    println!("all {} checks passed", report.checks.len());
    Ok(())
}
