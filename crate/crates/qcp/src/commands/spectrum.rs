use qcp_core::eigen::{eig_full, DenseOptions};
use qcp_core::model::{build_heff, ModelParams};
use qcp_core::{Boundary, C64};

use super::{boundary, check_sites, grid, grid_meta, model_meta, parallel_map};
use crate::cli::SpectrumArgs;
use crate::error::{CliError, Result};
use crate::io::{num, write_csv, Meta};

pub const COLUMNS: [&str; 6] = ["L", "omega", "gamma_re", "gamma_im", "e_re", "e_im"];

/// Writes every eigenvalue at each `Γ = gamma_re + i·γ` of the grid.
pub fn run(args: &SpectrumArgs) -> Result<()> {
    check_sites(&args.model)?;
    let b = boundary(&args.model, Boundary::Periodic);
    let gammas = grid(&args.grid, Some(args.model.gamma_im))?;
    let jobs: Vec<(usize, f64)> = args.model.sites.iter().flat_map(|&l| gammas.iter().map(move |&g| (l, g))).collect();
    let m = &args.model;
    let results = parallel_map(&jobs, args.solver.workers, |&(l, g)| -> Result<Vec<Vec<String>>> {
        let gamma = C64::new(m.gamma_re, g);
        let p = ModelParams::new(l, m.omega, gamma, b)?;
        let spec = eig_full(&build_heff(&p)?, &DenseOptions::default()).map_err(|e| CliError::Solver(e.at_gamma(gamma)))?;
        Ok(spec
            .values()
            .iter()
            .map(|e| vec![l.to_string(), num(m.omega), num(gamma.re), num(gamma.im), num(e.re), num(e.im)])
            .collect())
    });
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let mut meta = Meta::new("spectrum");
    model_meta(&mut meta, m, b);
    grid_meta(&mut meta, &args.grid);
    write_csv(args.out.as_deref(), &meta, &COLUMNS, &rows)
}
