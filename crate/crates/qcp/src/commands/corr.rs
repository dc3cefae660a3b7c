use qcp_core::criticality::{fit_xi, Window};
use qcp_core::ground::{sweep_with, Axis, SweepOptions};
use qcp_core::model::ModelParams;
use qcp_core::observables::correlation_profile;
use qcp_core::Boundary;

use super::{boundary, check_sites, model_meta, parallel_map, solver, solver_meta};
use crate::cli::CorrArgs;
use crate::error::{fit_err, CliError, Result};
use crate::io::{num, opt, write_csv, Meta};

pub const COLUMNS: [&str; 5] = ["L", "gamma", "n", "value", "xi"];

/// Tracking grid: `start, start + step, …` merged with the profile points.
pub(crate) fn tracking_grid(start: f64, step: f64, targets: &[f64]) -> Vec<f64> {
    let last = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut g: Vec<f64> = (0..).map(|i| start + step * i as f64).take_while(|&t| t < last).collect();
    g.extend_from_slice(targets);
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-9 * b.abs().max(1.0));
    g
}

fn window(args: &CorrArgs) -> Result<Option<Window>> {
    match (args.window_lo, args.window_hi) {
        (None, None) => Ok(None),
        (Some(lo), Some(hi)) => Ok(Some(Window::new(lo, hi).map_err(fit_err)?)),
        _ => Err(CliError::Config("--window-lo and --window-hi go together".into())),
    }
}

/// Connected correlations at each requested γ, tracked from `--start`.
pub fn run(args: &CorrArgs) -> Result<()> {
    check_sites(&args.model)?;
    let mut targets = args.gamma_list.clone();
    targets.sort_by(f64::total_cmp);
    if targets.is_empty() {
        return Err(CliError::Config("empty --gamma-list".into()));
    }
    if !(args.step > 0.0) {
        return Err(CliError::Config("--step must be positive".into()));
    }
    if targets[0] < args.start {
        return Err(CliError::Config("profile points must not lie below --start".into()));
    }
    let win = window(args)?;
    let b = boundary(&args.model, Boundary::Open);
    let axis = Axis::Imaginary { re: args.model.gamma_re };
    let g = tracking_grid(args.start, args.step, &targets);

    let results = parallel_map(&args.model.sites, args.solver.workers, |&l| -> Result<Vec<Vec<String>>> {
        let base = ModelParams::new(l, args.model.omega, axis.gamma(g[0]), b)?;
        let mut opts = SweepOptions::new(solver(&args.solver, l)?, args.model.omega);
        opts.refine_depth = args.solver.refine;
        let mut rows = Vec::new();
        let mut err = None;
        sweep_with(&base, axis, &g, &opts, |_, step| {
            if !targets.iter().any(|t| (t - step.t).abs() < 1e-9 * t.abs().max(1.0)) {
                return Ok(());
            }
            let mut prof = correlation_profile(&step.record.state, l, step.t)?;
            if args.xi {
                match fit_xi(&prof, win) {
                    Ok(f) if f.value.is_finite() => prof.xi = Some(f.value),
                    Ok(_) => {}
                    Err(e) => err = Some(e),
                }
            }
            for (n, v) in prof.n.iter().zip(&prof.values) {
                rows.push(vec![l.to_string(), num(step.t), n.to_string(), num(*v), opt(prof.xi)]);
            }
            Ok(())
        })?;
        if let Some(e) = err {
            return Err(fit_err(e));
        }
        Ok(rows)
    });

    let mut meta = Meta::new("corr");
    model_meta(&mut meta, &args.model, b);
    solver_meta(&mut meta, &args.solver);
    meta.set_list("gamma_list", &targets).set("start", args.start).set("step", args.step).set("xi", args.xi);
    if let Some(w) = win {
        meta.set("window_lo", w.lo).set("window_hi", w.hi);
    }
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    write_csv(args.out.as_deref(), &meta, &COLUMNS, &rows)
}
