use qcp_core::criticality::{find_gamma_c, find_level_crossing, CriticalSearch};
use qcp_core::ground::{sweep_with, Axis, SweepOptions};
use qcp_core::model::ModelParams;
use qcp_core::observables::{entanglement_entropy, half_partition, measure, MagnetizationOps, MeasureOptions, ObservableRecord};
use qcp_core::Boundary;

use super::{boundary, check_sites, grid, grid_meta, model_meta, parallel_map, solver, solver_meta, strictly_increasing};
use crate::cli::{EntropyArgs, ModelArgs, SweepArgs};
use crate::error::{CliError, Result};
use crate::io::{num, opt, write_csv, Meta};

pub const COLUMNS: [&str; 15] = [
    "L", "omega", "gamma_re", "gamma_im", "e0_re", "e0_im", "rule", "overlap_prev", "mx", "my", "mz", "nup", "chi", "gap",
    "svn_half",
];

pub const CRITICAL_COLUMNS: [&str; 5] = ["L", "gamma_c", "bracket_width", "order_parameter", "method"];

pub const ENTROPY_COLUMNS: [&str; 5] = ["L", "gamma_re", "gamma_im", "la", "svn"];

const OBSERVABLES: [&str; 7] = ["mx", "my", "mz", "nup", "chi", "gap", "svn"];

fn axis(model: &ModelArgs, hermitian: bool) -> Axis {
    if hermitian {
        Axis::Real { im: model.gamma_im }
    } else {
        Axis::Imaginary { re: model.gamma_re }
    }
}

fn params(model: &ModelArgs, sites: usize, b: Boundary, axis: Axis, t: f64) -> Result<ModelParams> {
    Ok(ModelParams::new(sites, model.omega, axis.gamma(t), b)?)
}

fn row(sites: usize, omega: f64, r: &ObservableRecord, want: &[String]) -> Vec<String> {
    let has = |k: &str| want.iter().any(|w| w == k);
    let pick = |k: &str, v: f64| if has(k) { num(v) } else { String::new() };
    vec![
        sites.to_string(),
        num(omega),
        num(r.gamma.re),
        num(r.gamma.im),
        num(r.e0.re),
        num(r.e0.im),
        r.rule.as_str().to_owned(),
        num(r.overlap_prev),
        pick("mx", r.mx),
        pick("my", r.my),
        pick("mz", r.mz),
        pick("nup", r.nup),
        if has("chi") { opt(r.chi) } else { String::new() },
        if has("gap") { opt(r.gap) } else { String::new() },
        pick("svn", r.svn_half),
    ]
}

struct LengthResult {
    rows: Vec<Vec<String>>,
    critical: Option<Vec<String>>,
}

fn sweep_length(args: &SweepArgs, hermitian: bool, sites: usize, g: &[f64]) -> Result<LengthResult> {
    let b = boundary(&args.model, Boundary::Periodic);
    let ax = axis(&args.model, hermitian);
    let base = params(&args.model, sites, b, ax, g[0])?;
    let solver = solver(&args.solver, sites)?;
    let mut opts = SweepOptions::new(solver, args.model.omega);
    opts.refine_depth = args.solver.refine;
    let mopts = MeasureOptions {
        probe: args.observables.iter().any(|o| o == "chi").then_some(args.dh),
        check_half: args.check_dh,
    };
    let ops = MagnetizationOps::new(sites)?;
    let mut records = Vec::new();
    sweep_with(&base, ax, g, &opts, |tr, step| {
        let r = measure(step, tr.solver(), &ops, &mopts).map_err(|e| e.at_gamma(step.record.gamma))?;
        if r.chi_converged == Some(false) {
            eprintln!("warning: L={sites} gamma={}: chi changes by more than 5% at dh/2", step.record.gamma);
        }
        records.push(r);
        Ok(())
    })
    .map_err(CliError::from)?;
    let rows = records.iter().map(|r| row(sites, args.model.omega, r, &args.observables)).collect();

    let critical = match &args.critical_out {
        None => None,
        Some(_) if hermitian => {
            // bracket the level crossing by the largest jump in n_up
            let k = (1..records.len())
                .max_by(|&i, &j| {
                    let di = (records[i].nup - records[i - 1].nup).abs();
                    let dj = (records[j].nup - records[j - 1].nup).abs();
                    di.total_cmp(&dj)
                })
                .ok_or_else(|| CliError::Config("crossing search needs at least two grid points".into()))?;
            let (lo, hi) = (records[k - 1].gamma.re, records[k].gamma.re);
            let pad = hi - lo;
            let x = find_level_crossing(&base, lo - pad, hi + pad, args.tol, &solver)?;
            Some(vec![sites.to_string(), num(x), num(args.tol), String::new(), "level-crossing".into()])
        }
        Some(_) => {
            let mut search = CriticalSearch::new(args.scan_start.unwrap_or(g[0]), solver);
            search.tol = args.tol;
            let c = find_gamma_c(&base, &search)?;
            Some(vec![
                sites.to_string(),
                num(c.gamma_c),
                num(c.bracket_width),
                num(c.order_parameter),
                c.method.as_str().into(),
            ])
        }
    };
    Ok(LengthResult { rows, critical })
}

/// `sweep` (along imaginary Γ) and `hermitian` (along real Γ).
pub fn run(args: &SweepArgs, hermitian: bool) -> Result<()> {
    check_sites(&args.model)?;
    if let Some(bad) = args.observables.iter().find(|o| !OBSERVABLES.contains(&o.as_str())) {
        return Err(CliError::Config(format!("unknown observable `{bad}` (expected {})", OBSERVABLES.join(","))));
    }
    if !(args.dh > 0.0) {
        return Err(CliError::Config("--dh must be positive".into()));
    }
    let g = grid(&args.grid, None)?;
    strictly_increasing(&g)?;
    let results = parallel_map(&args.model.sites, args.solver.workers, |&l| sweep_length(args, hermitian, l, &g));

    let b = boundary(&args.model, Boundary::Periodic);
    let mut meta = Meta::new(if hermitian { "hermitian" } else { "sweep" });
    model_meta(&mut meta, &args.model, b);
    grid_meta(&mut meta, &args.grid);
    solver_meta(&mut meta, &args.solver);
    meta.set_list("observables", &args.observables).set("dh", args.dh);

    let mut rows = Vec::new();
    let mut critical = Vec::new();
    for r in results {
        let r = r?;
        rows.extend(r.rows);
        critical.extend(r.critical);
    }
    write_csv(args.out.as_deref(), &meta, &COLUMNS, &rows)?;
    if let Some(path) = &args.critical_out {
        let mut cmeta = meta.clone();
        cmeta.set("tol", args.tol);
        if let Some(s) = args.scan_start {
            cmeta.set("scan_start", s);
        }
        write_csv(Some(path), &cmeta, &CRITICAL_COLUMNS, &critical)?;
    }
    Ok(())
}

pub fn entropy(args: &EntropyArgs) -> Result<()> {
    check_sites(&args.model)?;
    let g = grid(&args.grid, None)?;
    strictly_increasing(&g)?;
    let b = boundary(&args.model, Boundary::Periodic);
    let ax = axis(&args.model, args.hermitian);
    let results = parallel_map(&args.model.sites, args.solver.workers, |&l| -> Result<Vec<Vec<String>>> {
        let cuts = match &args.la {
            Some(v) => v.clone(),
            None => vec![half_partition(l)],
        };
        if let Some(bad) = cuts.iter().find(|&&c| c == 0 || c >= l) {
            return Err(CliError::Config(format!("block size {bad} must lie in 1..{l}")));
        }
        let base = params(&args.model, l, b, ax, g[0])?;
        let mut opts = SweepOptions::new(solver(&args.solver, l)?, args.model.omega);
        opts.refine_depth = args.solver.refine;
        let mut rows = Vec::new();
        sweep_with(&base, ax, &g, &opts, |_, step| {
            for &la in &cuts {
                let s = entanglement_entropy(&step.record.state, l, la)?;
                let gm = step.record.gamma;
                rows.push(vec![l.to_string(), num(gm.re), num(gm.im), la.to_string(), num(s)]);
            }
            Ok(())
        })?;
        Ok(rows)
    });
    let mut meta = Meta::new("entropy");
    model_meta(&mut meta, &args.model, b);
    grid_meta(&mut meta, &args.grid);
    solver_meta(&mut meta, &args.solver);
    meta.set("hermitian", args.hermitian);
    if let Some(la) = &args.la {
        meta.set_list("la", la);
    }
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    write_csv(args.out.as_deref(), &meta, &ENTROPY_COLUMNS, &rows)
}
