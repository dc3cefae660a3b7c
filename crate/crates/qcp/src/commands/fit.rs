use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use qcp_core::criticality::{
    extrapolate_gc, fit_beta, fit_gamma, fit_nu, fit_xi, FitResult, Window, HERMITIAN_GAMMA_WINDOW,
};
use qcp_core::observables::CorrelationProfile;

use crate::cli::{FitArgs, FitKindArg};
use crate::error::{fit_err, CliError, Result};
use crate::io::{num, opt, write_csv, write_text, Meta, Table, VERSION};

pub const COLUMNS: [&str; 13] = [
    "kind", "L", "gamma", "gamma_c", "value", "amplitude", "power", "window_lo", "window_hi", "normr", "points_used",
    "low_confidence", "input",
];

#[derive(Debug, Serialize)]
struct FitRecord {
    kind: &'static str,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    sites: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_c: Option<f64>,
    value: f64,
    amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    power: Option<f64>,
    window: [f64; 2],
    normr: f64,
    points_used: usize,
    low_confidence: bool,
}

impl FitRecord {
    fn new(f: &FitResult, sites: Option<usize>, gamma: Option<f64>, gamma_c: Option<f64>) -> Self {
        FitRecord {
            kind: f.kind.as_str(),
            sites,
            gamma,
            gamma_c,
            value: f.value,
            amplitude: f.amplitude,
            power: f.power,
            window: [f.window.lo, f.window.hi],
            normr: f.normr,
            points_used: f.points_used,
            low_confidence: f.low_confidence,
        }
    }

    fn csv(&self, input: &str) -> Vec<String> {
        vec![
            self.kind.to_owned(),
            self.sites.map(|l| l.to_string()).unwrap_or_default(),
            opt(self.gamma),
            opt(self.gamma_c),
            num(self.value),
            num(self.amplitude),
            opt(self.power),
            num(self.window[0]),
            num(self.window[1]),
            num(self.normr),
            self.points_used.to_string(),
            self.low_confidence.to_string(),
            input.to_owned(),
        ]
    }
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    tool: String,
    input: &'a str,
    fits: Vec<FitRecord>,
}

fn window(args: &FitArgs, default: Option<Window>) -> Result<Option<Window>> {
    let (lo, hi) = match (args.window_lo, args.window_hi, default) {
        (None, None, d) => return Ok(d),
        (Some(lo), Some(hi), _) => (lo, hi),
        (Some(lo), None, Some(d)) => (lo, d.hi),
        (None, Some(hi), Some(d)) => (d.lo, hi),
        _ => return Err(CliError::Config("--window-lo and --window-hi go together for this fit".into())),
    };
    Ok(Some(Window::new(lo, hi).map_err(fit_err)?))
}

/// Distinct chain lengths in row order, and the per-row length.
fn lengths(t: &Table) -> Result<(Vec<usize>, Vec<usize>)> {
    let per_row: Vec<usize> = t
        .floats("L")?
        .into_iter()
        .map(|x| x.map(|v| v as usize).ok_or_else(|| CliError::Parse { path: t.path.clone(), message: "empty L".into() }))
        .collect::<Result<_>>()?;
    let mut distinct = per_row.clone();
    distinct.sort_unstable();
    distinct.dedup();
    Ok((distinct, per_row))
}

fn pick_length(args: &FitArgs, distinct: &[usize]) -> Result<usize> {
    match (args.sites, distinct) {
        (Some(l), _) if distinct.contains(&l) => Ok(l),
        (Some(l), _) => Err(CliError::Config(format!("no rows with L={l}"))),
        (None, [l]) => Ok(*l),
        (None, _) => Err(CliError::Config("input holds several chain lengths; choose one with --L".into())),
    }
}

fn critical_from_file(path: &Path, sites: usize) -> Result<f64> {
    let t = Table::read(path)?;
    let (_, per_row) = lengths(&t)?;
    let gc = t.floats("gamma_c")?;
    per_row
        .iter()
        .zip(gc)
        .find_map(|(&l, g)| (l == sites).then_some(g).flatten())
        .ok_or_else(|| CliError::Config(format!("{} has no critical point for L={sites}", path.display())))
}

fn is_hermitian(t: &Table) -> bool {
    t.meta.get("command") == Some("hermitian")
}

/// Transition location guessed from a sweep: for dissipative sweeps a secant
/// on `(Re E₀)²` through the last two points below the transition, for
/// Hermitian sweeps the midpoint of the largest jump in `n_up`.
fn infer_critical(coord: &[f64], t: &Table, rows: &[usize]) -> Result<f64> {
    let fail = |m: &str| CliError::Fit(qcp_core::Error::Bracket(m.to_owned()));
    if is_hermitian(t) {
        let nup = t.floats("nup")?;
        let k = (1..rows.len())
            .filter_map(|i| Some((i, (nup[rows[i]]? - nup[rows[i - 1]]?).abs())))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .ok_or_else(|| fail("no n_up data to locate the crossing"))?;
        return Ok(0.5 * (coord[rows[k - 1]] + coord[rows[k]]));
    }
    let rule = t.strings("rule")?;
    let e = t.floats("e0_re")?;
    let pre: Vec<usize> = rows.iter().copied().filter(|&i| rule[i] == "min-real-part").collect();
    match pre.as_slice() {
        [.., a, b] => {
            let (ra, rb) = (e[*a].unwrap_or(0.0).powi(2), e[*b].unwrap_or(0.0).powi(2));
            if ra == rb {
                return Err(fail("flat energy; cannot extrapolate the transition"));
            }
            Ok(coord[*b] - rb * (coord[*b] - coord[*a]) / (rb - ra))
        }
        _ => Err(fail("fewer than two points below the transition; pass --gamma-c")),
    }
}

fn sweep_series(args: &FitArgs, t: &Table, column: &str) -> Result<(usize, f64, Vec<(f64, f64)>)> {
    let (distinct, per_row) = lengths(t)?;
    let sites = pick_length(args, &distinct)?;
    let coord_col = if is_hermitian(t) { "gamma_re" } else { "gamma_im" };
    let coord: Vec<f64> = t
        .floats(coord_col)?
        .into_iter()
        .map(|x| x.ok_or_else(|| CliError::Parse { path: t.path.clone(), message: format!("empty {coord_col}") }))
        .collect::<Result<_>>()?;
    let mut rows: Vec<usize> = (0..t.len()).filter(|&i| per_row[i] == sites).collect();
    rows.sort_by(|&a, &b| coord[a].total_cmp(&coord[b]));
    let gamma_c = match (args.gamma_c, &args.critical) {
        (Some(g), _) => g,
        (None, Some(path)) => critical_from_file(path, sites)?,
        (None, None) => infer_critical(&coord, t, &rows)?,
    };
    let values = t.floats(column)?;
    let series = rows.iter().filter_map(|&i| values[i].map(|v| (coord[i], v))).collect();
    Ok((sites, gamma_c, series))
}

fn profiles(t: &Table, only: Option<usize>) -> Result<Vec<(usize, CorrelationProfile)>> {
    let (_, per_row) = lengths(t)?;
    let gamma = t.floats("gamma")?;
    let n = t.floats("n")?;
    let value = t.floats("value")?;
    let xi = if t.has("xi") { t.floats("xi")? } else { vec![None; t.len()] };
    let missing = |c: &str| CliError::Parse { path: t.path.clone(), message: format!("empty {c}") };
    let mut groups: BTreeMap<(usize, u64), CorrelationProfile> = BTreeMap::new();
    for i in 0..t.len() {
        if only.is_some_and(|l| l != per_row[i]) {
            continue;
        }
        let g = gamma[i].ok_or_else(|| missing("gamma"))?;
        let entry = groups.entry((per_row[i], g.to_bits())).or_insert_with(|| CorrelationProfile {
            gamma: g,
            n: Vec::new(),
            values: Vec::new(),
            xi: xi[i],
        });
        entry.n.push(n[i].ok_or_else(|| missing("n"))? as usize);
        entry.values.push(value[i].ok_or_else(|| missing("value"))?);
    }
    let mut out: Vec<(usize, CorrelationProfile)> = groups.into_iter().map(|((l, _), p)| (l, p)).collect();
    out.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.gamma.total_cmp(&b.1.gamma)));
    Ok(out)
}

pub fn run(args: &FitArgs) -> Result<()> {
    let t = Table::read(&args.input)?;
    if t.is_empty() {
        return Err(CliError::Parse { path: args.input.clone(), message: "no data rows".into() });
    }
    let mut fits = Vec::new();
    match args.kind {
        FitKindArg::Beta => {
            let (l, gc, series) = sweep_series(args, &t, "mx")?;
            let f = fit_beta(&series, gc, window(args, None)?).map_err(fit_err)?;
            fits.push(FitRecord::new(&f, Some(l), None, Some(gc)));
        }
        FitKindArg::Gamma => {
            let (l, gc, series) = sweep_series(args, &t, "chi")?;
            let default = is_hermitian(&t).then_some(HERMITIAN_GAMMA_WINDOW);
            let f = fit_gamma(&series, gc, window(args, default)?).map_err(fit_err)?;
            fits.push(FitRecord::new(&f, Some(l), None, Some(gc)));
        }
        FitKindArg::Xi => {
            for (l, p) in profiles(&t, args.sites)? {
                let f = fit_xi(&p, window(args, None)?).map_err(fit_err)?;
                fits.push(FitRecord::new(&f, Some(l), Some(p.gamma), None));
            }
        }
        FitKindArg::Nu => {
            let (distinct, _) = lengths(&t)?;
            let l = pick_length(args, &distinct)?;
            let gc = match (args.gamma_c, &args.critical) {
                (Some(g), _) => g,
                (None, Some(path)) => critical_from_file(path, l)?,
                (None, None) => return Err(CliError::Config("nu fit needs --gamma-c or --critical".into())),
            };
            let mut xis = Vec::new();
            for (_, p) in profiles(&t, Some(l))? {
                let xi = match p.xi {
                    Some(x) => x,
                    None => fit_xi(&p, None).map_err(fit_err)?.value,
                };
                xis.push((p.gamma, xi));
            }
            let f = fit_nu(&xis, gc, window(args, None)?).map_err(fit_err)?;
            fits.push(FitRecord::new(&f, Some(l), None, Some(gc)));
        }
        FitKindArg::Gc => {
            let (_, per_row) = lengths(&t)?;
            let gc = t.floats("gamma_c")?;
            let pts: Vec<(f64, f64)> = per_row.iter().zip(gc).filter_map(|(&l, g)| g.map(|g| (l as f64, g))).collect();
            let f = extrapolate_gc(&pts).map_err(fit_err)?;
            fits.push(FitRecord::new(&f, None, None, None));
        }
    }

    let input = args.input.display().to_string();
    let report = FitReport { tool: format!("qcp {VERSION}"), input: &input, fits };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?;
    write_text(args.out.as_deref(), &(json + "\n"))?;
    if let Some(path) = &args.csv_out {
        let mut meta = Meta::new("fit");
        meta.set("kind", report.fits[0].kind).set("input", &input);
        if let Some(g) = args.gamma_c {
            meta.set("gamma_c", g);
        }
        let rows: Vec<Vec<String>> = report.fits.iter().map(|f| f.csv(&input)).collect();
        write_csv(Some(path), &meta, &COLUMNS, &rows)?;
    }
    Ok(())
}
