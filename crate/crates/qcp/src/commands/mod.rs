mod corr;
mod fit;
mod oracle;
mod spectrum;
mod sweep;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use qcp_core::eigen::{DenseOptions, TargetedOptions};
use qcp_core::ground::{linspace, logspace, Solver};
use qcp_core::Boundary;

pub use corr::run as corr;
pub use fit::run as fit;
pub use oracle::run as oracle;
pub use spectrum::run as spectrum;
pub use sweep::{entropy, run as sweep};

use crate::cli::{BoundaryArg, GridArgs, ModelArgs, SolverArg, SolverArgs, Spacing};
use crate::error::{CliError, Result};
use crate::io::Meta;

pub(crate) fn boundary(model: &ModelArgs, default: Boundary) -> Boundary {
    match model.boundary {
        Some(BoundaryArg::Periodic) => Boundary::Periodic,
        Some(BoundaryArg::Open) => Boundary::Open,
        None => default,
    }
}

pub(crate) fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::Periodic => "periodic",
        Boundary::Open => "open",
    }
}

pub(crate) fn solver(args: &SolverArgs, sites: usize) -> Result<Solver> {
    if args.k < 2 {
        return Err(CliError::Config("--k must be at least 2".into()));
    }
    let targeted = Solver::Targeted { count: args.k, options: TargetedOptions { seed: args.seed, ..TargetedOptions::default() } };
    Ok(match args.solver {
        SolverArg::Dense => Solver::Dense(DenseOptions::default()),
        SolverArg::Targeted => targeted,
        SolverArg::Auto if sites <= 10 => Solver::Dense(DenseOptions::default()),
        SolverArg::Auto => targeted,
    })
}

pub(crate) fn check_sites(model: &ModelArgs) -> Result<()> {
    if model.sites.is_empty() {
        return Err(CliError::Config("--L needs at least one chain length".into()));
    }
    if let Some(l) = model.sites.iter().find(|&&l| !(2..=24).contains(&l)) {
        return Err(CliError::Config(format!("chain length {l} outside 2..=24")));
    }
    Ok(())
}

pub(crate) fn model_meta(meta: &mut Meta, model: &ModelArgs, b: Boundary) {
    meta.set_list("L", &model.sites)
        .set("omega", model.omega)
        .set("gamma_re", model.gamma_re)
        .set("gamma_im", model.gamma_im)
        .set("boundary", boundary_name(b));
}

pub(crate) fn solver_meta(meta: &mut Meta, args: &SolverArgs) {
    let name = match args.solver {
        SolverArg::Auto => "auto",
        SolverArg::Dense => "dense",
        SolverArg::Targeted => "targeted",
    };
    meta.set("solver", name).set("k", args.k).set("seed", args.seed).set("refine", args.refine);
}

/// Grid from `--gamma-list` or `--gamma-min/--gamma-max/--steps`, with an
/// optional lead-in. `fallback` is used when neither is given.
pub(crate) fn grid(args: &GridArgs, fallback: Option<f64>) -> Result<Vec<f64>> {
    let cfg = |m: &str| CliError::Config(m.to_owned());
    let mut g = match (&args.gamma_list, args.gamma_min, args.gamma_max, args.steps) {
        (Some(list), None, None, None) => {
            if list.is_empty() {
                return Err(cfg("empty grid"));
            }
            list.clone()
        }
        (Some(_), ..) => return Err(cfg("--gamma-list excludes --gamma-min/--gamma-max/--steps")),
        (None, Some(lo), Some(hi), Some(n)) => {
            if n < 2 {
                return Err(cfg("--steps must be at least 2"));
            }
            if !(lo < hi) {
                return Err(cfg("--gamma-min must be below --gamma-max"));
            }
            match args.spacing {
                Spacing::Linear => linspace(lo, hi, n),
                Spacing::Log => {
                    let a = args.anchor.ok_or_else(|| cfg("--spacing log needs --anchor"))?;
                    if lo >= a {
                        let mut v: Vec<f64> = logspace(lo - a, hi - a, n).into_iter().map(|d| a + d).collect();
                        v[0] = lo;
                        v[n - 1] = hi;
                        v
                    } else if hi <= a {
                        let mut v: Vec<f64> = logspace(a - hi, a - lo, n).into_iter().rev().map(|d| a - d).collect();
                        v[0] = lo;
                        v[n - 1] = hi;
                        v
                    } else {
                        return Err(cfg("log spacing needs the whole range on one side of --anchor"));
                    }
                }
            }
        }
        (None, None, None, None) => match fallback {
            Some(x) => vec![x],
            None => return Err(cfg("no grid: give --gamma-list or --gamma-min/--gamma-max/--steps")),
        },
        _ => return Err(cfg("--gamma-min, --gamma-max and --steps go together")),
    };
    if let Some(start) = args.lead_in {
        if !(args.lead_step > 0.0) {
            return Err(cfg("--lead-step must be positive"));
        }
        let first = g[0];
        if !(start < first) {
            return Err(cfg("--lead-in must lie below the grid"));
        }
        let n = ((first - start) / args.lead_step - 1e-9).ceil() as usize;
        let mut lead: Vec<f64> = (0..n).map(|i| start + args.lead_step * i as f64).collect();
        lead.extend(g);
        g = lead;
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(cfg("grid values must be finite"));
    }
    Ok(g)
}

pub(crate) fn grid_meta(meta: &mut Meta, args: &GridArgs) {
    if let Some(l) = &args.gamma_list {
        meta.set_list("gamma_list", l);
    }
    if let (Some(lo), Some(hi), Some(n)) = (args.gamma_min, args.gamma_max, args.steps) {
        meta.set("gamma_min", lo).set("gamma_max", hi).set("steps", n);
        if args.spacing == Spacing::Log {
            meta.set("spacing", "log");
            if let Some(a) = args.anchor {
                meta.set("anchor", a);
            }
        }
    }
    if let Some(s) = args.lead_in {
        meta.set("lead_in", s).set("lead_step", args.lead_step);
    }
}

pub(crate) fn strictly_increasing(g: &[f64]) -> Result<()> {
    if g.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(CliError::Config("sweep grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Applies `f` to every item on up to `workers` threads and returns the
/// results in input order.
pub(crate) fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every slot is filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_args() -> GridArgs {
        GridArgs {
            gamma_min: None,
            gamma_max: None,
            steps: None,
            gamma_list: None,
            spacing: Spacing::Linear,
            anchor: None,
            lead_in: None,
            lead_step: 0.05,
        }
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<usize> = (0..37).collect();
        let out = parallel_map(&items, 4, |x| x * x);
        assert_eq!(out, items.iter().map(|x| x * x).collect::<Vec<_>>());
    }

    #[test]
    fn grids() {
        let mut a = grid_args();
        assert!(grid(&a, None).is_err());
        assert_eq!(grid(&a, Some(2.0)).unwrap(), vec![2.0]);
        a.gamma_min = Some(1.0);
        assert!(grid(&a, None).is_err());
        a.gamma_max = Some(2.0);
        a.steps = Some(3);
        assert_eq!(grid(&a, None).unwrap(), vec![1.0, 1.5, 2.0]);
        a.spacing = Spacing::Log;
        a.anchor = Some(3.0);
        let g = grid(&a, None).unwrap();
        assert_eq!((g[0], g[2]), (1.0, 2.0));
        assert!((g[1] - (3.0 - 2f64.sqrt())).abs() < 1e-12);
        a.lead_in = Some(0.8);
        a.lead_step = 0.1;
        let g = grid(&a, None).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[1] - 0.9).abs() < 1e-12);
        strictly_increasing(&g).unwrap();
    }
}
