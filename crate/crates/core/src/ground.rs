//! Ground-state selection and continuation through the exceptional point.
//!
//! Below the transition the ground state is the eigenvalue with the most
//! negative real part. At the exceptional point that eigenvalue meets its
//! partner on the imaginary axis, and beyond it the branch is followed by
//! maximal overlap with the previous grid point.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::eigen::{dot, eig_full, eig_targeted, DenseOptions, Spectrum, Target, TargetedOptions};
use crate::model::{build_heff, ModelParams};
use crate::operator::SparseOperator;
use crate::{Error, Result, C64};

/// How a record's eigenpair was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    MinRealPart,
    Continuity,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::MinRealPart => "min-real-part",
            Rule::Continuity => "continuity",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateRecord {
    pub gamma: C64,
    pub energy: C64,
    /// Unit right eigenvector.
    pub state: Vec<C64>,
    pub rule: Rule,
    /// `|⟨previous state|state⟩|`, 1 at the first point.
    pub overlap_prev: f64,
    /// The chosen eigenvalue was still numerically degenerate with its
    /// partner, so the branch choice is revisited at the next point.
    pub coalesced: bool,
    /// Position of the chosen pair in the spectrum it came from.
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    /// Real parts above `−eps_re` count as zero.
    pub eps_re: f64,
    /// Minimum overlap for the min-Re candidate to count as the same branch.
    pub overlap_gate: f64,
    /// Overlaps closer than this are ties.
    pub tie_tol: f64,
    /// Eigenvalues closer than this (relative) are treated as coalesced.
    pub coalescence_tol: f64,
    /// A continuity step is split in half when the runner-up's infidelity
    /// `1 − overlap` is within this factor of the winner's.
    pub ambiguity_ratio: f64,
    /// How many times one step may be halved.
    pub max_bisections: usize,
}

impl TrackerConfig {
    pub fn for_omega(omega: f64) -> Self {
        TrackerConfig {
            eps_re: 1e-8 * omega,
            overlap_gate: 0.5,
            tie_tol: 1e-6,
            coalescence_tol: 1e-6,
            ambiguity_ratio: 2.0,
            max_bisections: 4,
        }
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self::for_omega(1.0)
    }
}

fn overlaps(spec: &Spectrum, state: &[C64]) -> Vec<f64> {
    spec.pairs().iter().map(|p| dot(state, &p.right).norm()).collect()
}

fn argmin_re(spec: &Spectrum) -> usize {
    let p = spec.pairs();
    (0..p.len())
        .min_by(|&a, &b| {
            p[a].value
                .re
                .total_cmp(&p[b].value.re)
                .then(p[b].value.im.abs().total_cmp(&p[a].value.im.abs()))
                .then(a.cmp(&b))
        })
        .unwrap_or(0)
}

fn by_overlap(ov: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ov.len()).collect();
    idx.sort_by(|&a, &b| ov[b].total_cmp(&ov[a]).then(a.cmp(&b)));
    idx
}

/// Crossing onto the imaginary axis: of the two states sharing the previous
/// one, take the lower-Im member (principal continuation).
fn crossing(spec: &Spectrum, ov: &[f64], cfg: &TrackerConfig) -> (usize, bool) {
    let order = by_overlap(ov);
    let p = spec.pairs();
    let a = order[0];
    let Some(&b) = order.get(1) else {
        return (a, false);
    };
    let (ea, eb) = (p[a].value, p[b].value);
    let pick = match ea.im.total_cmp(&eb.im) {
        core::cmp::Ordering::Less => a,
        core::cmp::Ordering::Greater => b,
        core::cmp::Ordering::Equal => a.min(b),
    };
    let coalesced = (ea - eb).norm() < cfg.coalescence_tol * ea.norm().max(1.0);
    (pick, coalesced)
}

/// Chooses the ground state from `spec` given the previous grid point.
pub fn select_ground(
    spec: &Spectrum,
    prev: Option<&GroundStateRecord>,
    gamma: C64,
    cfg: &TrackerConfig,
) -> Result<GroundStateRecord> {
    if spec.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let pairs = spec.pairs();
    let imin = argmin_re(spec);
    let below = |i: usize| pairs[i].value.re < -cfg.eps_re;
    let real_spectrum = pairs.iter().all(|p| p.value.im.abs() <= cfg.eps_re);

    let make = |i: usize, rule: Rule, overlap_prev: f64, coalesced: bool| GroundStateRecord {
        gamma,
        energy: pairs[i].value,
        state: pairs[i].right.clone(),
        rule,
        overlap_prev,
        coalesced,
        index: i,
    };

    let Some(prev) = prev else {
        if below(imin) || real_spectrum {
            return Ok(make(imin, Rule::MinRealPart, 1.0, false));
        }
        let i = (0..pairs.len())
            .min_by(|&a, &b| pairs[a].value.im.abs().total_cmp(&pairs[b].value.im.abs()).then(a.cmp(&b)))
            .unwrap_or(0);
        return Ok(make(i, Rule::Continuity, 1.0, false));
    };

    let ov = overlaps(spec, &prev.state);
    if real_spectrum {
        return Ok(make(imin, Rule::MinRealPart, ov[imin], false));
    }
    let best = by_overlap(&ov)[0];
    match prev.rule {
        Rule::MinRealPart => {
            if below(imin) && (ov[imin] >= cfg.overlap_gate || below(best)) {
                return Ok(make(imin, Rule::MinRealPart, ov[imin], false));
            }
            let (i, coalesced) = crossing(spec, &ov, cfg);
            Ok(make(i, Rule::Continuity, ov[i], coalesced))
        }
        Rule::Continuity if prev.coalesced => {
            let (i, coalesced) = crossing(spec, &ov, cfg);
            Ok(make(i, Rule::Continuity, ov[i], coalesced))
        }
        Rule::Continuity => {
            let top = ov[best];
            let target = prev.energy.im;
            let i = (0..pairs.len())
                .filter(|&i| top - ov[i] <= cfg.tie_tol)
                .min_by(|&a, &b| {
                    (pairs[a].value.im - target)
                        .abs()
                        .total_cmp(&(pairs[b].value.im - target).abs())
                        .then(a.cmp(&b))
                })
                .unwrap_or(best);
            Ok(make(i, Rule::Continuity, ov[i], false))
        }
    }
}

/// Direction of a sweep in the complex `Γ` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    /// `Γ = re + i·t`.
    Imaginary { re: f64 },
    /// `Γ = t + i·im`.
    Real { im: f64 },
}

impl Axis {
    pub fn gamma(&self, t: f64) -> C64 {
        match *self {
            Axis::Imaginary { re } => C64::new(re, t),
            Axis::Real { im } => C64::new(t, im),
        }
    }

    /// Inverse of [`Axis::gamma`].
    pub fn coordinate(&self, gamma: C64) -> f64 {
        match self {
            Axis::Imaginary { .. } => gamma.im,
            Axis::Real { .. } => gamma.re,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    Dense(DenseOptions),
    /// Restarted Arnoldi returning `count` pairs; shift-invert around the
    /// predicted ground energy once a previous point exists, unless the
    /// operator is Hermitian and the ground state is simply the lowest level.
    Targeted { count: usize, options: TargetedOptions },
}

impl Solver {
    pub fn dense() -> Self {
        Solver::Dense(DenseOptions::default())
    }

    pub fn targeted() -> Self {
        Solver::Targeted { count: 6, options: TargetedOptions::default() }
    }

    /// Dense up to the dense ceiling, targeted above.
    pub fn auto(dim: usize) -> Self {
        if dim <= 1024 {
            Self::dense()
        } else {
            Self::targeted()
        }
    }

    /// Eigenpairs of `h`; `hint` is the energy the interesting pairs sit near.
    pub fn solve(&self, h: &SparseOperator, hint: Option<C64>) -> Result<Spectrum> {
        match self {
            Solver::Dense(opts) => eig_full(h, opts),
            Solver::Targeted { count, options } => {
                let k = (*count).min(h.dim());
                let target = match hint {
                    // Keep the shift off exact eigenvalues such as the vacuum's zero.
                    Some(e) if !h.is_hermitian() => Target::Nearest(e + C64::new(1e-9, 1e-9) * e.norm().max(1.0)),
                    _ => Target::SmallestReal,
                };
                eig_targeted(h, k, target, options)
            }
        }
    }
}

/// One tracker step: the record plus the spectrum and operator it came from.
#[derive(Debug, Clone)]
pub struct TrackStep {
    pub t: f64,
    pub record: GroundStateRecord,
    pub spectrum: Spectrum,
    pub hamiltonian: SparseOperator,
}

/// Sequential ground-state follower along an [`Axis`].
#[derive(Debug, Clone)]
pub struct Tracker {
    params: ModelParams,
    axis: Axis,
    solver: Solver,
    config: TrackerConfig,
    prev: Option<GroundStateRecord>,
    history: Vec<(f64, C64)>,
}

impl Tracker {
    pub fn new(params: ModelParams, axis: Axis, solver: Solver, config: TrackerConfig) -> Self {
        Tracker { params, axis, solver, config, prev: None, history: Vec::new() }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn solver(&self) -> &Solver {
        &self.solver
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn prev(&self) -> Option<&GroundStateRecord> {
        self.prev.as_ref()
    }

    /// Extrapolation of the ground energy to `t`: linear through the last
    /// two points on the same side of the transition, otherwise first order
    /// from the previous state.
    pub fn predict(&self, t: f64) -> Option<C64> {
        match self.history.as_slice() {
            [] => None,
            [(t1, e)] => Some(*e + self.slope() * (t - t1)),
            [.., (t0, e0), (t1, e1)] => {
                let same_side = self.prev.as_ref().map_or(true, |p| !p.coalesced);
                if same_side && (t1 - t0).abs() > 0.0 {
                    Some(*e1 + (*e1 - *e0) * ((t - t1) / (t1 - t0)))
                } else {
                    Some(*e1)
                }
            }
        }
    }

    /// `⟨ψ|∂H/∂t|ψ⟩` on the previous state, with `∂H/∂Γ = −½ Σ n_k`.
    fn slope(&self) -> C64 {
        let Some(prev) = &self.prev else {
            return C64::new(0.0, 0.0);
        };
        let up: f64 = prev.state.iter().enumerate().map(|(k, a)| k.count_ones() as f64 * a.norm_sqr()).sum();
        let dgamma = match self.axis {
            Axis::Imaginary { .. } => C64::new(0.0, 1.0),
            Axis::Real { .. } => C64::new(1.0, 0.0),
        };
        dgamma * (-0.5 * up)
    }

    /// Advances to `t`. Steps whose branch choice is ambiguous are retaken
    /// through their midpoint.
    pub fn step(&mut self, t: f64) -> Result<TrackStep> {
        self.step_split(t, self.config.max_bisections)
    }

    fn step_split(&mut self, t: f64, depth: usize) -> Result<TrackStep> {
        let step = self.attempt(t)?;
        if depth > 0 {
            if let Some(prev) = &self.prev {
                let t0 = self.axis.coordinate(prev.gamma);
                if t != t0 && self.ambiguous(prev, &step) {
                    self.step_split(0.5 * (t0 + t), depth - 1)?;
                    return self.step_split(t, depth - 1);
                }
            }
        }
        self.commit(&step);
        Ok(step)
    }

    fn attempt(&self, t: f64) -> Result<TrackStep> {
        let gamma = self.axis.gamma(t);
        let inner = || -> Result<TrackStep> {
            let h = build_heff(&self.params.with_gamma(gamma))?;
            let spectrum = self.solver.solve(&h, self.predict(t))?;
            let record = select_ground(&spectrum, self.prev.as_ref(), gamma, &self.config)?;
            Ok(TrackStep { t, record, spectrum, hamiltonian: h })
        };
        inner().map_err(|e| e.at_gamma(gamma))
    }

    /// No eigenvector, or more than one, matches the previous state.
    fn ambiguous(&self, prev: &GroundStateRecord, step: &TrackStep) -> bool {
        if prev.rule != Rule::Continuity || prev.coalesced || step.record.rule != Rule::Continuity {
            return false;
        }
        let ov = overlaps(&step.spectrum, &prev.state);
        let order = by_overlap(&ov);
        let Some(&a) = order.first() else {
            return false;
        };
        if ov[a] < self.config.overlap_gate {
            return true;
        }
        order.get(1).is_some_and(|&b| {
            ov[b] >= self.config.overlap_gate && 1.0 - ov[b] < self.config.ambiguity_ratio * (1.0 - ov[a])
        })
    }

    fn commit(&mut self, step: &TrackStep) {
        if let Some(p) = &self.prev {
            if p.rule != step.record.rule {
                self.history.clear();
            }
        }
        self.history.push((step.t, step.record.energy));
        if self.history.len() > 2 {
            self.history.remove(0);
        }
        self.prev = Some(step.record.clone());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTrace {
    pub params: ModelParams,
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub records: Vec<GroundStateRecord>,
}

impl SweepTrace {
    /// Index of the first record selected by continuity.
    pub fn transition_index(&self) -> Option<usize> {
        self.records.iter().position(|r| r.rule == Rule::Continuity)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub solver: Solver,
    pub config: TrackerConfig,
    /// Levels of midpoint insertion where the overlap with the previous
    /// point drops below `refine_below`.
    pub refine_depth: usize,
    pub refine_below: f64,
}

impl SweepOptions {
    pub fn new(solver: Solver, omega: f64) -> Self {
        SweepOptions { solver, config: TrackerConfig::for_omega(omega), refine_depth: 0, refine_below: 0.9 }
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::param("empty grid"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("grid must be strictly increasing"));
    }
    Ok(())
}

fn advance<F>(tracker: &mut Tracker, t: f64, depth: usize, opts: &SweepOptions, f: &mut F) -> Result<()>
where
    F: FnMut(&Tracker, &TrackStep) -> Result<()>,
{
    let snapshot = (depth > 0).then(|| tracker.clone());
    let step = tracker.step(t)?;
    if let Some(mut saved) = snapshot {
        if let Some(prev) = saved.prev().cloned() {
            let t0 = saved.axis.coordinate(prev.gamma);
            if step.record.overlap_prev < opts.refine_below && t > t0 {
                advance(&mut saved, 0.5 * (t0 + t), depth - 1, opts, f)?;
                advance(&mut saved, t, depth - 1, opts, f)?;
                *tracker = saved;
                return Ok(());
            }
        }
    }
    f(tracker, &step)
}

/// Sweeps `grid` in order, calling `f` after every accepted step (including
/// inserted refinement points).
pub fn sweep_with<F>(params: &ModelParams, axis: Axis, grid: &[f64], opts: &SweepOptions, mut f: F) -> Result<()>
where
    F: FnMut(&Tracker, &TrackStep) -> Result<()>,
{
    check_grid(grid)?;
    let mut tracker = Tracker::new(*params, axis, opts.solver, opts.config);
    for &t in grid {
        advance(&mut tracker, t, opts.refine_depth, opts, &mut f)?;
    }
    Ok(())
}

pub fn sweep(params: &ModelParams, axis: Axis, grid: &[f64], opts: &SweepOptions) -> Result<SweepTrace> {
    let mut out_grid = Vec::with_capacity(grid.len());
    let mut records = Vec::with_capacity(grid.len());
    sweep_with(params, axis, grid, opts, |_, step| {
        out_grid.push(step.t);
        records.push(step.record.clone());
        Ok(())
    })?;
    Ok(SweepTrace { params: *params, axis, grid: out_grid, records })
}

/// Evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// `n` points from `lo` to `hi` inclusive, evenly spaced in `ln`.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::l2_spectrum;

    fn dense_l2_sweep(grid: &[f64]) -> SweepTrace {
        let p = ModelParams::dissipative(2, 0.0).unwrap();
        sweep(&p, Axis::Imaginary { re: 0.0 }, grid, &SweepOptions::new(Solver::dense(), 1.0)).unwrap()
    }

    #[test]
    fn two_site_ground_at_gamma_four() {
        let h = build_heff(&ModelParams::dissipative(2, 4.0).unwrap()).unwrap();
        let s = eig_full(&h, &DenseOptions::default()).unwrap();
        let r = select_ground(&s, None, C64::new(0.0, 4.0), &TrackerConfig::default()).unwrap();
        assert!((r.energy - C64::new(-1.0, -3.0)).norm() < 1e-12);
        assert_eq!(r.rule, Rule::MinRealPart);
        assert_eq!(r.overlap_prev, 1.0);
    }

    #[test]
    fn hermitian_limit_is_lowest_eigenvalue() {
        let p = ModelParams::dissipative(4, 0.0).unwrap();
        let h = build_heff(&p).unwrap();
        let s = eig_full(&h, &DenseOptions::default()).unwrap();
        let r = select_ground(&s, None, C64::new(0.0, 0.0), &TrackerConfig::default()).unwrap();
        assert_eq!(r.energy, s.values()[0]);
    }

    #[test]
    fn rule_switches_in_step_bracketing_the_two_site_ep() {
        let grid = linspace(0.0, 8.0, 161);
        let trace = dense_l2_sweep(&grid);
        let k = trace.transition_index().unwrap();
        let ep = 32f64.sqrt();
        assert!(grid[k - 1] < ep && ep <= grid[k], "{} {}", grid[k - 1], grid[k]);
        assert!(trace.records[..k].iter().all(|r| r.rule == Rule::MinRealPart));
        assert!(trace.records[k..].iter().all(|r| r.rule == Rule::Continuity));
    }

    #[test]
    fn post_ep_branch_is_continuous() {
        let trace = dense_l2_sweep(&[5.6, 6.0]);
        let r = &trace.records[1];
        let want = l2_spectrum(1.0, C64::new(0.0, 6.0)).energies[3];
        assert!((r.energy - want).norm() < 1e-12);
        assert!(r.overlap_prev > 0.5);
    }

    #[test]
    fn coarse_step_after_the_ep_keeps_the_lower_branch() {
        // seven sites: the EP is near 13.74 and both branches overlap the
        // state at 13.75 by more than 0.99
        let p = ModelParams::dissipative(7, 13.5).unwrap();
        let opts = SweepOptions::new(Solver::dense(), 1.0);
        let coarse = sweep(&p, Axis::Imaginary { re: 0.0 }, &[13.5, 13.75, 14.0], &opts).unwrap();
        let fine = sweep(&p, Axis::Imaginary { re: 0.0 }, &linspace(13.5, 14.0, 51), &opts).unwrap();
        let (a, b) = (coarse.records.last().unwrap().energy, fine.records.last().unwrap().energy);
        assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn no_history_past_the_ep_takes_smallest_imaginary_part() {
        let h = build_heff(&ModelParams::dissipative(2, 7.0).unwrap()).unwrap();
        let s = eig_full(&h, &DenseOptions::default()).unwrap();
        let r = select_ground(&s, None, C64::new(0.0, 7.0), &TrackerConfig::default()).unwrap();
        assert_eq!(r.rule, Rule::Continuity);
        assert_eq!(r.energy, C64::new(0.0, 0.0));
    }

    #[test]
    fn constant_hermitian_sweep_repeats() {
        let p = ModelParams::new(4, 1.0, C64::new(-1.0, 0.0), crate::Boundary::Periodic).unwrap();
        let mut tr = Tracker::new(p, Axis::Imaginary { re: -1.0 }, Solver::dense(), TrackerConfig::default());
        let a = tr.step(0.0).unwrap().record;
        let b = tr.step(0.0).unwrap().record;
        assert_eq!(a.energy, b.energy);
        assert_eq!(a.state, b.state);
        assert!((b.overlap_prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_and_unsorted_grids_are_rejected() {
        let p = ModelParams::dissipative(2, 0.0).unwrap();
        let o = SweepOptions::new(Solver::dense(), 1.0);
        assert!(sweep(&p, Axis::Imaginary { re: 0.0 }, &[], &o).is_err());
        assert!(sweep(&p, Axis::Imaginary { re: 0.0 }, &[1.0, 1.0], &o).is_err());
    }

    #[test]
    fn refinement_inserts_points_where_overlap_drops() {
        let p = ModelParams::dissipative(4, 0.0).unwrap();
        let mut o = SweepOptions::new(Solver::dense(), 1.0);
        let grid = [12.0, 13.0, 14.0];
        let plain = sweep(&p, Axis::Imaginary { re: 0.0 }, &grid, &o).unwrap();
        assert!(plain.records.iter().any(|r| r.overlap_prev < 0.999));
        o.refine_depth = 3;
        o.refine_below = 0.999;
        let refined = sweep(&p, Axis::Imaginary { re: 0.0 }, &grid, &o).unwrap();
        assert!(refined.grid.len() > plain.grid.len());
        assert!(refined.grid.windows(2).all(|w| w[1] > w[0]));
        let last = refined.records.last().unwrap();
        assert!((last.energy - plain.records[2].energy).norm() < 1e-10);
    }
}
