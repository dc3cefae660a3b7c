//! Critical points, exponent fits and finite-size extrapolation.
//!
//! Exponents come from ordinary least squares in log-log space; `normr` is
//! the Euclidean norm of those log residuals.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::ground::{Axis, Rule, Solver, Tracker, TrackerConfig};
use crate::model::ModelParams;
use crate::observables::{expect_rr, CorrelationProfile};
use crate::operator::{site_sum, PauliKind};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitKind {
    Beta,
    Gamma,
    Xi,
    Nu,
    GcExtrapolation,
}

impl FitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FitKind::Beta => "beta",
            FitKind::Gamma => "gamma",
            FitKind::Xi => "xi",
            FitKind::Nu => "nu",
            FitKind::GcExtrapolation => "gc-extrapolation",
        }
    }
}

/// Closed interval of the fit's independent variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || lo.is_nan() || hi.is_nan() {
            return Err(Error::param("fit window must satisfy lo < hi"));
        }
        Ok(Window { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Lower half in log scale, used for sensitivity checks.
    pub fn halved(&self) -> Self {
        Window { lo: self.lo, hi: (self.lo * self.hi).sqrt() }
    }
}

pub const BETA_WINDOW: Window = Window { lo: 1e-3, hi: 0.5 };
/// Past `d ≈ 0.1` the local exponent bends away from its asymptote, more so
/// for longer chains.
pub const GAMMA_WINDOW: Window = Window { lo: 1e-3, hi: 0.1 };
pub const HERMITIAN_GAMMA_WINDOW: Window = Window { lo: 0.1, hi: 4.0 };

/// Default correlation fit window: offsets `3..=⌊2L/3⌋`.
pub fn xi_window(sites: usize) -> Window {
    Window { lo: 3.0, hi: (2 * sites / 3) as f64 }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub kind: FitKind,
    /// Exponent, correlation length or extrapolated critical point.
    pub value: f64,
    /// Prefactor of the power law (`χ₀` for the susceptibility).
    pub amplitude: f64,
    /// Finite-size exponent of the extrapolation.
    pub power: Option<f64>,
    pub window: Window,
    pub normr: f64,
    pub points_used: usize,
    pub low_confidence: bool,
}

struct Line {
    slope: f64,
    intercept: f64,
    normr: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> Line {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let normr = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum::<f64>()
        .sqrt();
    Line { slope, intercept, normr }
}

/// Log-log line through `(d, |v|)` for `d` in the window; `v` must be nonzero
/// (and positive when `positive` is set).
fn log_log(points: &[(f64, f64, f64)], window: Window, positive: bool) -> Result<(Line, usize)> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &(at, d, v) in points {
        if !(d > 0.0) || !window.contains(d) {
            continue;
        }
        if (positive && !(v > 0.0)) || v == 0.0 || !v.is_finite() {
            return Err(Error::NonPositive { at, value: v });
        }
        x.push(d.ln());
        y.push(v.abs().ln());
    }
    if x.len() < 3 {
        return Err(Error::TooFewPoints { found: x.len(), needed: 3 });
    }
    Ok((least_squares(&x, &y), x.len()))
}

/// `M^x ∼ −(Γ_c − Γ)^β` from `(Γ, M^x)` pairs below `gamma_c`.
pub fn fit_beta(series: &[(f64, f64)], gamma_c: f64, window: Option<Window>) -> Result<FitResult> {
    let window = window.unwrap_or(BETA_WINDOW);
    let pts: Vec<_> = series.iter().map(|&(g, m)| (g, gamma_c - g, m)).collect();
    let (line, used) = log_log(&pts, window, false)?;
    Ok(FitResult {
        kind: FitKind::Beta,
        value: line.slope,
        amplitude: line.intercept.exp(),
        power: None,
        window,
        normr: line.normr,
        points_used: used,
        low_confidence: false,
    })
}

/// `χ = χ₀ (Γ − Γ_c)^{−γ}` from `(Γ, χ)` pairs above `gamma_c`.
pub fn fit_gamma(series: &[(f64, f64)], gamma_c: f64, window: Option<Window>) -> Result<FitResult> {
    let window = window.unwrap_or(GAMMA_WINDOW);
    let pts: Vec<_> = series.iter().map(|&(g, chi)| (g, g - gamma_c, chi)).collect();
    let (line, used) = log_log(&pts, window, true)?;
    Ok(FitResult {
        kind: FitKind::Gamma,
        value: -line.slope,
        amplitude: line.intercept.exp(),
        power: None,
        window,
        normr: line.normr,
        points_used: used,
        low_confidence: false,
    })
}

/// `|Δ(n)| ∼ e^{−n/ξ}` over the offsets in `window`.
///
/// A profile that is not monotonically decaying inside the window, or that
/// does not decay at all, is flagged low-confidence.
pub fn fit_xi(profile: &CorrelationProfile, window: Option<Window>) -> Result<FitResult> {
    let sites = profile.n.iter().copied().max().unwrap_or(0);
    let window = match window {
        Some(w) => w,
        None => Window::new(3.0, (2 * sites / 3) as f64).map_err(|_| Error::TooFewPoints { found: 0, needed: 4 })?,
    };
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (&n, &v) in profile.n.iter().zip(&profile.values) {
        if window.contains(n as f64) && v.abs() > 1e-12 && v.is_finite() {
            x.push(n as f64);
            y.push(v.abs().ln());
        }
    }
    if x.len() < 4 {
        return Err(Error::TooFewPoints { found: x.len(), needed: 4 });
    }
    let line = least_squares(&x, &y);
    let monotone = y.windows(2).all(|w| w[1] <= w[0] + 1e-9);
    let decaying = line.slope < 0.0;
    Ok(FitResult {
        kind: FitKind::Xi,
        value: if decaying { -1.0 / line.slope } else { f64::INFINITY },
        amplitude: line.intercept.exp(),
        power: None,
        window,
        normr: line.normr,
        points_used: x.len(),
        low_confidence: !monotone || !decaying,
    })
}

/// `ξ ∼ (Γ − Γ_c)^{−ν}` from `(Γ, ξ)` pairs above `gamma_c`.
pub fn fit_nu(xis: &[(f64, f64)], gamma_c: f64, window: Option<Window>) -> Result<FitResult> {
    let window = window.unwrap_or(Window { lo: 0.0, hi: f64::INFINITY });
    let pts: Vec<_> = xis.iter().map(|&(g, xi)| (g, g - gamma_c, xi)).collect();
    let (line, used) = log_log(&pts, window, true)?;
    Ok(FitResult {
        kind: FitKind::Nu,
        value: -line.slope,
        amplitude: line.intercept.exp(),
        power: None,
        window,
        normr: line.normr,
        points_used: used,
        low_confidence: false,
    })
}

/// Best `(Γ∞, a)` and residual norm of `Γ∞ − a·L^{−p}` at fixed `p`.
fn project(points: &[(f64, f64)], p: f64) -> (f64, f64, f64) {
    let x: Vec<f64> = points.iter().map(|(l, _)| -l.powf(-p)).collect();
    let y: Vec<f64> = points.iter().map(|(_, g)| *g).collect();
    let line = least_squares(&x, &y);
    (line.intercept, line.slope, line.normr)
}

const P_RANGE: (f64, f64) = (0.05, 10.0);

/// Fits `Γ_c(L) = Γ∞ − a·L^{−p}` with `a, p > 0`.
///
/// `(Γ∞, a)` are linear for fixed `p`, so only `p` is searched: a log-spaced
/// scan followed by golden-section refinement of the residual norm.
pub fn extrapolate_gc(points: &[(f64, f64)]) -> Result<FitResult> {
    let mut ls: Vec<f64> = points.iter().map(|(l, _)| *l).collect();
    ls.sort_by(f64::total_cmp);
    ls.dedup();
    if ls.len() < 4 {
        return Err(Error::TooFewPoints { found: ls.len(), needed: 4 });
    }
    if points.iter().any(|(l, g)| !(*l > 0.0) || !g.is_finite()) {
        return Err(Error::param("extrapolation needs positive sizes and finite critical points"));
    }
    let cost = |lnp: f64| project(points, lnp.exp()).2;
    let (a, b) = (P_RANGE.0.ln(), P_RANGE.1.ln());
    let scan = 400;
    let step = (b - a) / scan as f64;
    let best = (0..=scan)
        .map(|i| a + step * i as f64)
        .min_by(|x, y| cost(*x).total_cmp(&cost(*y)))
        .unwrap_or(a);
    let (mut lo, mut hi) = ((best - step).max(a), (best + step).min(b));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (cost(c), cost(d));
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = cost(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = cost(d);
        }
    }
    let p = (0.5 * (lo + hi)).exp();
    let (ginf, amp, normr) = project(points, p);
    let fail = |reason: &str| Err(Error::Extrapolation { reason: String::from(reason), normr });
    if !(amp > 0.0) {
        return fail("fitted amplitude is not positive");
    }
    if p <= P_RANGE.0 * 1.001 || p >= P_RANGE.1 * 0.999 {
        return fail("finite-size exponent ran to the edge of its search range");
    }
    Ok(FitResult {
        kind: FitKind::GcExtrapolation,
        value: ginf,
        amplitude: amp,
        power: Some(p),
        window: Window { lo: ls[0], hi: ls[ls.len() - 1] },
        normr,
        points_used: points.len(),
        low_confidence: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Spectral,
    OrderParameter,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::OrderParameter => "order-parameter",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub sites: usize,
    /// Midpoint of the final spectral bracket.
    pub gamma_c: f64,
    pub method: Method,
    pub bracket_width: f64,
    /// Independent estimate from where `|M^x|` drops below its threshold.
    pub order_parameter: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalSearch {
    /// First `γ` of the coarse scan; must lie below the transition.
    pub start: f64,
    pub step: f64,
    /// Give up when the scan passes this value.
    pub stop: f64,
    pub tol: f64,
    /// `|M^x|` below this counts as zero.
    pub mx_floor: f64,
    pub solver: Solver,
}

impl CriticalSearch {
    pub fn new(start: f64, solver: Solver) -> Self {
        CriticalSearch { start, step: 0.25, stop: 40.0, tol: 1e-4, mx_floor: 1e-6, solver }
    }
}

/// A tracker parked on the last point known to be below the transition.
#[derive(Clone)]
struct Anchor {
    tracker: Tracker,
    t: f64,
}

struct Probe {
    pre: bool,
    energy: C64,
    state: Vec<C64>,
    tracker: Tracker,
}

fn probe(anchor: &Anchor, t: f64) -> Result<Probe> {
    let mut tracker = anchor.tracker.clone();
    let step = tracker.step(t)?;
    Ok(Probe {
        pre: step.record.rule == Rule::MinRealPart,
        energy: step.record.energy,
        state: step.record.state,
        tracker,
    })
}

/// Locates the point where the tracked ground energy's real part vanishes on
/// `Γ = Γ_re + i·γ` (with `Γ_re` taken from `params`).
///
/// The bracket from the coarse scan is narrowed with a safeguarded secant on
/// `(Re E₀)²`, which is linear in the distance to a square-root branch point;
/// every probe continues from the last point below the transition. The result
/// is cross-checked against the bisected point where `|M^x|` falls below
/// `mx_floor`, and the two must agree within `10·tol`.
pub fn find_gamma_c(params: &ModelParams, search: &CriticalSearch) -> Result<CriticalPoint> {
    let tol = search.tol;
    if !(tol > 0.0) || !(search.step > 0.0) {
        return Err(Error::param("tolerance and scan step must be positive"));
    }
    let axis = Axis::Imaginary { re: params.gamma().re };
    let cfg = TrackerConfig::for_omega(params.omega());
    let mut tracker = Tracker::new(*params, axis, search.solver, cfg);

    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut anchor: Option<Anchor> = None;
    let mut t = search.start;
    let mut hi = loop {
        if t > search.stop {
            return Err(Error::Bracket(format!("no transition below gamma = {}", search.stop)));
        }
        let step = tracker.step(t)?;
        if step.record.rule == Rule::Continuity {
            if anchor.is_none() {
                return Err(Error::Bracket(format!("scan start {} lies past the transition", search.start)));
            }
            break t;
        }
        history.push((t, step.record.energy.re.powi(2)));
        anchor = Some(Anchor { tracker: tracker.clone(), t });
        t += search.step;
    };
    let Some(mut anchor) = anchor else {
        return Err(Error::Bracket("empty scan".into()));
    };

    let mut bisect = false;
    while hi - anchor.t > tol {
        let (lo, width) = (anchor.t, hi - anchor.t);
        let secant = match history.as_slice() {
            [.., (t1, r1), (t2, r2)] if r2 != r1 => Some(t2 - r2 * (t2 - t1) / (r2 - r1)),
            _ => None,
        };
        let trials: Vec<f64> = match secant {
            Some(s) if !bisect && s > lo && s < hi => {
                [s - tol / 3.0, s + tol / 3.0].into_iter().filter(|x| *x > lo && *x < hi).collect()
            }
            _ => alloc::vec![0.5 * (lo + hi)],
        };
        for x in trials {
            let p = probe(&anchor, x)?;
            if !p.pre {
                hi = x;
                break;
            }
            history.push((x, p.energy.re.powi(2)));
            anchor = Anchor { tracker: p.tracker, t: x };
        }
        // A secant step that barely shrinks the bracket is followed by a bisection.
        bisect = !bisect && hi - anchor.t > 0.5 * width;
    }
    let spectral = 0.5 * (anchor.t + hi);
    let width = hi - anchor.t;

    let mx_op = site_sum(PauliKind::X, params.sites())?;
    let ordered = |t: f64| -> Result<bool> {
        let p = probe(&anchor, t)?;
        Ok(expect_rr(&p.state, &mx_op)?.abs() >= search.mx_floor)
    };
    let (mut a, mut b) = (anchor.t - 5.0 * tol, hi + 5.0 * tol);
    if !ordered(a)? || ordered(b)? {
        return Err(Error::MethodsDisagree { spectral, order_parameter: f64::NAN });
    }
    while b - a > tol {
        let m = 0.5 * (a + b);
        if ordered(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    let order_parameter = 0.5 * (a + b);
    if (order_parameter - spectral).abs() > 10.0 * tol {
        return Err(Error::MethodsDisagree { spectral, order_parameter });
    }
    Ok(CriticalPoint { sites: params.sites(), gamma_c: spectral, method: Method::Spectral, bracket_width: width, order_parameter })
}

/// Position of the smallest gap between the two lowest levels of a Hermitian
/// sweep `Γ = g + i·Im Γ` inside `[lo, hi]`, by golden-section search.
pub fn find_level_crossing(params: &ModelParams, lo: f64, hi: f64, tol: f64, solver: &Solver) -> Result<f64> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::param("crossing search needs lo < hi and tol > 0"));
    }
    let gap = |g: f64| -> Result<f64> {
        let h = crate::model::build_heff(&params.with_gamma(C64::new(g, params.gamma().im)))?;
        let spec = solver.solve(&h, None)?;
        let mut v: Vec<f64> = spec.values().iter().map(|e| e.re).collect();
        v.sort_by(f64::total_cmp);
        if v.len() < 2 {
            return Err(Error::TooFewPoints { found: v.len(), needed: 2 });
        }
        Ok(v[1] - v[0])
    };
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (lo, hi);
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (gap(c)?, gap(d)?);
    while hi - lo > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = gap(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = gap(d)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::logspace;
    use alloc::vec;

    #[test]
    fn exact_power_laws() {
        let gc = 13.8;
        let beta: Vec<(f64, f64)> = logspace(1e-3, 0.5, 30).iter().map(|d| (gc - d, -2.0 * d.sqrt())).collect();
        let f = fit_beta(&beta, gc, None).unwrap();
        assert!((f.value - 0.5).abs() < 1e-12 && f.normr < 1e-10);
        assert!((f.amplitude - 2.0).abs() < 1e-10);

        let chi: Vec<(f64, f64)> = logspace(1e-2, 1.0, 20).iter().map(|d| (gc + d, 3.0 * d.powf(-1.5))).collect();
        let f = fit_gamma(&chi, gc, None).unwrap();
        assert!((f.value - 1.5).abs() < 1e-12 && (f.amplitude - 3.0).abs() < 1e-10);

        let xis: Vec<(f64, f64)> = logspace(0.1, 2.0, 8).iter().map(|d| (gc + d, d.powf(-0.2))).collect();
        assert!((fit_nu(&xis, gc, None).unwrap().value - 0.2).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = (1..6).map(|i| (gc + i as f64, 0.7)).collect();
        assert!(fit_nu(&flat, gc, None).unwrap().value.abs() < 1e-12);
    }

    #[test]
    fn exponential_profile() {
        let n: Vec<usize> = (2..=12).collect();
        let values = n.iter().map(|&k| (-(k as f64) / 0.5).exp()).collect();
        let f = fit_xi(&CorrelationProfile { gamma: 14.0, n, values, xi: None }, None).unwrap();
        assert!((f.value - 0.5).abs() < 1e-10);
        assert!(!f.low_confidence);
        assert_eq!(f.window, Window { lo: 3.0, hi: 8.0 });
    }

    #[test]
    fn rising_profile_is_low_confidence() {
        let n: Vec<usize> = (2..=9).collect();
        let values = vec![0.1, 0.05, 0.06, 0.02, 0.03, 0.01, 0.02, 0.005];
        let f = fit_xi(&CorrelationProfile { gamma: 14.0, n, values, xi: None }, Some(Window { lo: 2.0, hi: 9.0 })).unwrap();
        assert!(f.low_confidence);
    }

    #[test]
    fn fit_errors() {
        let few = [(13.0, -0.1), (13.5, -0.05)];
        assert!(matches!(fit_beta(&few, 13.6, None), Err(Error::TooFewPoints { .. })));
        let neg = [(13.91, 1.0), (13.93, -1.0), (13.95, 0.5), (13.97, 0.2)];
        assert!(matches!(fit_gamma(&neg, 13.9, None), Err(Error::NonPositive { .. })));
        assert!(Window::new(1.0, 1.0).is_err());
    }

    #[test]
    fn synthetic_extrapolation() {
        let pts: Vec<(f64, f64)> = (4..=16).map(|l| (l as f64, 13.845 - 7.0 * (l as f64).powf(-2.4))).collect();
        let f = extrapolate_gc(&pts).unwrap();
        assert!((f.value - 13.845).abs() < 1e-6, "{}", f.value);
        assert!((f.power.unwrap() - 2.4).abs() < 1e-4);
        assert!((f.amplitude - 7.0).abs() < 1e-3);
        assert!(extrapolate_gc(&pts[..3]).is_err());
    }

    #[test]
    fn extrapolation_rejects_wrong_sign() {
        let pts: Vec<(f64, f64)> = (4..=10).map(|l| (l as f64, 13.0 + 5.0 * (l as f64).powf(-1.0))).collect();
        assert!(matches!(extrapolate_gc(&pts), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn two_site_critical_point() {
        let p = ModelParams::dissipative(2, 0.0).unwrap();
        let mut s = CriticalSearch::new(4.0, Solver::dense());
        s.tol = 1e-6;
        let c = find_gamma_c(&p, &s).unwrap();
        assert!((c.gamma_c - 32f64.sqrt()).abs() < 1e-6, "{}", c.gamma_c);
        assert!(c.bracket_width <= 1e-6);
        assert!((c.order_parameter - c.gamma_c).abs() <= 1e-5);
    }

    #[test]
    fn scan_starting_past_the_transition_is_rejected() {
        let p = ModelParams::dissipative(2, 0.0).unwrap();
        let s = CriticalSearch::new(7.0, Solver::dense());
        assert!(matches!(find_gamma_c(&p, &s), Err(Error::Bracket(_))));
    }

    #[test]
    fn two_site_level_crossing() {
        let p = ModelParams::new(2, 1.0, C64::new(0.0, 0.0), crate::Boundary::Periodic).unwrap();
        let g = find_level_crossing(&p, -3.0, -1.0, 1e-9, &Solver::dense()).unwrap();
        assert!((g + 2.0).abs() < 1e-8, "{g}");
    }
}
