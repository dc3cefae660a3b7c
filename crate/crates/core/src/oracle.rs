//! Exact two-site results.
//!
//! At `L = 2` the vacuum `|↓↓⟩` and the antisymmetric single-flip state
//! decouple, leaving the 2×2 block `[[−Γ/2, √2Ω], [√2Ω, −Γ]]` on
//! (`|sym⟩`, `|↑↑⟩`). Its eigenvalues `−3Γ/4 ± ¼√(32Ω² + Γ²)` hold for any
//! complex `Γ` with the principal square root; for `Γ = iγ` they meet at the
//! exceptional point `γ = √32 Ω`.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::eigen::{eig_full, DenseOptions};
use crate::ground::{linspace, select_ground, GroundStateRecord, TrackerConfig};
use crate::model::{build_heff, Boundary, ModelParams};
use crate::observables::expect_rr;
use crate::operator::{site_sum, PauliKind, SparseOperator};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Solution {
    /// `0`, `−Γ/2`, then the upper and lower members of the coupled pair.
    pub energies: [C64; 4],
    pub ground_index: usize,
    /// Total x-magnetization of the ground state.
    pub mx: f64,
    /// Exceptional point `√32 Ω` on the imaginary axis.
    pub ep: f64,
}

impl L2Solution {
    pub fn ground(&self) -> C64 {
        self.energies[self.ground_index]
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::param("omega must be positive and finite"))
    }
}

/// `Σ_k ⟨σ_x^k⟩` for the coupled-block state with energy `e`, built from the
/// block's first row: amplitudes `(√2Ω, e + Γ/2)` on (`|sym⟩`, `|↑↑⟩`).
fn block_mx(omega: f64, gamma: C64, e: C64) -> f64 {
    let a = 2f64.sqrt() * omega;
    let b = e + gamma / 2.0;
    let norm = a * a + b.norm_sqr();
    if norm == 0.0 {
        return 0.0;
    }
    4.0 * omega * b.re / norm
}

pub fn l2_spectrum(omega: f64, gamma: C64) -> L2Solution {
    let root = (C64::new(32.0 * omega * omega, 0.0) + gamma * gamma).sqrt();
    let energies = [
        C64::new(0.0, 0.0),
        -gamma / 2.0,
        -gamma * 0.75 + root / 4.0,
        -gamma * 0.75 - root / 4.0,
    ];
    // The lower pair member is the ground state until it crosses the vacuum;
    // past the EP it is the lower-Im continuation.
    let ground_index = if energies[3].re > 0.0 { 0 } else { 3 };
    let mx = if ground_index == 0 { 0.0 } else { block_mx(omega, gamma, energies[3]) };
    L2Solution { energies, ground_index, mx, ep: 32f64.sqrt() * omega }
}

/// Ground-state `M^x` at `Γ = iγ` below the EP, written in terms of the
/// ground energy `λ`.
pub fn l2_mx(omega: f64, gamma: f64) -> Result<f64> {
    check_omega(omega)?;
    let ep = 32f64.sqrt() * omega;
    if !(0.0..=ep).contains(&gamma) {
        return Err(Error::param("the closed form holds for 0 <= gamma <= sqrt(32) omega"));
    }
    let lambda = l2_spectrum(omega, C64::new(0.0, gamma)).energies[3];
    let num = -omega * (32.0 * omega * omega - gamma * gamma).sqrt();
    Ok(num / (2.0 * omega * omega + gamma * gamma + lambda.norm_sqr() + 2.0 * gamma * lambda.im))
}

/// Ground-state `M^x` for real `Γ`: nonzero above the level crossing at
/// `−2Ω`, zero (vacuum ground state) below it.
pub fn l2_hermitian_mx(omega: f64, gamma_re: f64) -> Result<f64> {
    check_omega(omega)?;
    if gamma_re <= -2.0 * omega {
        return Ok(0.0);
    }
    let e = l2_spectrum(omega, C64::new(gamma_re, 0.0)).energies[3].re;
    let s = e + gamma_re;
    Ok(4.0 * omega * s / (2.0 * omega * omega + s * s))
}

/// Characteristic polynomial of the two-site matrix at `z`.
pub fn l2_characteristic(omega: f64, gamma: C64, z: C64) -> C64 {
    let block = (-gamma / 2.0 - z) * (-gamma - z) - 2.0 * omega * omega;
    z * (-gamma / 2.0 - z) * block
}

/// Result of one self-check.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub error: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(OracleCheck::passed)
    }
}

/// Builds `H` for a parameter point; swapped out to test the suite itself.
pub type Builder<'a> = &'a dyn Fn(&ModelParams) -> Result<SparseOperator>;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Largest distance from each closed-form eigenvalue to the nearest computed one.
fn spectrum_error(builder: Builder<'_>, p: &ModelParams) -> Result<f64> {
    let spec = eig_full(&builder(p)?, &DenseOptions::default())?;
    let got = spec.values();
    let want = l2_spectrum(p.omega(), p.gamma()).energies;
    Ok(want
        .iter()
        .map(|w| got.iter().map(|g| (g - w).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

fn track(builder: Builder<'_>, base: &ModelParams, gammas: &[C64]) -> Result<Vec<(GroundStateRecord, f64)>> {
    let mx_op = site_sum(PauliKind::X, 2)?;
    let cfg = TrackerConfig::for_omega(base.omega());
    let mut prev: Option<GroundStateRecord> = None;
    let mut out = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let spec = eig_full(&builder(&base.with_gamma(g))?, &DenseOptions::default())?;
        let rec = select_ground(&spec, prev.as_ref(), g, &cfg)?;
        let mx = expect_rr(&rec.state, &mx_op)?;
        prev = Some(rec.clone());
        out.push((rec, mx));
    }
    Ok(out)
}

/// Smallest `γ` at which the ground energy's real part vanishes, by bisection
/// on the dense two-site spectrum.
fn bisect_ep(builder: Builder<'_>, base: &ModelParams, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let eps = TrackerConfig::for_omega(base.omega()).eps_re;
    let below = |g: f64| -> Result<bool> {
        let spec = eig_full(&builder(&base.with_gamma(C64::new(0.0, g)))?, &DenseOptions::default())?;
        Ok(spec.values().iter().any(|e| e.re < -eps))
    };
    if !below(lo)? || below(hi)? {
        return Err(Error::Bracket("exceptional point not bracketed".into()));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if below(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Cross-checks `builder` against the closed forms.
///
/// Spectra and magnetizations are compared at `tolerance`, the EP location at
/// `1e-4`. A dense eigensolver failure is returned as an error; a mismatch is
/// reported as a failed check.
pub fn run_checks(builder: Builder<'_>, tolerance: f64) -> Result<OracleReport> {
    let omega = 1.0;
    let base = ModelParams::new(2, omega, C64::new(0.0, 0.0), Boundary::Periodic)?;
    let mut checks = Vec::new();
    let mut push = |name, error: f64, tolerance| {
        checks.push(OracleCheck { name, error: if error.is_nan() { f64::INFINITY } else { error }, tolerance })
    };

    let mut err: f64 = 0.0;
    for g in linspace(0.0, 10.0, 50) {
        err = err.max(spectrum_error(builder, &base.with_gamma(C64::new(0.0, g)))?);
    }
    push("dissipative spectrum", err, tolerance);

    let mut err: f64 = 0.0;
    for g in linspace(-6.0, 2.0, 50) {
        err = err.max(spectrum_error(builder, &base.with_gamma(C64::new(g, 0.0)))?);
    }
    push("hermitian spectrum", err, tolerance);

    let mut err: f64 = 0.0;
    for g in &[C64::new(0.7, 1.9), C64::new(-1.3, 4.2), C64::new(2.5, 8.0)] {
        let e = spectrum_error(builder, &base.with_gamma(*g))?;
        let sol = l2_spectrum(omega, *g);
        let poly = sol.energies.iter().map(|z| l2_characteristic(omega, *g, *z).norm()).fold(0.0, f64::max);
        err = err.max(e).max(poly);
    }
    push("mixed complex spectrum", err, tolerance);

    let grid: Vec<C64> = linspace(0.0, 5.5, 50).into_iter().map(|g| C64::new(0.0, g)).collect();
    let mut e_err: f64 = 0.0;
    let mut mx_err: f64 = 0.0;
    for (rec, mx) in track(builder, &base, &grid)? {
        e_err = e_err.max((rec.energy - l2_spectrum(omega, rec.gamma).ground()).norm());
        mx_err = mx_err.max((mx - l2_mx(omega, rec.gamma.im)?).abs());
    }
    push("tracked ground energy", e_err, tolerance);
    push("tracked magnetization", mx_err, tolerance);

    let grid: Vec<C64> = linspace(-6.0, 2.0, 50).into_iter().map(|g| C64::new(g, 0.0)).collect();
    let mut mx_err: f64 = 0.0;
    for (rec, mx) in track(builder, &base, &grid)? {
        mx_err = mx_err.max((mx - l2_hermitian_mx(omega, rec.gamma.re)?).abs());
    }
    push("hermitian magnetization", mx_err, tolerance);

    let mut err: f64 = 0.0;
    for g in linspace(0.0, 5.6, 29) {
        let e = l2_spectrum(omega, C64::new(0.0, g)).energies;
        err = err.max((e[2] + e[3].conj()).norm());
    }
    push("pseudo-hermitian pairing", err, tolerance);

    let ep = bisect_ep(builder, &base, 5.0, 6.5, 1e-7)?;
    push("exceptional point", (ep - 32f64.sqrt() * omega).abs(), 1e-4);

    let spec = eig_full(&builder(&base.with_gamma(C64::new(-2.0 * omega, 0.0)))?, &DenseOptions::default())?;
    let v = spec.values();
    push("level crossing at -2 omega", v[0].norm().max(v[1].norm()), tolerance);

    Ok(OracleReport { checks })
}

/// The suite against the crate's own Hamiltonian builder.
pub fn self_check(tolerance: f64) -> Result<OracleReport> {
    run_checks(&build_heff, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::site_sum;

    #[test]
    fn hermitian_point_zero() {
        let s = l2_spectrum(1.0, C64::new(0.0, 0.0));
        let r2 = 2f64.sqrt();
        assert_eq!(s.energies[0], C64::new(0.0, 0.0));
        assert_eq!(s.energies[1], C64::new(0.0, 0.0));
        assert!((s.energies[2].re - r2).abs() < 1e-15);
        assert!((s.ground().re + r2).abs() < 1e-15);
        assert!((s.mx + r2).abs() < 1e-14);
        assert!((l2_mx(1.0, 0.0).unwrap() + r2).abs() < 1e-14);
    }

    #[test]
    fn exceptional_point() {
        let s = l2_spectrum(1.0, C64::new(0.0, 32f64.sqrt()));
        let want = C64::new(0.0, -0.75 * 32f64.sqrt());
        assert!((s.energies[2] - want).norm() < 1e-7);
        assert!((s.energies[3] - want).norm() < 1e-7);
        assert!((want.im + 4.24264).abs() < 1e-5);
        assert!(l2_mx(1.0, 6.0).is_err());
    }

    #[test]
    fn magnetization_at_gamma_four() {
        let s = l2_spectrum(1.0, C64::new(0.0, 4.0));
        assert!((s.ground() - C64::new(-1.0, -3.0)).norm() < 1e-14);
        assert!((l2_mx(1.0, 4.0).unwrap() + 1.0).abs() < 1e-14);
        assert!((s.mx + 1.0).abs() < 1e-14);
        // against the dense 4×4 ground state
        let h = build_heff(&ModelParams::dissipative(2, 4.0).unwrap()).unwrap();
        let spec = eig_full(&h, &DenseOptions::default()).unwrap();
        let i = spec.nearest(C64::new(-1.0, -3.0)).unwrap();
        let mx = expect_rr(&spec.pairs()[i].right, &site_sum(PauliKind::X, 2).unwrap()).unwrap();
        assert!((mx + 1.0).abs() < 1e-12);
    }

    #[test]
    fn magnetization_forms_agree_below_ep() {
        for g in linspace(0.0, 5.65, 40) {
            let a = l2_mx(1.0, g).unwrap();
            let b = l2_spectrum(1.0, C64::new(0.0, g)).mx;
            assert!((a - b).abs() < 1e-12, "gamma {g}: {a} vs {b}");
        }
        let near = l2_mx(1.0, 32f64.sqrt() - 1e-6).unwrap();
        assert!(near.abs() < 1e-2 && near < 0.0);
    }

    #[test]
    fn magnetization_vanishes_past_ep() {
        assert_eq!(l2_spectrum(1.0, C64::new(0.0, 7.0)).mx, 0.0);
    }

    #[test]
    fn hermitian_magnetization_jump() {
        assert_eq!(l2_hermitian_mx(1.0, -3.0).unwrap(), 0.0);
        let just_above = l2_hermitian_mx(1.0, -2.0 + 1e-9).unwrap();
        assert!((just_above + 4.0 / 3.0).abs() < 1e-6);
        let at_zero = l2_hermitian_mx(1.0, 0.0).unwrap();
        assert!((at_zero + 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn level_crossing() {
        let s = l2_spectrum(1.0, C64::new(-2.0, 0.0));
        assert!(s.energies[3].norm() < 1e-15);
        assert_eq!(s.energies[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn characteristic_polynomial_vanishes() {
        for g in [C64::new(0.0, 3.0), C64::new(1.0, -2.0), C64::new(-4.0, 0.5)] {
            for e in l2_spectrum(1.3, g).energies {
                assert!(l2_characteristic(1.3, g, e).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn suite_passes_on_the_real_builder() {
        let report = self_check(DEFAULT_TOLERANCE).unwrap();
        for c in &report.checks {
            assert!(c.passed(), "{} error {:.3e}", c.name, c.error);
        }
    }

    #[test]
    fn suite_catches_a_flipped_dissipative_sign() {
        let broken = |p: &ModelParams| {
            let conj = p.with_gamma(-p.gamma());
            build_heff(&conj)
        };
        let report = run_checks(&broken, DEFAULT_TOLERANCE).unwrap();
        assert!(!report.passed());
    }
}
