//! Ground-state observables.
//!
//! Everything here uses the unit right eigenvector (`⟨ψ_R|O|ψ_R⟩`); the
//! biorthogonal `⟨ψ_L|O|ψ_R⟩/⟨ψ_L|ψ_R⟩` is available as a comparison.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::eigen::{dot, norm, singular_values, Spectrum};
use crate::ground::{Rule, Solver, TrackStep};
use crate::model::apply_probe;
use crate::operator::{site_sum, PauliKind, SparseOperator};
use crate::{Error, Result, C64};

/// Allowed deviation of a state's 2-norm from 1.
pub const NORM_TOL: f64 = 1e-8;
/// Largest imaginary part dropped from a Hermitian expectation.
pub const IMAG_TOL: f64 = 1e-10;
/// Eigenvalues of a reduced density matrix below this are exact zeros.
pub const ENTROPY_FLOOR: f64 = 1e-14;
/// Default probe field for the susceptibility.
pub const DEFAULT_PROBE: f64 = 1e-5;
/// A probed state must overlap the unprobed one at least this much.
pub const PROBE_OVERLAP: f64 = 0.9;

fn check_norm(state: &[C64]) -> Result<()> {
    let n = norm(state);
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::StateNorm(n));
    }
    Ok(())
}

fn apply(op: &SparseOperator, state: &[C64]) -> Result<Vec<C64>> {
    let mut y = vec![C64::new(0.0, 0.0); op.dim()];
    op.matvec_into(state, &mut y)?;
    Ok(y)
}

/// `⟨ψ|O|ψ⟩` for a unit state.
pub fn expect_rr_complex(state: &[C64], op: &SparseOperator) -> Result<C64> {
    check_norm(state)?;
    Ok(dot(state, &apply(op, state)?))
}

/// `⟨ψ|O|ψ⟩` for a unit state and Hermitian `O`.
pub fn expect_rr(state: &[C64], op: &SparseOperator) -> Result<f64> {
    let v = expect_rr_complex(state, op)?;
    if v.im.abs() > IMAG_TOL {
        return Err(Error::ComplexExpectation(v.im));
    }
    Ok(v.re)
}

/// `⟨ψ_L|O|ψ_R⟩ / ⟨ψ_L|ψ_R⟩`.
pub fn expect_lr(left: &[C64], right: &[C64], op: &SparseOperator) -> Result<C64> {
    let n = dot(left, right);
    if n.norm() <= 1e-12 {
        return Err(Error::VanishingBiorthogonalNorm(n.norm()));
    }
    Ok(dot(left, &apply(op, right)?) / n)
}

/// Site sums reused across many states of one chain length.
#[derive(Debug, Clone)]
pub struct MagnetizationOps {
    sites: usize,
    x: SparseOperator,
    y: SparseOperator,
    z: SparseOperator,
    n: SparseOperator,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Magnetization {
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    pub nup: f64,
}

impl MagnetizationOps {
    pub fn new(sites: usize) -> Result<Self> {
        Ok(MagnetizationOps {
            sites,
            x: site_sum(PauliKind::X, sites)?,
            y: site_sum(PauliKind::Y, sites)?,
            z: site_sum(PauliKind::Z, sites)?,
            n: site_sum(PauliKind::N, sites)?,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn measure(&self, state: &[C64]) -> Result<Magnetization> {
        Ok(Magnetization {
            mx: expect_rr(state, &self.x)?,
            my: expect_rr(state, &self.y)?,
            mz: expect_rr(state, &self.z)?,
            nup: expect_rr(state, &self.n)?,
        })
    }
}

/// `Σ_k ⟨σ_z^k⟩`, read off the diagonal.
pub fn mz(state: &[C64], sites: usize) -> Result<f64> {
    if state.len() != 1 << sites {
        return Err(Error::DimensionMismatch { left: state.len(), right: 1 << sites });
    }
    check_norm(state)?;
    Ok(state
        .iter()
        .enumerate()
        .map(|(s, a)| a.norm_sqr() * (2.0 * s.count_ones() as f64 - sites as f64))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibility {
    pub chi: f64,
    /// Overlap between the probed and unprobed ground states.
    pub overlap: f64,
    /// Same estimate at half the probe field.
    pub chi_half: Option<f64>,
}

impl Susceptibility {
    pub fn relative_change(&self) -> Option<f64> {
        self.chi_half.map(|h| ((h - self.chi) / self.chi).abs())
    }

    /// Linear response holds when halving the probe changes `χ` by < 5%.
    pub fn converged(&self) -> Option<bool> {
        self.relative_change().map(|r| r < 0.05)
    }
}

fn probed_mz(step: &TrackStep, solver: &Solver, sites: usize, dh: f64) -> Result<(f64, f64)> {
    let h = apply_probe(&step.hamiltonian, dh, sites)?;
    let spec = solver.solve(&h, Some(step.record.energy))?;
    let (best, overlap) = spec
        .pairs()
        .iter()
        .enumerate()
        .map(|(i, p)| (i, dot(&step.record.state, &p.right).norm()))
        .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if overlap < PROBE_OVERLAP {
        return Err(Error::BranchFlip(overlap));
    }
    Ok((mz(&spec.pairs()[best].right, sites)?, overlap))
}

/// `(M^z(δh) − M^z(0)) / (2δh)` at the step's tracked ground state.
///
/// The probed ground state is the probed eigenvector closest to the unprobed
/// one, so the probe cannot silently switch branches.
pub fn susceptibility(step: &TrackStep, solver: &Solver, sites: usize, dh: f64, check_half: bool) -> Result<Susceptibility> {
    if !(dh > 0.0 && dh.is_finite()) {
        return Err(Error::param("probe field must be positive"));
    }
    let m0 = mz(&step.record.state, sites)?;
    let (m1, overlap) = probed_mz(step, solver, sites, dh)?;
    let chi = (m1 - m0) / (2.0 * dh);
    let chi_half = if check_half {
        let (mh, _) = probed_mz(step, solver, sites, dh / 2.0)?;
        Some((mh - m0) / dh)
    } else {
        None
    };
    Ok(Susceptibility { chi, overlap, chi_half })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    pub gamma: f64,
    /// 1-based site offsets `2..=L`.
    pub n: Vec<usize>,
    /// `⟨σ_x^1 σ_x^n⟩ − ⟨σ_x^1⟩⟨σ_x^n⟩`.
    pub values: Vec<f64>,
    pub xi: Option<f64>,
}

fn flip_expect(state: &[C64], mask: usize) -> f64 {
    state.iter().enumerate().map(|(s, a)| (state[s ^ mask].conj() * a).re).sum()
}

/// Connected `σ_x` correlations between the first site and every other one.
pub fn correlation_profile(state: &[C64], sites: usize, gamma: f64) -> Result<CorrelationProfile> {
    if state.len() != 1 << sites {
        return Err(Error::DimensionMismatch { left: state.len(), right: 1 << sites });
    }
    check_norm(state)?;
    let bit = |k: usize| 1usize << (sites - 1 - k);
    let single: Vec<f64> = (0..sites).map(|k| flip_expect(state, bit(k))).collect();
    let mut n = Vec::with_capacity(sites - 1);
    let mut values = Vec::with_capacity(sites - 1);
    for k in 1..sites {
        let pair = flip_expect(state, bit(0) | bit(k));
        n.push(k + 1);
        values.push(pair - single[0] * single[k]);
    }
    Ok(CorrelationProfile { gamma, n, values, xi: None })
}

/// Von Neumann entropy (natural log) of the leading `la` sites.
pub fn entanglement_entropy(state: &[C64], sites: usize, la: usize) -> Result<f64> {
    if la == 0 || la >= sites {
        return Err(Error::param("subsystem must contain between 1 and L-1 sites"));
    }
    if state.len() != 1 << sites {
        return Err(Error::DimensionMismatch { left: state.len(), right: 1 << sites });
    }
    check_norm(state)?;
    // Leading sites are the high bits, so the row-major reshape puts A on rows.
    let (rows, cols) = (1usize << la, 1usize << (sites - la));
    let sv = singular_values(rows, cols, state)?;
    Ok(sv
        .iter()
        .map(|s| s * s)
        .filter(|&p| p > ENTROPY_FLOOR)
        .map(|p| -p * p.ln())
        .sum::<f64>()
        .max(0.0))
}

/// Half-chain partition size, rounding up for odd `L`.
pub fn half_partition(sites: usize) -> usize {
    (sites + 1) / 2
}

/// `min_{n≠0} |E_n − E₀|`; the eigenvalue closest to `e0` is the one excluded.
pub fn energy_gap(spec: &Spectrum, e0: C64) -> Result<f64> {
    if spec.len() < 2 {
        return Err(Error::TooFewPoints { found: spec.len(), needed: 2 });
    }
    let values = spec.values();
    let own = spec.nearest(e0).unwrap_or(0);
    Ok(values
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != own)
        .map(|(_, e)| (e - e0).norm())
        .fold(f64::INFINITY, f64::min))
}

/// Everything reported for one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub gamma: C64,
    pub e0: C64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    pub nup: f64,
    pub chi: Option<f64>,
    pub chi_converged: Option<bool>,
    pub svn_half: f64,
    pub gap: Option<f64>,
    pub rule: Rule,
    pub overlap_prev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureOptions {
    /// Probe field for `χ`; `None` skips it.
    pub probe: Option<f64>,
    pub check_half: bool,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions { probe: Some(DEFAULT_PROBE), check_half: false }
    }
}

pub fn measure(step: &TrackStep, solver: &Solver, ops: &MagnetizationOps, opts: &MeasureOptions) -> Result<ObservableRecord> {
    let rec = &step.record;
    let sites = ops.sites();
    let m = ops.measure(&rec.state)?;
    let chi = opts
        .probe
        .map(|dh| susceptibility(step, solver, sites, dh, opts.check_half))
        .transpose()?;
    let gap = if step.spectrum.len() >= 2 { Some(energy_gap(&step.spectrum, rec.energy)?) } else { None };
    Ok(ObservableRecord {
        gamma: rec.gamma,
        e0: rec.energy,
        mx: m.mx,
        my: m.my,
        mz: m.mz,
        nup: m.nup,
        chi: chi.map(|c| c.chi),
        chi_converged: chi.and_then(|c| c.converged()),
        svn_half: entanglement_entropy(&rec.state, sites, half_partition(sites))?,
        gap,
        rule: rec.rule,
        overlap_prev: rec.overlap_prev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{eig_full, eig_left, DenseOptions, EigenPair};
    use crate::ground::{Axis, Tracker, TrackerConfig};
    use crate::model::{build_heff, ModelParams};
    use crate::oracle::l2_spectrum;
    use crate::Boundary;

    fn basis(dim: usize, i: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[i] = C64::new(1.0, 0.0);
        v
    }

    #[test]
    fn trivial_expectations() {
        let psi = basis(8, 0);
        assert_eq!(expect_rr(&psi, &SparseOperator::identity(8)).unwrap(), 1.0);
        assert_eq!(expect_rr(&psi, &site_sum(PauliKind::N, 3).unwrap()).unwrap(), 0.0);
        assert_eq!(expect_lr(&psi, &psi, &SparseOperator::identity(8)).unwrap(), C64::new(1.0, 0.0));
        let bad = vec![C64::new(0.5, 0.0); 8];
        assert!(matches!(expect_rr(&bad, &SparseOperator::identity(8)), Err(Error::StateNorm(_))));
    }

    #[test]
    fn biorthogonal_norm_guard() {
        let l = basis(4, 0);
        let r = basis(4, 1);
        assert!(matches!(expect_lr(&l, &r, &SparseOperator::identity(4)), Err(Error::VanishingBiorthogonalNorm(_))));
    }

    #[test]
    fn left_right_equals_right_right_for_hermitian_h() {
        let h = build_heff(&ModelParams::new(4, 1.0, C64::new(1.0, 0.0), Boundary::Periodic).unwrap()).unwrap();
        let s = eig_left(&h, &eig_full(&h, &DenseOptions::default()).unwrap()).unwrap();
        let p: &EigenPair = &s.pairs()[0];
        let x = site_sum(PauliKind::X, 4).unwrap();
        let lr = expect_lr(p.left.as_ref().unwrap(), &p.right, &x).unwrap();
        let rr = expect_rr(&p.right, &x).unwrap();
        assert!((lr - C64::new(rr, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn z_and_number_identity() {
        let h = build_heff(&ModelParams::dissipative(5, 3.0).unwrap()).unwrap();
        let s = eig_full(&h, &DenseOptions::default()).unwrap();
        let ops = MagnetizationOps::new(5).unwrap();
        for p in s.pairs().iter().take(6) {
            let m = ops.measure(&p.right).unwrap();
            assert!((m.mz - (2.0 * m.nup - 5.0)).abs() < 1e-10);
            assert!((mz(&p.right, 5).unwrap() - m.mz).abs() < 1e-12);
        }
    }

    #[test]
    fn product_states() {
        let psi = basis(16, 0b1010);
        let prof = correlation_profile(&psi, 4, 1.0).unwrap();
        assert_eq!(prof.n, vec![2, 3, 4]);
        assert!(prof.values.iter().all(|v| *v == 0.0));
        assert_eq!(entanglement_entropy(&psi, 4, 2).unwrap(), 0.0);
        // |+⟩ on every site is a product state too, with ⟨σ_x⟩ = 1
        let plus = vec![C64::new(0.25, 0.0); 16];
        let prof = correlation_profile(&plus, 4, 1.0).unwrap();
        assert!(prof.values.iter().all(|v| v.abs() < 1e-15));
        assert!(entanglement_entropy(&plus, 4, 1).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bell_pair_entropy() {
        let r = 0.5f64.sqrt();
        let psi = vec![C64::new(r, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(r, 0.0)];
        let s = entanglement_entropy(&psi, 2, 1).unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-14);
        assert!(entanglement_entropy(&psi, 2, 0).is_err());
        assert!(entanglement_entropy(&psi, 2, 2).is_err());
    }

    #[test]
    fn entropy_partition_symmetry() {
        let h = build_heff(&ModelParams::dissipative(7, 9.0).unwrap()).unwrap();
        let s = eig_full(&h, &DenseOptions::default()).unwrap();
        let psi = &s.pairs()[0].right;
        for la in 1..7 {
            let a = entanglement_entropy(psi, 7, la).unwrap();
            let b = entanglement_entropy(psi, 7, 7 - la).unwrap();
            assert!((a - b).abs() < 1e-10);
            assert!(a <= la.min(7 - la) as f64 * 2f64.ln() + 1e-12);
        }
        assert_eq!(half_partition(7), 4);
    }

    #[test]
    fn gap_examples() {
        let d = SparseOperator::from_diagonal(&[C64::new(0.0, 0.0), C64::new(3.0, 0.0), C64::new(5.0, 0.0)]);
        let s = eig_full(&d, &DenseOptions::default()).unwrap();
        assert!((energy_gap(&s, C64::new(0.0, 0.0)).unwrap() - 3.0).abs() < 1e-14);
        let h = build_heff(&ModelParams::dissipative(2, 4.0).unwrap()).unwrap();
        let s = eig_full(&h, &DenseOptions::default()).unwrap();
        let e4 = l2_spectrum(1.0, C64::new(0.0, 4.0)).energies[3];
        // E₃ − E₄ = 2 and E₂ = −2i sits at distance √2 from E₄ = −1 − 3i
        assert!((energy_gap(&s, e4).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let one = SparseOperator::from_diagonal(&[C64::new(1.0, 0.0)]);
        assert!(energy_gap(&eig_full(&one, &DenseOptions::default()).unwrap(), C64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn periodic_correlations_are_mirror_symmetric() {
        for l in [4, 6, 7] {
            let h = build_heff(&ModelParams::dissipative(l, 10.0).unwrap()).unwrap();
            let s = eig_full(&h, &DenseOptions::default()).unwrap();
            let prof = correlation_profile(&s.pairs()[0].right, l, 10.0).unwrap();
            // offsets n and L + 2 − n
            for (i, n) in prof.n.iter().enumerate() {
                let m = l + 2 - n;
                let j = prof.n.iter().position(|&k| k == m).unwrap();
                assert!((prof.values[i] - prof.values[j]).abs() < 1e-9, "L {l} n {n}");
            }
        }
    }

    #[test]
    fn susceptibility_converges_in_probe() {
        let p = ModelParams::dissipative(4, 0.0).unwrap();
        let mut tr = Tracker::new(p, Axis::Imaginary { re: 0.0 }, Solver::dense(), TrackerConfig::default());
        for t in [10.0, 12.0] {
            let step = tr.step(t).unwrap();
            let chi = susceptibility(&step, tr.solver(), 4, 1e-4, true).unwrap();
            assert!(chi.chi.is_finite() && chi.chi > 0.0, "chi {}", chi.chi);
            assert_eq!(chi.converged(), Some(true), "{:?}", chi);
            assert!(chi.overlap > 0.999);
        }
    }

    #[test]
    fn measure_fills_record() {
        let p = ModelParams::dissipative(4, 0.0).unwrap();
        let mut tr = Tracker::new(p, Axis::Imaginary { re: 0.0 }, Solver::dense(), TrackerConfig::default());
        let step = tr.step(5.0).unwrap();
        let ops = MagnetizationOps::new(4).unwrap();
        let r = measure(&step, tr.solver(), &ops, &MeasureOptions::default()).unwrap();
        assert!(r.mx < 0.0);
        assert!(r.nup >= 0.0 && r.nup <= 4.0);
        assert!(r.gap.unwrap() > 0.0);
        assert!(r.chi.is_some());
        assert!(r.svn_half >= 0.0 && r.svn_half <= 2.0 * 2f64.ln());
    }
}
