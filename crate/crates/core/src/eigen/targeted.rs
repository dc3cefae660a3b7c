use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::arnoldi::{orthogonalize, restarted_arnoldi, LinearMap, RitzPairs, Settings};
use super::dense::ShiftedLu;
use super::{dot, norm, normalize, EigenPair, Spectrum, RELAXED_RESIDUAL_TOL};
use crate::operator::SparseOperator;
use crate::{Error, Result, C64};

/// Which part of the spectrum [`eig_targeted`] extracts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Smallest real parts, from Arnoldi on `H` itself.
    SmallestReal,
    /// Closest to the shift, from Arnoldi on `(H − σI)⁻¹`.
    Nearest(C64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetedOptions {
    /// Krylov basis size; raised to at least `2k + 1`.
    pub basis: usize,
    pub max_restarts: usize,
    /// Ritz estimate tolerance relative to the largest Ritz value.
    pub tol: f64,
    /// Residual bound relative to `‖H‖_F`.
    pub residual_tol: f64,
    /// Pairs closer than this to another returned eigenvalue are treated as
    /// sitting in an EP coalescence window and use the relaxed residual bound.
    pub coalescence_window: f64,
    /// Largest dimension for the dense shift-invert factorization.
    pub lu_ceiling: usize,
    pub seed: u64,
    /// Rerun the iteration with the found eigenvectors deflated, so that a
    /// second copy of a degenerate eigenvalue is not missed.
    pub deflation_pass: bool,
}

impl Default for TargetedOptions {
    fn default() -> Self {
        TargetedOptions {
            basis: 30,
            max_restarts: 2000,
            tol: 1e-12,
            residual_tol: 1e-8,
            coalescence_window: 1e-2,
            lu_ceiling: 8192,
            seed: 0x5eed,
            deflation_pass: true,
        }
    }
}

/// `(H − σI)⁻¹` through a dense LU factorization.
pub struct ShiftInvert {
    sigma: C64,
    lu: ShiftedLu,
    dim: usize,
}

impl ShiftInvert {
    pub fn new(h: &SparseOperator, sigma: C64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(ShiftInvert { sigma, lu: ShiftedLu::new(h, sigma)?, dim: h.dim() })
    }

    pub fn sigma(&self) -> C64 {
        self.sigma
    }
}

impl LinearMap for ShiftInvert {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.lu.solve(x, y);
    }
}

/// Stochastic estimate of `‖A‖_F` from a few random probes.
fn estimate_frobenius<A: LinearMap + ?Sized>(a: &A, seed: u64) -> f64 {
    let n = a.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf70b);
    let probes = 6;
    let mut y = vec![C64::zero(); n];
    let mut acc = 0.0;
    for _ in 0..probes {
        let x: Vec<C64> = (0..n).map(|_| C64::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0)).collect();
        a.apply(&x, &mut y);
        acc += y.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    (acc / probes as f64).sqrt()
}

/// Orthonormal basis of the span of `vectors`, dropping near-dependent ones.
fn orthonormal_basis(vectors: impl IntoIterator<Item = Vec<C64>>) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for mut v in vectors {
        let before = norm(&v);
        orthogonalize(&basis, &mut v);
        if norm(&v) > 1e-8 * before {
            normalize(&mut v);
            basis.push(v);
        }
    }
    basis
}

/// Second iteration on `A(I − QQᴴ) + c·QQᴴ`, where `Q` spans the first
/// result. On the complement of `Q` this acts like `A`, while the found block
/// moves to `c`, so another copy of a degenerate eigenvalue becomes visible.
/// Both results then go through Rayleigh–Ritz on `A` over the joint span,
/// which is invariant up to the convergence tolerance.
fn deflation_pass(
    op: &dyn Fn(&[C64], &mut [C64]),
    n: usize,
    key: &dyn Fn(C64) -> f64,
    s: &Settings,
    first: RitzPairs,
    c: C64,
) -> Result<RitzPairs> {
    let q = orthonormal_basis(first.vectors.iter().cloned());
    if q.len() + s.wanted > n {
        return Ok(first);
    }
    let deflated = |x: &[C64], y: &mut [C64]| {
        let coef: Vec<C64> = q.iter().map(|v| dot(v, x)).collect();
        let mut px = x.to_vec();
        for (v, ci) in q.iter().zip(&coef) {
            px.iter_mut().zip(v).for_each(|(a, b)| *a -= ci * b);
        }
        op(&px, y);
        for (v, ci) in q.iter().zip(&coef) {
            y.iter_mut().zip(v).for_each(|(a, b)| *a += c * ci * b);
        }
    };
    let settings = Settings { seed: s.seed ^ 0xdef1a7e, ..*s };
    let Ok(second) = restarted_arnoldi(&deflated, n, key, &settings) else {
        // the first result stands on its own
        return Ok(first);
    };
    let w = orthonormal_basis(q.into_iter().chain(second.vectors));
    let r = w.len();
    let mut aw = vec![C64::zero(); n];
    let mut g = faer::Mat::<C64>::zeros(r, r);
    for (j, wj) in w.iter().enumerate() {
        op(wj, &mut aw);
        for (i, wi) in w.iter().enumerate() {
            g[(i, j)] = dot(wi, &aw);
        }
    }
    let (theta, y) = super::dense::square_eigen(&g)?;
    let mut idx: Vec<usize> = (0..r).collect();
    idx.sort_by(|&a, &b| key(theta[a]).total_cmp(&key(theta[b])).then(a.cmp(&b)));
    let mut values = Vec::with_capacity(s.wanted);
    let mut vectors = Vec::with_capacity(s.wanted);
    for &i in idx.iter().take(s.wanted) {
        let mut x = vec![C64::zero(); n];
        for (k, wk) in w.iter().enumerate() {
            x.iter_mut().zip(wk).for_each(|(a, b)| *a += y[i][k] * b);
        }
        normalize(&mut x);
        values.push(theta[i]);
        vectors.push(x);
    }
    Ok(RitzPairs { values, vectors })
}

/// A few eigenpairs of `h` from restarted Arnoldi.
///
/// Every returned pair is checked against the original operator: a residual
/// above `residual_tol·‖H‖_F` (or the relaxed bound inside a coalescence
/// window) is an error, as is running out of restarts.
pub fn eig_targeted<A: LinearMap + ?Sized>(h: &A, k: usize, target: Target, opts: &TargetedOptions) -> Result<Spectrum> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(Error::param("requested pair count must be between 1 and the dimension"));
    }
    let settings = Settings {
        wanted: k,
        basis: opts.basis.max(2 * k + 1),
        tol: opts.tol,
        max_restarts: opts.max_restarts,
        seed: opts.seed,
    };
    let hnorm = h.frobenius_norm().unwrap_or_else(|| estimate_frobenius(h, opts.seed)).max(1.0);

    let (values, vectors) = match target {
        Target::SmallestReal => {
            let op = |x: &[C64], y: &mut [C64]| h.apply(x, y);
            let key = |t: C64| t.re;
            let mut ritz = restarted_arnoldi(&op, n, &key, &settings)?;
            if opts.deflation_pass {
                // push the found block far to the right of the spectrum
                ritz = deflation_pass(&op, n, &key, &settings, ritz, C64::new(3.0 * hnorm, 0.0))?;
            }
            (ritz.values, ritz.vectors)
        }
        Target::Nearest(sigma) => {
            if n > opts.lu_ceiling {
                return Err(Error::DenseCeiling { dim: n, ceiling: opts.lu_ceiling });
            }
            let si = h.shift_invert(sigma).ok_or(Error::ShiftInvertUnavailable)??;
            let op = |x: &[C64], y: &mut [C64]| si.apply(x, y);
            let key = |t: C64| -t.norm();
            let mut ritz = restarted_arnoldi(&op, n, &key, &settings)?;
            if opts.deflation_pass {
                // the found block maps to zero, the least wanted magnitude
                ritz = deflation_pass(&op, n, &key, &settings, ritz, C64::zero())?;
            }
            let values = ritz.values.iter().map(|t| sigma + t.inv()).collect();
            (values, ritz.vectors)
        }
    };

    let mut pairs = Vec::with_capacity(values.len());
    let mut y = vec![C64::zero(); n];
    let mut max_res: f64 = 0.0;
    let strict = opts.residual_tol * hnorm;
    let relaxed = RELAXED_RESIDUAL_TOL * hnorm;
    for (i, (value, right)) in values.iter().zip(vectors).enumerate() {
        h.apply(&right, &mut y);
        let res = norm(&y.iter().zip(&right).map(|(a, b)| a - value * b).collect::<Vec<_>>());
        let coalesced = values
            .iter()
            .enumerate()
            .any(|(j, w)| j != i && (w - value).norm() < opts.coalescence_window);
        let bound = if coalesced { relaxed } else { strict };
        if !(res <= bound) {
            return Err(Error::Residual { residual: res, bound });
        }
        max_res = max_res.max(res);
        pairs.push(EigenPair { value: *value, right, left: None });
    }
    Ok(Spectrum::from_pairs(pairs, n, max_res, strict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{eig_full, DenseOptions, FnMap};
    use crate::model::{build_heff, ModelParams};

    #[test]
    fn smallest_real_part_matches_dense_small_chain() {
        let h = build_heff(&ModelParams::dissipative(4, 5.0).unwrap()).unwrap();
        let full = eig_full(&h, &DenseOptions::default()).unwrap();
        let part = eig_targeted(&h, 2, Target::SmallestReal, &TargetedOptions::default()).unwrap();
        assert!((part.values()[0] - full.values()[0]).norm() < 1e-9);
    }

    #[test]
    fn shift_invert_finds_nearest() {
        let h = build_heff(&ModelParams::dissipative(6, 9.0).unwrap()).unwrap();
        let full = eig_full(&h, &DenseOptions::default()).unwrap();
        let sigma = C64::new(-0.3, -4.0);
        let part = eig_targeted(&h, 3, Target::Nearest(sigma), &TargetedOptions::default()).unwrap();
        let mut want = full.values();
        want.sort_by(|a, b| (a - sigma).norm().total_cmp(&(b - sigma).norm()));
        for w in &want[..3] {
            assert!(part.values().iter().any(|v| (v - w).norm() < 1e-9), "missing {w}");
        }
    }

    #[test]
    fn closures_cannot_shift_invert() {
        let h = build_heff(&ModelParams::dissipative(3, 1.0).unwrap()).unwrap();
        let map = FnMap::new(8, |x: &[C64], y: &mut [C64]| h.matvec_into(x, y).unwrap());
        let err = eig_targeted(&map, 1, Target::Nearest(C64::new(0.0, 0.0)), &TargetedOptions::default());
        assert_eq!(err.unwrap_err(), Error::ShiftInvertUnavailable);
        let ok = eig_targeted(&map, 1, Target::SmallestReal, &TargetedOptions::default()).unwrap();
        let full = eig_full(&h, &DenseOptions::default()).unwrap();
        assert!((ok.values()[0] - full.values()[0]).norm() < 1e-9);
    }

    #[test]
    fn zero_pairs_rejected() {
        let h = SparseOperator::identity(4);
        assert!(eig_targeted(&h, 0, Target::SmallestReal, &TargetedOptions::default()).is_err());
    }
}
