//! Eigendecomposition of non-Hermitian operators.
//!
//! [`eig_full`] densifies and diagonalizes everything, [`eig_left`] adds a
//! biorthonormal set of left vectors, and [`eig_targeted`] extracts a few
//! pairs with restarted Arnoldi, optionally in shift-invert mode.

mod arnoldi;
mod dense;
mod targeted;

pub(crate) use dense::singular_values;

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

pub use arnoldi::{FnMap, LinearMap};
pub use targeted::{eig_targeted, ShiftInvert, Target, TargetedOptions};

use crate::operator::SparseOperator;
use crate::{Error, Result, C64};

/// Eigenvalue with its unit right vector and, once [`eig_left`] has run, a
/// unit left vector phased so that `⟨left|right⟩` is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: C64,
    pub right: Vec<C64>,
    pub left: Option<Vec<C64>>,
}

impl EigenPair {
    /// `⟨left|right⟩`, if a left vector is present.
    pub fn biorthogonal_norm(&self) -> Option<C64> {
        self.left.as_ref().map(|l| dot(l, &self.right))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pairs: Vec<EigenPair>,
    dim: usize,
    max_residual: f64,
    residual_bound: f64,
    missing_left: usize,
}

/// Options for [`eig_full`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenseOptions {
    /// Largest dimension diagonalized densely.
    pub ceiling: usize,
    /// Residuals above `residual_tol · ‖H‖_F` flag the spectrum.
    pub residual_tol: f64,
}

impl Default for DenseOptions {
    fn default() -> Self {
        DenseOptions { ceiling: 4096, residual_tol: 1e-9 }
    }
}

/// Residual tolerance used inside the coalescence window of an EP.
pub const RELAXED_RESIDUAL_TOL: f64 = 1e-5;

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub(crate) fn normalize(v: &mut [C64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        let inv = 1.0 / n;
        v.iter_mut().for_each(|x| *x *= inv);
    }
    n
}

/// First index whose magnitude is within a relative `1e-10` of the largest,
/// so near-ties resolve the same way before and after a phase rotation.
fn argmax_abs(v: &[C64]) -> usize {
    let m = v.iter().map(|x| x.norm_sqr()).fold(0.0, f64::max);
    v.iter().position(|x| x.norm_sqr() >= m * (1.0 - 1e-10)).unwrap_or(0)
}

/// Rotates `v` so that its largest-magnitude component is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    if v.is_empty() {
        return;
    }
    let i = argmax_abs(v);
    let r = v[i].norm();
    if r == 0.0 {
        return;
    }
    let f = v[i].conj() / r;
    if f != C64::new(1.0, 0.0) {
        v.iter_mut().for_each(|x| *x *= f);
    }
    v[i] = C64::new(r, 0.0);
}

pub(crate) fn residual(h: &SparseOperator, value: C64, v: &[C64]) -> f64 {
    let mut y = vec![C64::zero(); v.len()];
    h.matvec_unchecked(v, &mut y);
    y.iter().zip(v).map(|(a, b)| (a - value * b).norm_sqr()).sum::<f64>().sqrt()
}

fn order(a: &EigenPair, b: &EigenPair) -> Ordering {
    a.value
        .re
        .total_cmp(&b.value.re)
        .then(a.value.im.total_cmp(&b.value.im))
        .then(argmax_abs(&a.right).cmp(&argmax_abs(&b.right)))
}

impl Spectrum {
    /// Sorts and phase-fixes the pairs; residuals are taken as given.
    pub fn from_pairs(mut pairs: Vec<EigenPair>, dim: usize, max_residual: f64, residual_bound: f64) -> Self {
        for p in &mut pairs {
            fix_phase(&mut p.right);
        }
        pairs.sort_by(order);
        let missing_left = pairs.iter().filter(|p| p.left.is_none()).count();
        Spectrum { pairs, dim, max_residual, residual_bound, missing_left }
    }

    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<EigenPair> {
        self.pairs
    }

    pub fn values(&self) -> Vec<C64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Dimension of the operator the spectrum came from.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_complete(&self) -> bool {
        self.pairs.len() == self.dim
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn residual_bound(&self) -> f64 {
        self.residual_bound
    }

    /// True when some residual exceeded the bound it was computed against.
    pub fn residual_flagged(&self) -> bool {
        self.max_residual > self.residual_bound
    }

    /// Pairs whose left vector could not be determined (defective clusters).
    pub fn missing_left(&self) -> usize {
        self.missing_left
    }

    /// Re-applies the phase convention; a no-op on spectra built here.
    pub fn fix_phases(&mut self) {
        for p in &mut self.pairs {
            fix_phase(&mut p.right);
        }
    }

    /// Index of the eigenvalue closest to `e`.
    pub fn nearest(&self, e: C64) -> Option<usize> {
        (0..self.pairs.len()).min_by(|&i, &j| {
            (self.pairs[i].value - e).norm().total_cmp(&(self.pairs[j].value - e).norm())
        })
    }
}

/// Full dense diagonalization.
///
/// Hermitian input goes through the self-adjoint solver, everything else
/// through the general complex Schur route. Residuals above the bound flag
/// the spectrum instead of failing, since exceptional points are legitimate
/// inputs.
pub fn eig_full(h: &SparseOperator, opts: &DenseOptions) -> Result<Spectrum> {
    let n = h.dim();
    if n > opts.ceiling {
        return Err(Error::DenseCeiling { dim: n, ceiling: opts.ceiling });
    }
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let (values, vectors) = if h.is_hermitian() {
        dense::hermitian_eigen(h)?
    } else {
        dense::general_eigen(h)?
    };
    let mut max_res: f64 = 0.0;
    let mut pairs = Vec::with_capacity(n);
    for (value, mut right) in values.into_iter().zip(vectors) {
        normalize(&mut right);
        max_res = max_res.max(residual(h, value, &right));
        pairs.push(EigenPair { value, right, left: None });
    }
    let bound = opts.residual_tol * h.frobenius_norm().max(1.0);
    Ok(Spectrum::from_pairs(pairs, n, max_res, bound))
}

/// Fills in left eigenvectors from the eigenvectors of `Hᴴ`.
///
/// Eigenvalues are grouped into clusters closer than `1e-8·max(1, ‖H‖_F)`.
/// Each cluster is matched to the same number of conjugated eigenvalues of
/// `Hᴴ` and biorthogonalized as a block, so exact degeneracies are handled.
/// A cluster whose overlap block is singular (a defective eigenvalue) keeps
/// `left = None`.
pub fn eig_left(h: &SparseOperator, spec: &Spectrum) -> Result<Spectrum> {
    if !spec.is_complete() || spec.dim() != h.dim() {
        return Err(Error::param("left vectors need the full spectrum of the same operator"));
    }
    let mut pairs = spec.pairs.clone();
    if h.is_hermitian() {
        for p in &mut pairs {
            p.left = Some(p.right.clone());
        }
        return Ok(Spectrum { pairs, missing_left: 0, ..spec.clone() });
    }
    let adj = h.adjoint();
    let (mu, w) = dense::general_eigen(&adj)?;
    let targets: Vec<C64> = mu.iter().map(|m| m.conj()).collect();
    let tol = 1e-8 * h.frobenius_norm().max(1.0);
    let n = pairs.len();

    let mut cluster_of: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while c[r] != r {
            r = c[r];
        }
        c[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if pairs[j].value.re - pairs[i].value.re > tol {
                break;
            }
            if (pairs[i].value - pairs[j].value).norm() <= tol {
                let (a, b) = (find(&mut cluster_of, i), find(&mut cluster_of, j));
                if a != b {
                    cluster_of[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut cluster_of, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[root_slot[r]].push(i);
    }

    let mut used = vec![false; n];
    for members in &clusters {
        let m = members.len();
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        for &i in members {
            let e = pairs[i].value;
            let best = (0..n)
                .filter(|&j| !used[j] && !chosen.contains(&j))
                .min_by(|&a, &b| (targets[a] - e).norm().total_cmp(&(targets[b] - e).norm()));
            if let Some(j) = best {
                chosen.push(j);
            }
        }
        let close = chosen.len() == m
            && chosen.iter().all(|&j| members.iter().any(|&i| (targets[j] - pairs[i].value).norm() <= tol.max(1e-6)));
        if !close {
            continue;
        }
        for &j in &chosen {
            used[j] = true;
        }
        let rights: Vec<&[C64]> = members.iter().map(|&i| pairs[i].right.as_slice()).collect();
        let lefts: Vec<&[C64]> = chosen.iter().map(|&j| w[j].as_slice()).collect();
        if let Some(block) = dense::biorthogonalize(&lefts, &rights) {
            for (slot, &i) in members.iter().enumerate() {
                let mut l = block[slot].clone();
                normalize(&mut l);
                let s = dot(&l, &pairs[i].right);
                let r = s.norm();
                if r > 0.0 {
                    let f = s / r;
                    l.iter_mut().for_each(|x| *x *= f);
                }
                pairs[i].left = Some(l);
            }
        }
    }
    let missing_left = pairs.iter().filter(|p| p.left.is_none()).count();
    Ok(Spectrum { pairs, missing_left, ..spec.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::model::{build_heff, ModelParams};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn diagonal_input_sorted_with_unit_vectors() {
        let h = SparseOperator::from_diagonal(&[c(3.0, 0.0), c(1.0, 0.0), c(2.0, 0.0), c(0.0, 0.0)]);
        let s = eig_full(&h, &DenseOptions::default()).unwrap();
        let vals: Vec<f64> = s.values().iter().map(|v| v.re).collect();
        assert_eq!(vals, vec![0.0, 1.0, 2.0, 3.0]);
        for (p, basis) in s.pairs().iter().zip([3usize, 1, 2, 0]) {
            for (k, x) in p.right.iter().enumerate() {
                let expect = if k == basis { 1.0 } else { 0.0 };
                assert!((x - c(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn two_site_dissipative_values() {
        let h = build_heff(&ModelParams::dissipative(2, 2.0).unwrap()).unwrap();
        let s = eig_full(&h, &DenseOptions::default()).unwrap();
        let r = 28f64.sqrt() / 4.0;
        let expect = [c(-r, -1.5), c(0.0, -1.0), c(0.0, 0.0), c(r, -1.5)];
        for (got, want) in s.values().iter().zip(expect) {
            assert!((got - want).norm() < 1e-12, "{got} vs {want}");
        }
        assert!((r - 1.32288).abs() < 1e-5);
        assert!(!s.residual_flagged());
    }

    #[test]
    fn ceiling_and_non_finite() {
        let h = SparseOperator::identity(8);
        let opts = DenseOptions { ceiling: 4, ..DenseOptions::default() };
        assert_eq!(eig_full(&h, &opts).unwrap_err(), Error::DenseCeiling { dim: 8, ceiling: 4 });
        let bad = SparseOperator::from_diagonal(&[c(f64::NAN, 0.0), c(1.0, 0.0)]);
        assert_eq!(eig_full(&bad, &DenseOptions::default()).unwrap_err(), Error::NonFinite);
    }

    #[test]
    fn coalescence_at_two_sites() {
        let g = 32f64.sqrt();
        let h = build_heff(&ModelParams::dissipative(2, g).unwrap()).unwrap();
        let s = eig_full(&h, &DenseOptions::default()).unwrap();
        let target = c(0.0, -3.0 * g / 4.0);
        let near: Vec<_> = s.values().into_iter().filter(|v| (v - target).norm() < 1e-6).collect();
        assert_eq!(near.len(), 2);
        assert!((target.im + 4.24264).abs() < 1e-5);
        assert!(s.max_residual() < RELAXED_RESIDUAL_TOL * h.frobenius_norm());
    }

    #[test]
    fn hermitian_left_equals_right() {
        let p = ModelParams::new(4, 1.0, c(0.8, 0.0), crate::Boundary::Periodic).unwrap();
        let h = build_heff(&p).unwrap();
        let s = eig_left(&h, &eig_full(&h, &DenseOptions::default()).unwrap()).unwrap();
        for pair in s.pairs() {
            assert_eq!(pair.left.as_ref().unwrap(), &pair.right);
        }
    }

    #[test]
    fn two_site_biorthogonality() {
        let h = build_heff(&ModelParams::dissipative(2, 2.0).unwrap()).unwrap();
        let s = eig_left(&h, &eig_full(&h, &DenseOptions::default()).unwrap()).unwrap();
        assert_eq!(s.missing_left(), 0);
        for (i, a) in s.pairs().iter().enumerate() {
            for (j, b) in s.pairs().iter().enumerate() {
                let v = dot(a.left.as_ref().unwrap(), &b.right);
                if i != j {
                    assert!(v.norm() < 1e-10);
                } else {
                    assert!(v.re > 0.0 && v.im.abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn phase_fixing_is_idempotent() {
        let h = build_heff(&ModelParams::dissipative(3, 1.3).unwrap()).unwrap();
        let s = eig_full(&h, &DenseOptions::default()).unwrap();
        let mut t = s.clone();
        t.fix_phases();
        assert_eq!(s, t);
    }
}
