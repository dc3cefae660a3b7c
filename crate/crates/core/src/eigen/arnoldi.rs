//! Implicitly restarted Arnoldi with exact shifts.

use alloc::vec;
use alloc::vec::Vec;

use faer::Mat;
#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, norm, normalize};
use crate::{Error, Result, C64};

/// Anything that can apply a square matrix to a vector.
pub trait LinearMap {
    fn dim(&self) -> usize;

    /// `y = A x`; both slices have length [`LinearMap::dim`].
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// Factorization of `A − σI` for shift-invert, when the map knows its entries.
    fn shift_invert(&self, _sigma: C64) -> Option<Result<super::ShiftInvert>> {
        None
    }

    /// Frobenius norm, if cheaply known.
    fn frobenius_norm(&self) -> Option<f64> {
        None
    }
}

impl LinearMap for crate::operator::SparseOperator {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.matvec_unchecked(x, y);
    }

    fn shift_invert(&self, sigma: C64) -> Option<Result<super::ShiftInvert>> {
        Some(super::ShiftInvert::new(self, sigma))
    }

    fn frobenius_norm(&self) -> Option<f64> {
        Some(crate::operator::SparseOperator::frobenius_norm(self))
    }
}

/// Matrix-free operator given by a closure.
pub struct FnMap<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[C64], &mut [C64])> FnMap<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnMap { dim, f }
    }
}

impl<F: Fn(&[C64], &mut [C64])> LinearMap for FnMap<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (self.f)(x, y)
    }
}

#[derive(Clone, Copy)]
pub(crate) struct Settings {
    pub wanted: usize,
    pub basis: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

pub(crate) struct RitzPairs {
    pub values: Vec<C64>,
    pub vectors: Vec<Vec<C64>>,
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n)
        .map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    normalize(&mut v);
    v
}

/// Two passes of classical Gram–Schmidt; returns the accumulated coefficients.
pub(crate) fn orthogonalize(basis: &[Vec<C64>], w: &mut [C64]) -> Vec<C64> {
    let mut h = vec![C64::zero(); basis.len()];
    for _ in 0..2 {
        let c: Vec<C64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, ci) in basis.iter().zip(&c) {
            for (x, y) in w.iter_mut().zip(v) {
                *x -= ci * y;
            }
        }
        for (hi, ci) in h.iter_mut().zip(&c) {
            *hi += ci;
        }
    }
    h
}

/// Complex Givens rotation `[c s; −s̄ c]` mapping `(a, b)` to `(r, 0)`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, C64::zero());
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

/// One implicit single-shift QR sweep on the leading `m×m` Hessenberg block,
/// accumulating the rotations into `q`.
fn shifted_qr(h: &mut Mat<C64>, q: &mut Mat<C64>, m: usize, mu: C64) {
    for j in 0..m - 1 {
        let (a, b) = if j == 0 { (h[(0, 0)] - mu, h[(1, 0)]) } else { (h[(j, j - 1)], h[(j + 1, j - 1)]) };
        let (c, s) = givens(a, b);
        let start = j.saturating_sub(1);
        for col in start..m {
            let t1 = h[(j, col)];
            let t2 = h[(j + 1, col)];
            h[(j, col)] = t1 * c + s * t2;
            h[(j + 1, col)] = -s.conj() * t1 + t2 * c;
        }
        let stop = (j + 3).min(m);
        for row in 0..stop {
            let t1 = h[(row, j)];
            let t2 = h[(row, j + 1)];
            h[(row, j)] = t1 * c + s.conj() * t2;
            h[(row, j + 1)] = -s * t1 + t2 * c;
        }
        for row in 0..m {
            let t1 = q[(row, j)];
            let t2 = q[(row, j + 1)];
            q[(row, j)] = t1 * c + s.conj() * t2;
            q[(row, j + 1)] = -s * t1 + t2 * c;
        }
        if j > 0 {
            h[(j + 1, j - 1)] = C64::zero();
        }
    }
}

/// Runs the restarted iteration on `op`, ranking Ritz values by `key`
/// (smaller is more wanted).
pub(crate) fn restarted_arnoldi(
    op: &dyn Fn(&[C64], &mut [C64]),
    n: usize,
    key: &dyn Fn(C64) -> f64,
    s: &Settings,
) -> Result<RitzPairs> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let m = s.basis.min(n).max(s.wanted.min(n));
    let nev = s.wanted.min(m);
    let keep = (nev + (m - nev) / 2).clamp(nev, m.saturating_sub(1).max(nev));

    let mut v: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    v.push(random_unit(&mut rng, n));
    let mut h = Mat::<C64>::zeros(m + 1, m);
    let mut w = vec![C64::zero(); n];
    let mut start = 0;
    let mut restarts = 0;

    loop {
        // Extend the factorization A V_m = V_m H_m + f e_mᵀ.
        for j in start..m {
            op(&v[j], &mut w);
            let coef = orthogonalize(&v[..=j], &mut w);
            for (i, c) in coef.into_iter().enumerate() {
                h[(i, j)] = c;
            }
            let beta = norm(&w);
            let scale = (0..=j).map(|i| h[(i, j)].norm()).fold(0.0, f64::max).max(1e-300);
            let next = if beta > 1e-12 * scale {
                h[(j + 1, j)] = C64::new(beta, 0.0);
                w.iter().map(|x| x / beta).collect()
            } else {
                h[(j + 1, j)] = C64::zero();
                let mut r = random_unit(&mut rng, n);
                orthogonalize(&v[..=j], &mut r);
                normalize(&mut r);
                r
            };
            if v.len() > j + 1 {
                v[j + 1] = next;
            } else {
                v.push(next);
            }
        }
        let beta_m = h[(m, m - 1)].norm();

        let hm = Mat::<C64>::from_fn(m, m, |i, j| h[(i, j)]);
        let (theta, y) = super::dense::square_eigen(&hm)?;
        let mut idx: Vec<usize> = (0..m).collect();
        idx.sort_by(|&a, &b| key(theta[a]).total_cmp(&key(theta[b])).then(a.cmp(&b)));
        let scale = theta.iter().map(|t| t.norm()).fold(0.0, f64::max).max(1e-300);
        let estimate = |i: usize| beta_m * y[i][m - 1].norm() / norm(&y[i]).max(1e-300);
        let converged = idx[..nev].iter().filter(|&&i| estimate(i) <= s.tol * scale).count();

        if converged == nev || m == n {
            let mut values = Vec::with_capacity(nev);
            let mut vectors = Vec::with_capacity(nev);
            for &i in &idx[..nev] {
                let mut x = vec![C64::zero(); n];
                for (k, vk) in v.iter().take(m).enumerate() {
                    let c = y[i][k];
                    for (a, b) in x.iter_mut().zip(vk) {
                        *a += c * b;
                    }
                }
                normalize(&mut x);
                values.push(theta[i]);
                vectors.push(x);
            }
            return Ok(RitzPairs { values, vectors });
        }
        if restarts >= s.max_restarts {
            return Err(Error::NotConverged { converged, wanted: nev, restarts });
        }
        restarts += 1;

        // Filter out the unwanted part with exact shifts.
        let mut hs = Mat::<C64>::from_fn(m, m, |i, j| h[(i, j)]);
        let mut q = Mat::<C64>::identity(m, m);
        for &i in &idx[keep..] {
            shifted_qr(&mut hs, &mut q, m, theta[i]);
        }
        let sub = hs[(keep, keep - 1)];
        let tail = q[(m - 1, keep - 1)] * beta_m;

        let mut vnew: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        for col in 0..=keep {
            let mut x = vec![C64::zero(); n];
            for (k, vk) in v.iter().take(m).enumerate() {
                let c = q[(k, col)];
                if c != C64::zero() {
                    for (a, b) in x.iter_mut().zip(vk) {
                        *a += c * b;
                    }
                }
            }
            vnew.push(x);
        }
        // f = v_keep·H[keep, keep−1] + f_m·Q[m−1, keep−1]
        let mut f: Vec<C64> = vnew[keep].iter().zip(&v[m]).map(|(a, b)| a * sub + b * tail).collect();
        vnew.truncate(keep);
        orthogonalize(&vnew, &mut f);
        let beta = norm(&f);

        h = Mat::<C64>::zeros(m + 1, m);
        for i in 0..keep {
            for j in 0..keep {
                h[(i, j)] = hs[(i, j)];
            }
        }
        let next = if beta > 1e-14 * scale {
            h[(keep, keep - 1)] = C64::new(beta, 0.0);
            f.iter().map(|x| x / beta).collect()
        } else {
            let mut r = random_unit(&mut rng, n);
            orthogonalize(&vnew, &mut r);
            normalize(&mut r);
            r
        };
        vnew.push(next);
        v = vnew;
        start = keep;
    }
}
