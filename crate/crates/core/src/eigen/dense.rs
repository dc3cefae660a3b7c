//! Thin wrappers around faer's dense kernels.

use alloc::format;
use alloc::vec::Vec;

use faer::linalg::solvers::{DenseSolveCore, PartialPivLu, Solve};
use faer::{Mat, Side};

use crate::operator::SparseOperator;
use crate::{Error, Result, C64};

pub(crate) fn to_faer(h: &SparseOperator) -> Mat<C64> {
    let n = h.dim();
    let mut m = Mat::<C64>::zeros(n, n);
    for (r, c, v) in h.iter() {
        m[(r, c)] = v;
    }
    m
}

fn columns(u: faer::MatRef<'_, C64>) -> Vec<Vec<C64>> {
    (0..u.ncols()).map(|j| (0..u.nrows()).map(|i| u[(i, j)]).collect()).collect()
}

pub(crate) fn hermitian_eigen(h: &SparseOperator) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let m = to_faer(h);
    let e = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let values = e.S().column_vector().iter().map(|v| C64::new(v.re, 0.0)).collect();
    Ok((values, columns(e.U())))
}

pub(crate) fn general_eigen(h: &SparseOperator) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let m = to_faer(h);
    square_eigen(&m)
}

pub(crate) fn square_eigen(m: &Mat<C64>) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let e = m.eigen().map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let values = e.S().column_vector().iter().copied().collect();
    Ok((values, columns(e.U())))
}

/// Dual basis `L' = L M^{-H}` with `M = Lᴴ R`, so that `L'ᴴ R = I`.
/// Returns `None` when `M` is numerically singular.
pub(crate) fn biorthogonalize(lefts: &[&[C64]], rights: &[&[C64]]) -> Option<Vec<Vec<C64>>> {
    let m = lefts.len();
    let n = rights.first().map_or(0, |r| r.len());
    let mut block = Mat::<C64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            block[(i, j)] = super::dot(lefts[i], rights[j]);
        }
    }
    let sv = block.singular_values().ok()?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if !(smax > 0.0) || smin < 1e-10 * smax.max(1.0) {
        return None;
    }
    // L' = L (M^{-1})ᴴ, i.e. column k of L' is Σ_i l_i conj(M^{-1}[k, i]).
    let inv = block.partial_piv_lu().inverse();
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let mut v = alloc::vec![C64::new(0.0, 0.0); n];
        for (i, l) in lefts.iter().enumerate() {
            let coef = inv[(k, i)].conj();
            for (x, y) in v.iter_mut().zip(l.iter()) {
                *x += coef * y;
            }
        }
        out.push(v);
    }
    Some(out)
}

/// Dense LU of `H − σI`.
pub(crate) struct ShiftedLu {
    lu: PartialPivLu<C64>,
}

impl ShiftedLu {
    pub(crate) fn new(h: &SparseOperator, sigma: C64) -> Result<Self> {
        let mut m = to_faer(h);
        for i in 0..h.dim() {
            m[(i, i)] -= sigma;
        }
        Ok(ShiftedLu { lu: m.partial_piv_lu() })
    }

    pub(crate) fn solve(&self, x: &[C64], y: &mut [C64]) {
        let mut rhs = Mat::<C64>::from_fn(x.len(), 1, |i, _| x[i]);
        self.lu.solve_in_place(rhs.as_mut());
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = rhs[(i, 0)];
        }
    }
}

/// Singular values of a row-major `rows × cols` block, largest first.
pub(crate) fn singular_values(rows: usize, cols: usize, data: &[C64]) -> Result<Vec<f64>> {
    let m = Mat::<C64>::from_fn(rows, cols, |i, j| data[i * cols + j]);
    m.singular_values().map_err(|e| Error::Decomposition(format!("{e:?}")))
}
