//! Spin-½ chain bookkeeping and sparse Pauli-string algebra.
//!
//! Every operator is stored in compressed sparse row form. Construction goes
//! through [`TripletAccumulator`], which sorts and merges duplicates so that
//! identical inputs always produce identical layouts.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use num_traits::Zero;

use crate::{Error, Result, C64};

/// Zero-based site label on a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteIndex(pub usize);

impl SiteIndex {
    pub fn checked(k: usize, len: usize) -> Result<Self> {
        if k < len {
            Ok(SiteIndex(k))
        } else {
            Err(Error::SiteOutOfRange { site: k, len })
        }
    }

    /// Bit position of this site inside a basis index of a chain of `len` sites.
    #[inline]
    pub fn bit(self, len: usize) -> usize {
        len - 1 - self.0
    }
}

impl fmt::Display for SiteIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Single-site operators. `N` is the up-projector `σ₊σ₋`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliKind {
    Id,
    X,
    Y,
    Z,
    Plus,
    Minus,
    N,
}

impl PauliKind {
    /// Image of the single-site basis state `bit` as `(new_bit, amplitude)`,
    /// or `None` when the operator annihilates it.
    #[inline]
    pub fn act(self, bit: u8) -> Option<(u8, C64)> {
        let one = C64::new(1.0, 0.0);
        match (self, bit) {
            (PauliKind::Id, b) => Some((b, one)),
            (PauliKind::X, b) => Some((b ^ 1, one)),
            (PauliKind::Y, 0) => Some((1, C64::new(0.0, -1.0))),
            (PauliKind::Y, _) => Some((0, C64::new(0.0, 1.0))),
            (PauliKind::Z, 0) => Some((0, -one)),
            (PauliKind::Z, _) => Some((1, one)),
            (PauliKind::Plus, 0) => Some((1, one)),
            (PauliKind::Plus, _) => None,
            (PauliKind::Minus, 0) => None,
            (PauliKind::Minus, _) => Some((0, one)),
            (PauliKind::N, 0) => None,
            (PauliKind::N, _) => Some((1, one)),
        }
    }

    /// The 2×2 matrix in the (down, up) basis, row-major.
    pub fn matrix(self) -> [[C64; 2]; 2] {
        let mut m = [[C64::zero(); 2]; 2];
        for col in 0..2u8 {
            if let Some((row, amp)) = self.act(col) {
                m[row as usize][col as usize] = amp;
            }
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliFactor {
    pub kind: PauliKind,
    pub site: SiteIndex,
}

impl PauliFactor {
    pub fn new(kind: PauliKind, site: usize) -> Self {
        PauliFactor { kind, site: SiteIndex(site) }
    }
}

/// Coefficient times a product of single-site factors on distinct sites.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    coefficient: C64,
    factors: Vec<PauliFactor>,
}

impl PauliString {
    /// Sorts the factors by site; two factors on one site are rejected.
    pub fn new(coefficient: C64, factors: impl IntoIterator<Item = PauliFactor>) -> Result<Self> {
        let mut factors: Vec<PauliFactor> = factors.into_iter().collect();
        factors.sort_by_key(|f| f.site);
        for w in factors.windows(2) {
            if w[0].site == w[1].site {
                return Err(Error::DuplicateSite(w[0].site.0));
            }
        }
        Ok(PauliString { coefficient, factors })
    }

    pub fn identity(coefficient: C64) -> Self {
        PauliString { coefficient, factors: Vec::new() }
    }

    pub fn coefficient(&self) -> C64 {
        self.coefficient
    }

    pub fn factors(&self) -> &[PauliFactor] {
        &self.factors
    }

    fn check_sites(&self, len: usize) -> Result<()> {
        match self.factors.last() {
            Some(f) if f.site.0 >= len => Err(Error::SiteOutOfRange { site: f.site.0, len }),
            _ => Ok(()),
        }
    }

    /// Image of basis state `col` as `(row, amplitude)`.
    #[inline]
    fn apply_basis(&self, col: usize, len: usize) -> Option<(usize, C64)> {
        let mut row = col;
        let mut amp = self.coefficient;
        for f in &self.factors {
            let shift = f.site.bit(len);
            let bit = ((row >> shift) & 1) as u8;
            let (nb, a) = f.kind.act(bit)?;
            row = (row & !(1 << shift)) | ((nb as usize) << shift);
            amp *= a;
        }
        Some((row, amp))
    }
}

/// Coordinate-format builder with a canonical sort and duplicate merge.
#[derive(Debug, Clone, Default)]
pub struct TripletAccumulator {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl TripletAccumulator {
    pub fn new(dim: usize) -> Self {
        TripletAccumulator { dim, entries: Vec::new() }
    }

    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        debug_assert!(row < self.dim && col < self.dim);
        self.entries.push((row, col, value));
    }

    /// Entries summing to exactly zero are dropped.
    pub fn build(mut self) -> SparseOperator {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::with_capacity(self.entries.len());
        let mut vals: Vec<C64> = Vec::with_capacity(self.entries.len());
        let mut i = 0;
        while i < self.entries.len() {
            let (r, c, mut v) = self.entries[i];
            i += 1;
            while i < self.entries.len() && self.entries[i].0 == r && self.entries[i].1 == c {
                v += self.entries[i].2;
                i += 1;
            }
            if v != C64::zero() {
                row_ptr[r + 1] += 1;
                cols.push(c);
                vals.push(v);
            }
        }
        for r in 0..self.dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator { dim: self.dim, row_ptr, cols, vals }
    }
}

/// Complex CSR matrix on a `2^L`-dimensional spin space.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

fn space_dim(len: usize) -> Result<usize> {
    if len == 0 || len >= usize::BITS as usize - 1 {
        return Err(Error::param("chain length must be at least 1 and fit a basis index"));
    }
    Ok(1usize << len)
}

/// Operator acting as `factor` on its site and as identity elsewhere.
pub fn embed(factor: PauliFactor, len: usize) -> Result<SparseOperator> {
    assemble(&[PauliString::new(C64::new(1.0, 0.0), [factor])?], len)
}

/// Sum of the given strings on a chain of `len` sites.
pub fn assemble(terms: &[PauliString], len: usize) -> Result<SparseOperator> {
    let dim = space_dim(len)?;
    for t in terms {
        t.check_sites(len)?;
    }
    let mut acc = TripletAccumulator::new(dim);
    for col in 0..dim {
        for t in terms {
            if let Some((row, amp)) = t.apply_basis(col, len) {
                acc.push(row, col, amp);
            }
        }
    }
    Ok(acc.build())
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        SparseOperator { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        let mut acc = TripletAccumulator::new(dim);
        for i in 0..dim {
            acc.push(i, i, C64::new(1.0, 0.0));
        }
        acc.build()
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut acc = TripletAccumulator::new(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            acc.push(i, i, d);
        }
        acc.build()
    }

    /// Builds from a row-major dense matrix, dropping exact zeros.
    pub fn from_dense(dim: usize, data: &[C64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { left: dim * dim, right: data.len() });
        }
        let mut acc = TripletAccumulator::new(dim);
        for r in 0..dim {
            for c in 0..dim {
                acc.push(r, c, data[r * dim + c]);
            }
        }
        Ok(acc.build())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Number of sites if the dimension is a power of two.
    pub fn sites(&self) -> Option<usize> {
        self.dim.is_power_of_two().then(|| self.dim.trailing_zeros() as usize)
    }

    /// Iterates the stored `(row, col, value)` entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |p| (r, self.cols[p], self.vals[p]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.cols[range.clone()].binary_search(&col) {
            Ok(p) => self.vals[range.start + p],
            Err(_) => C64::zero(),
        }
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: x.len().max(y.len()) });
        }
        self.matvec_unchecked(x, y);
        Ok(())
    }

    #[inline]
    pub(crate) fn matvec_unchecked(&self, x: &[C64], y: &mut [C64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = C64::zero();
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[p] * x[self.cols[p]];
            }
            *yr = s;
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        let mut y = vec![C64::zero(); self.dim];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    fn check_dim(&self, other: &SparseOperator) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: other.dim });
        }
        Ok(())
    }

    pub fn add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other)?;
        let mut acc = TripletAccumulator::new(self.dim);
        for (r, c, v) in self.iter().chain(other.iter()) {
            acc.push(r, c, v);
        }
        Ok(acc.build())
    }

    pub fn sub(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> SparseOperator {
        let mut acc = TripletAccumulator::new(self.dim);
        for (r, col, v) in self.iter() {
            acc.push(r, col, c * v);
        }
        acc.build()
    }

    /// Sparse product `self · other`.
    pub fn mul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.check_dim(other)?;
        let mut acc = TripletAccumulator::new(self.dim);
        for (r, k, a) in self.iter() {
            for p in other.row_ptr[k]..other.row_ptr[k + 1] {
                acc.push(r, other.cols[p], a * other.vals[p]);
            }
        }
        Ok(acc.build())
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &SparseOperator) -> Result<SparseOperator> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn adjoint(&self) -> SparseOperator {
        let mut acc = TripletAccumulator::new(self.dim);
        for (r, c, v) in self.iter() {
            acc.push(c, r, v.conj());
        }
        acc.build()
    }

    pub fn transpose(&self) -> SparseOperator {
        let mut acc = TripletAccumulator::new(self.dim);
        for (r, c, v) in self.iter() {
            acc.push(c, r, v);
        }
        acc.build()
    }

    /// Largest entrywise deviation from the conjugate transpose.
    pub fn hermiticity_defect(&self) -> f64 {
        self.iter().map(|(r, c, v)| (v - self.get(c, r).conj()).norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect() <= 1e-14
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.vals.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![C64::zero(); self.dim * self.dim];
        for (r, c, v) in self.iter() {
            out[r * self.dim + c] = v;
        }
        out
    }

    /// True when every off-diagonal entry is exactly zero.
    pub fn is_diagonal(&self) -> bool {
        self.iter().all(|(r, c, _)| r == c)
    }
}

/// `Σ_k kind_k` over all sites.
pub fn site_sum(kind: PauliKind, len: usize) -> Result<SparseOperator> {
    let terms = (0..len)
        .map(|k| PauliString::new(C64::new(1.0, 0.0), [PauliFactor::new(kind, k)]))
        .collect::<Result<Vec<_>>>()?;
    assemble(&terms, len)
}
