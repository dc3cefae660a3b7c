//! Contact-process Hamiltonians.
//!
//! `H₀ = Ω Σ_bonds (σ_x^a n^b + n^a σ_x^b)` flips a spin only next to an up
//! spin. The effective Hamiltonian adds `−(Γ/2) Σ_k n_k` with complex `Γ`:
//! `Γ = iγ` is the pure dissipative case, real `Γ` the Hermitian counterpart.

use alloc::vec::Vec;

use crate::operator::{assemble, site_sum, PauliFactor, PauliKind, PauliString, SparseOperator};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    Open,
}

/// Probe fields above this are outside linear response.
pub const PROBE_WARN: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    sites: usize,
    omega: f64,
    gamma: C64,
    boundary: Boundary,
    probe: f64,
}

impl ModelParams {
    pub fn new(sites: usize, omega: f64, gamma: C64, boundary: Boundary) -> Result<Self> {
        if sites < 2 {
            return Err(Error::param("a chain needs at least 2 sites"));
        }
        if sites > 24 {
            return Err(Error::param("chains longer than 24 sites are not supported"));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::param("omega must be positive and finite"));
        }
        if !(gamma.re.is_finite() && gamma.im.is_finite()) {
            return Err(Error::param("gamma must be finite"));
        }
        Ok(ModelParams { sites, omega, gamma, boundary, probe: 0.0 })
    }

    /// Pure dissipative point `Γ = i·gamma` on a periodic chain with `Ω = 1`.
    pub fn dissipative(sites: usize, gamma: f64) -> Result<Self> {
        Self::new(sites, 1.0, C64::new(0.0, gamma), Boundary::Periodic)
    }

    pub fn with_gamma(mut self, gamma: C64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_probe(mut self, probe: f64) -> Result<Self> {
        if !(probe >= 0.0 && probe.is_finite()) {
            return Err(Error::param("probe field must be non-negative"));
        }
        self.probe = probe;
        Ok(self)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn probe(&self) -> f64 {
        self.probe
    }

    /// True when the probe exceeds the linear-response threshold.
    pub fn probe_too_large(&self) -> bool {
        self.probe > PROBE_WARN
    }

    pub fn dim(&self) -> usize {
        1 << self.sites
    }

    /// Nearest-neighbour bonds. At `L = 2` the periodic wrap would repeat the
    /// single bond, so it is emitted once.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let l = self.sites;
        let mut out: Vec<(usize, usize)> = (0..l - 1).map(|k| (k, k + 1)).collect();
        if self.boundary == Boundary::Periodic && l > 2 {
            out.push((l - 1, 0));
        }
        out
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Coherent part only.
pub fn build_h0(params: &ModelParams) -> Result<SparseOperator> {
    let w = real(params.omega);
    let mut terms = Vec::new();
    for (a, b) in params.bonds() {
        terms.push(PauliString::new(
            w,
            [PauliFactor::new(PauliKind::X, a), PauliFactor::new(PauliKind::N, b)],
        )?);
        terms.push(PauliString::new(
            w,
            [PauliFactor::new(PauliKind::N, a), PauliFactor::new(PauliKind::X, b)],
        )?);
    }
    assemble(&terms, params.sites)
}

/// `H₀ − (Γ/2) Σ n_k`, followed by the probe if one is set.
pub fn build_heff(params: &ModelParams) -> Result<SparseOperator> {
    let h0 = build_h0(params)?;
    let field = -params.gamma / 2.0;
    let h = if field == C64::new(0.0, 0.0) {
        h0
    } else {
        h0.add(&site_sum(PauliKind::N, params.sites)?.scale(field))?
    };
    apply_probe(&h, params.probe, params.sites)
}

/// `H − (δh/2) Σ σ_z^k`.
pub fn apply_probe(h: &SparseOperator, dh: f64, sites: usize) -> Result<SparseOperator> {
    if !(dh >= 0.0 && dh.is_finite()) {
        return Err(Error::param("probe field must be non-negative"));
    }
    if dh == 0.0 {
        return Ok(h.clone());
    }
    let z = site_sum(PauliKind::Z, sites)?;
    if z.dim() != h.dim() {
        return Err(Error::DimensionMismatch { left: h.dim(), right: z.dim() });
    }
    h.add(&z.scale(real(-dh / 2.0)))
}

/// Cyclic translation `T|s_0 … s_{L−1}⟩ = |s_{L−1} s_0 … s_{L−2}⟩`.
pub fn translation(sites: usize) -> Result<SparseOperator> {
    let mut acc = crate::operator::TripletAccumulator::new(1 << sites);
    let mask = (1usize << sites) - 1;
    for s in 0..1usize << sites {
        let t = ((s >> 1) | ((s & 1) << (sites - 1))) & mask;
        acc.push(t, s, real(1.0));
    }
    Ok(acc.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::operator::embed;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// The 4×4 matrix of the two-site model as printed in the literature, in
    /// the ordering |↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩ (reverse of ours).
    fn reference_l2(omega: f64, gamma: f64) -> [[C64; 4]; 4] {
        let w = c(omega, 0.0);
        let z = c(0.0, 0.0);
        [
            [c(0.0, -gamma), w, w, z],
            [w, c(0.0, -gamma / 2.0), z, z],
            [w, z, c(0.0, -gamma / 2.0), z],
            [z, z, z, z],
        ]
    }

    #[test]
    fn two_site_matrix_matches_reference_under_reversed_order() {
        for &g in &[0.0, 2.0, 5.3] {
            let p = ModelParams::dissipative(2, g).unwrap();
            let h = build_heff(&p).unwrap();
            let r = reference_l2(1.0, g);
            for i in 0..4 {
                for j in 0..4 {
                    assert_eq!(h.get(3 - i, 3 - j), r[i][j], "entry ({i},{j}) at gamma {g}");
                }
            }
        }
        let h = build_heff(&ModelParams::dissipative(2, 2.0).unwrap()).unwrap();
        let diag: Vec<C64> = (0..4).map(|i| h.get(i, i)).collect();
        assert_eq!(diag, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, -1.0), c(0.0, -2.0)]);
    }

    #[test]
    fn zero_omega_is_rejected_and_gamma_zero_is_h0() {
        assert!(ModelParams::new(4, 0.0, c(0.0, 1.0), Boundary::Periodic).is_err());
        let p = ModelParams::new(4, 1.0, c(0.0, 0.0), Boundary::Periodic).unwrap();
        assert_eq!(build_heff(&p).unwrap(), build_h0(&p).unwrap());
    }

    #[test]
    fn h0_is_hermitian_and_breaks_polarization() {
        let p = ModelParams::dissipative(4, 3.0).unwrap();
        let h0 = build_h0(&p).unwrap();
        assert!(h0.is_hermitian());
        let z = site_sum(PauliKind::Z, 4).unwrap();
        assert!(h0.commutator(&z).unwrap().frobenius_norm() > 0.0);
    }

    #[test]
    fn bond_lists() {
        let p = ModelParams::dissipative(4, 1.0).unwrap();
        assert_eq!(p.bonds(), vec![(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(p.with_boundary(Boundary::Open).bonds(), vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(ModelParams::dissipative(2, 1.0).unwrap().bonds(), vec![(0, 1)]);
    }

    #[test]
    fn hermitian_level_crossing_at_two_sites() {
        // Γ_re = −2: the symmetric sector has eigenvalues 0 and 3, so zero is doubly degenerate.
        let p = ModelParams::new(2, 1.0, c(-2.0, 0.0), Boundary::Periodic).unwrap();
        let h = build_heff(&p).unwrap();
        assert!(h.is_hermitian());
        // symmetric-sector block [[−Γ/2, √2Ω], [√2Ω, −Γ]] has determinant Γ²/2 − 2Ω² = 0
        let g = p.gamma().re;
        assert!((g * g / 2.0 - 2.0).abs() < 1e-15);
        assert_eq!(h.get(0, 0), c(0.0, 0.0));
    }

    #[test]
    fn probe_conventions() {
        let h = SparseOperator::zeros(2);
        let probed = apply_probe(&h, 0.2, 1).unwrap();
        assert_eq!(probed.get(0, 0), c(0.1, 0.0));
        assert_eq!(probed.get(1, 1), c(-0.1, 0.0));
        let p = ModelParams::new(3, 1.0, c(1.5, 0.0), Boundary::Periodic).unwrap();
        let h = build_heff(&p).unwrap();
        assert_eq!(apply_probe(&h, 0.0, 3).unwrap(), h);
        assert!(apply_probe(&h, 1e-3, 3).unwrap().is_hermitian());
        assert!(p.with_probe(0.5).unwrap().probe_too_large());
    }

    #[test]
    fn dissipative_part_is_diagonal_number_count() {
        let p = ModelParams::new(4, 1.0, c(0.7, 2.3), Boundary::Periodic).unwrap();
        let diff = build_heff(&p).unwrap().sub(&build_h0(&p).unwrap()).unwrap();
        assert!(diff.is_diagonal());
        for s in 0..16usize {
            let ups = s.count_ones() as f64;
            assert_eq!(diff.get(s, s), -p.gamma() / 2.0 * ups);
        }
    }

    #[test]
    fn anti_hermitian_part() {
        let p = ModelParams::dissipative(3, 1.8).unwrap();
        let h = build_heff(&p).unwrap();
        let anti = h.sub(&h.adjoint()).unwrap().scale(c(0.5, 0.0));
        let z = site_sum(PauliKind::Z, 3).unwrap();
        let expect = z.add(&SparseOperator::identity(8).scale(c(3.0, 0.0))).unwrap().scale(c(0.0, -1.8 / 4.0));
        assert!(anti.sub(&expect).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn periodic_chain_is_translation_invariant() {
        for l in 3..=8 {
            let p = ModelParams::dissipative(l, 2.0).unwrap();
            let h = build_heff(&p).unwrap();
            let t = translation(l).unwrap();
            assert_eq!(h.commutator(&t).unwrap().nnz(), 0, "L = {l}");
            let open = build_heff(&p.with_boundary(Boundary::Open)).unwrap();
            assert!(open.commutator(&t).unwrap().nnz() > 0);
        }
        let n0 = embed(PauliFactor::new(PauliKind::N, 0), 3).unwrap();
        let t = translation(3).unwrap();
        let shifted = t.mul(&n0).unwrap().mul(&t.adjoint()).unwrap();
        assert_eq!(shifted, embed(PauliFactor::new(PauliKind::N, 1), 3).unwrap());
    }
}
