//! Exact diagonalization toolkit for the non-Hermitian quantum contact process.
//!
//! The crate builds the coherent contact-process Hamiltonian on a spin-½ chain,
//! adds the dissipative imaginary field that the no-jump Lindblad evolution
//! produces, and follows the ground state through the exceptional point where
//! its energy turns purely imaginary. Observables, critical exponents and
//! finite-size extrapolation sit on top of that tracker.
//!
//! Basis convention: site 0 is the most significant bit of a basis index and a
//! set bit means spin up. `σ_z = diag(-1, +1)` and `n = σ₊σ₋ = diag(0, 1)`.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature; `std` only switches the dense kernels to their SIMD backends.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod criticality;
pub mod eigen;
mod error;
pub mod ground;
pub mod model;
pub mod observables;
pub mod operator;
pub mod oracle;

pub use error::{Error, Result};

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;

pub use eigen::{eig_full, eig_left, eig_targeted, EigenPair, Spectrum};
pub use ground::{select_ground, sweep, Axis, GroundStateRecord, Rule, Solver, SweepTrace, Tracker};
pub use model::{Boundary, ModelParams};
pub use operator::{PauliFactor, PauliKind, PauliString, SiteIndex, SparseOperator};
