use alloc::boxed::Box;
use alloc::string::String;

use crate::C64;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("site {site} is outside a chain of {len} sites")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("more than one factor acts on site {0}")]
    DuplicateSite(usize),

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix dimension {dim} exceeds the dense ceiling {ceiling}; use the targeted solver")]
    DenseCeiling { dim: usize, ceiling: usize },

    #[error("operator contains non-finite entries")]
    NonFinite,

    #[error("dense factorization failed: {0}")]
    Decomposition(String),

    #[error("iterative eigensolver did not converge: {converged} of {wanted} pairs after {restarts} restarts")]
    NotConverged { converged: usize, wanted: usize, restarts: usize },

    #[error("eigenpair residual {residual:.3e} exceeds bound {bound:.3e}")]
    Residual { residual: f64, bound: f64 },

    #[error("shift-invert needs an assembled operator")]
    ShiftInvertUnavailable,

    #[error("state norm {0} differs from 1")]
    StateNorm(f64),

    #[error("expectation value of a Hermitian operator has imaginary part {0:.3e}")]
    ComplexExpectation(f64),

    #[error("biorthogonal norm {0:.3e} vanishes")]
    VanishingBiorthogonalNorm(f64),

    #[error("empty spectrum")]
    EmptySpectrum,

    #[error("probe field changed the selected branch (overlap {0:.4})")]
    BranchFlip(f64),

    #[error("fit needs at least {needed} usable points, found {found}")]
    TooFewPoints { found: usize, needed: usize },

    #[error("non-positive value {value} at abscissa {at} in fit window")]
    NonPositive { at: f64, value: f64 },

    #[error("extrapolation failed ({reason}); residual norm {normr:.3e}")]
    Extrapolation { reason: String, normr: f64 },

    #[error("critical point search failed: {0}")]
    Bracket(String),

    #[error("spectral ({spectral}) and order-parameter ({order_parameter}) critical points disagree")]
    MethodsDisagree { spectral: f64, order_parameter: f64 },

    #[error("at gamma = {gamma}: {source}")]
    AtGamma { gamma: C64, source: Box<Error> },
}

impl Error {
    /// Attaches the parameter point at which the error occurred.
    pub fn at_gamma(self, gamma: C64) -> Self {
        match self {
            e @ Error::AtGamma { .. } => e,
            e => Error::AtGamma { gamma, source: Box::new(e) },
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
