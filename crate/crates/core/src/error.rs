use thiserror::Error;

/// Errors raised by the scattering, transfer-matrix, band and disorder routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rate `{field}` must be non-negative, got {value}")]
    NegativeRate { field: &'static str, value: f64 },

    #[error("waveguide rate Γ must be strictly positive, got {0}")]
    NonPositiveUnit(f64),

    #[error("parameter `{field}` must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },

    #[error("cooperativity needs κ > 0 and γ > 0 (κ = {kappa}, γ = {gamma})")]
    DivisionByZeroRate { kappa: f64, gamma: f64 },

    #[error("scattering denominator vanishes at Δ = {delta} (|D| = {magnitude:e})")]
    DegenerateDenominator { delta: f64, magnitude: f64 },

    #[error("closed form precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("transport equations are singular at Δ = {delta}")]
    SingularSystem { delta: f64 },

    #[error("detuning window [{lo}, {hi}] is empty or not finite")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("grid needs at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },

    #[error("Rabi splitting prediction needs 2g² > Γ² (g = {g}, Γ = {big_gamma})")]
    SubcriticalCoupling { g: f64, big_gamma: f64 },

    #[error("site transmission |t| = {magnitude:e} is too small for a transfer matrix")]
    ZeroTransmission { magnitude: f64 },

    #[error("cannot cascade an empty chain of blocks")]
    EmptyChain,

    #[error("total transfer matrix has |m22| = {magnitude:e}; extraction is singular")]
    SingularExtraction { magnitude: f64 },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("Bloch analysis requires lossless parameters (κ = {kappa}, γ = {gamma})")]
    LossyParams { kappa: f64, gamma: f64 },

    #[error("𝒜² + ℬ² = {0:e} is degenerate")]
    DegenerateAbcd(f64),

    #[error("invalid disorder specification: {0}")]
    InvalidDisorder(String),

    #[error("site {site} could not be placed after {attempts} ordered draws")]
    OrderingUnsatisfiable { site: usize, attempts: usize },

    #[error("positions must be strictly increasing (x[{index}] = {value} after {previous})")]
    NonIncreasingPositions {
        index: usize,
        value: f64,
        previous: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
