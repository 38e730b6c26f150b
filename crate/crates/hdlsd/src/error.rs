//! Error type shared by all toolkit modules.

use num_complex::Complex64;
use thiserror::Error;

/// Errors produced by model construction, simulation, spectral computation,
/// and the fixed-point solver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lambda has dimension {got}, family requires {want}")]
    DimensionMismatch { want: usize, got: usize },

    #[error("ARMA(1,1) requires |phi| < 1 for causality, got phi = {phi}")]
    NonCausal { phi: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid taper: {0}")]
    InvalidTaper(String),

    #[error("invalid solver config: {0}")]
    InvalidConfig(String),

    #[error("lag {tau} out of range for path of length {n}")]
    LagOutOfRange { tau: usize, n: usize },

    #[error("simulation size p*(n+q) = {size} exceeds budget {budget}")]
    SizeBudget { size: usize, budget: usize },

    #[error("matrix is not Hermitian: max asymmetry {deviation:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("matrix dimension {p} exceeds eigensolver cap {cap}")]
    DimensionCap { p: usize, cap: usize },

    #[error("eigenvalue iteration failed to converge")]
    EigenFailed,

    #[error("operation requires Im z > 0, got z = {re} + {im}i")]
    UpperHalfPlane { re: f64, im: f64 },

    #[error("aspect ratio c must be positive, got {c}")]
    BadAspectRatio { c: f64 },

    #[error(
        "kernel fixed point did not converge at z = {z} (Im target {v_step:.3e}): \
         residual {residual:.3e} after {iterations} iterations"
    )]
    SolverDiverged {
        z: Complex64,
        v_step: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("kernel grid does not match request: {0}")]
    KernelMismatch(String),

    #[error("evaluation grid is empty")]
    EmptyGrid,

    #[error("density inversion failed at x = {x}: {source}")]
    Inversion {
        x: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("container format: {0}")]
    Container(String),
}

pub type Result<T> = std::result::Result<T, Error>;
