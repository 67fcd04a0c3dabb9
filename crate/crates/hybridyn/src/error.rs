//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by state construction, model evaluation and integration.
#[derive(Debug, Error)]
pub enum HybridError {
    #[error("state norm deviates from 1 by {deviation:.3e} (tolerance {tolerance:.1e})")]
    NormViolation { deviation: f64, tolerance: f64 },

    #[error("constraint deviates from 1 by {deviation:.3e} (tolerance {tolerance:.1e})")]
    ConstraintViolation { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian: max asymmetry {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error(
        "fixed-point iteration stalled after {iterations} iterations at t = {time} \
         (residual {residual:.3e})"
    )]
    FixedPointStalled {
        iterations: usize,
        residual: f64,
        time: f64,
    },

    #[error("state left the representable range at t = {time} (step size too large?)")]
    NonFiniteState { time: f64 },

    #[error("ensemble member {member} failed: {source}")]
    MemberFailure {
        member: usize,
        #[source]
        source: Box<HybridError>,
    },

    #[error("ensemble weights must be nonnegative and sum to 1 (sum = {sum})")]
    InvalidWeights { sum: f64 },

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("time series does not cover t = {t}")]
    SeriesOutOfRange { t: f64 },

    #[error("energies E1 = {e1}, E2 = {e2} are too close: perturbative formulas have a pole")]
    DegenerateEnergies { e1: f64, e2: f64 },

    #[error("model does not provide position/momentum matrices")]
    MissingQuadratures,

    #[error("operation {op} requires a {required} model")]
    UnsupportedModel {
        op: &'static str,
        required: &'static str,
    },

    #[error("histogram sample {value} falls outside the bin edges on axis {axis}")]
    HistogramOutOfRange { axis: String, value: f64 },

    #[error("quadrature did not reach the requested tolerance (estimated error {error:.3e})")]
    QuadratureFailure { error: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HybridError>;
