//! Error type shared by every module of the engine.

use thiserror::Error;

/// Failures raised by the field, geometry, jet, noise, scheme and ledger layers.
#[derive(Debug, Error)]
pub enum WnsError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has non-zero mean (|mean| = {mean:.3e}, |field| = {norm:.3e})")]
    NonZeroMean { mean: f64, norm: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("window too short: {0}")]
    WindowTooShort(String),
    #[error("unsupported norm kind: {0}")]
    UnsupportedKind(String),
    #[error("matrix outside the admissible ball: |R - Id|_F = {dist:.6} > {radius:.6}")]
    OutOfBall { dist: f64, radius: f64 },
    #[error("unknown direction {0:?}")]
    UnknownDirection([f64; 3]),
    #[error("non-integer period: lambda * r_perp = {0}")]
    NonIntegerPeriod(f64),
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    #[error("invalid jet parameters: {0}")]
    InvalidJetParams(String),
    #[error("field is not divergence free (defect {0:.3e})")]
    NotDivergenceFree(f64),
    #[error("time out of range: {0}")]
    OutOfRange(String),
    #[error("energy constraint violated: {0}")]
    EnergyConstraintViolated(String),
    #[error("initial datum too large: |u0| = {norm:.6} > N = {bound}")]
    DatumTooLarge { norm: f64, bound: f64 },
    #[error("negative energy pumping gamma = {0:.6e}")]
    NegativePumping(f64),
    #[error("inductive bound violated: {0}")]
    BoundViolated(String),
    #[error("seam mismatch {0:.3e}")]
    SeamMismatch(f64),
    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("snapshot format error: {0}")]
    Format(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, WnsError>;
