use thiserror::Error;

/// Errors raised anywhere in the stability pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("duplicate bus id {0:?}")]
    DuplicateBus(String),

    #[error("line {line} has dangling endpoint {bus:?}")]
    DanglingEndpoint { line: usize, bus: String },

    #[error("line {line} connects bus {bus:?} to itself")]
    SelfLoop { line: usize, bus: String },

    #[error("line {line} has nonpositive reactance x = {x}")]
    NonPositiveReactance { line: usize, x: f64 },

    #[error("line {line} has negative resistance r = {r}")]
    NegativeResistance { line: usize, r: f64 },

    #[error("network is disconnected; unreachable buses: {0:?}")]
    Disconnected(Vec<String>),

    #[error("load bus {0:?} has no entry in the loads map")]
    MissingLoad(String),

    #[error("bus {bus:?} of kind {kind} may not carry a load")]
    UnexpectedLoad { bus: String, kind: &'static str },

    #[error("load at bus {bus:?} is invalid: {reason}")]
    InvalidLoad { bus: String, reason: String },

    #[error("eliminated block is singular; isolated nodes: {0:?}")]
    SingularEliminatedBlock(Vec<String>),

    #[error("R/X ratio is not uniform across lines (spread {spread:.3e}): {ratios:?}")]
    NonUniformRho { spread: f64, ratios: Vec<f64> },

    #[error("reduced network has no uniform R/X ratio")]
    RhoUndefined,

    #[error("virtual buses {0:?} must be Kron-reduced before assembling the full model")]
    VirtualBusPresent(Vec<String>),

    #[error("network has no inverter buses")]
    NoInverters,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid droop gains: {0}")]
    InvalidDroop(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("eigensolver did not converge for a {dim}x{dim} matrix (max |a_ij| = {max_abs:.3e})")]
    EigenNoConvergence { dim: usize, max_abs: f64 },

    #[error("no finite threshold below mu = {limit} for rho = {rho}, k = {k}")]
    NoFiniteThreshold { rho: f64, k: f64, limit: f64 },

    #[error("unbounded region: the reduced network has no positive eigenvalue")]
    UnboundedRegion,

    #[error("zero diagonal in the reduced network at inverter {0:?}")]
    ZeroDiagonal(String),

    #[error("no verdict change in droop bracket [{lo}, {hi}] at k = {k}")]
    NoSignChange { k: f64, lo: f64, hi: f64 },

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
