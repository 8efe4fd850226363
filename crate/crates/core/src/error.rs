use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{lambda0} is not a sum of {n} squares, so it is not an eigenvalue of the Laplacian on T^{n}")]
    EmptyEigenspace { lambda0: u64, n: usize },

    #[error("unsupported evaluation: {0}")]
    UnsupportedEvaluation(String),

    #[error("matrix is not symmetric: |A[{row},{col}] - A[{col},{row}]| = {asymmetry:e}")]
    NotSymmetric {
        row: usize,
        col: usize,
        asymmetry: f64,
    },

    #[error(
        "Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})"
    )]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("first-order corrections are not distinct: branches {cluster:?} lie within {tolerance:e} of each other")]
    DegenerateBranch { cluster: Vec<usize>, tolerance: f64 },

    #[error(
        "basis of {dimension} modes exceeds the cap of {cap}; use a smaller cutoff or dimension"
    )]
    ResourceLimit { dimension: usize, cap: usize },

    #[error("coupling too large at epsilon = {epsilon:e}: eigenvalue {offending} breaks the cluster window of half-width {half_gap} around {lambda0}")]
    CouplingTooLarge {
        epsilon: f64,
        lambda0: u64,
        half_gap: f64,
        offending: f64,
    },

    #[error("unknown reference matrix '{name}': {reason}")]
    UnknownFixture { name: String, reason: String },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
