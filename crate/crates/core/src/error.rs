use thiserror::Error;

pub type Result<T> = std::result::Result<T, AflError>;

#[derive(Debug, Error)]
pub enum AflError {
    #[error("Bessel order {nu} outside the supported range [0, {max}]")]
    UnsupportedOrder { nu: f64, max: f64 },

    #[error("failed to bracket zero number {k} of J_{nu}")]
    ZeroBracketing { nu: f64, k: usize },

    #[error("quadrature did not converge on [{a}, {b}]: achieved relative error {achieved:e}")]
    QuadratureNonConvergence { a: f64, b: f64, achieved: f64 },

    #[error("divergent integral over annulus (mu={mu}, k={k}): {detail}")]
    DivergentIntegral { mu: u32, k: u32, detail: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("index (mu={mu}, k={k}) outside the table (mu_max={mu_max}, k_max={k_max})")]
    IndexOutOfRange {
        mu: u32,
        k: u32,
        mu_max: u32,
        k_max: u32,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("filter bank partition residual {residual:e} exceeds tolerance {tolerance:e}")]
    PartitionResidual { residual: f64, tolerance: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AflError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        AflError::InvalidParameter(msg.into())
    }
}
