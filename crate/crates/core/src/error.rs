use thiserror::Error;

use crate::geometry::QuantityKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("derivative of the {kind} transform is singular at u = 0")]
    Singularity { kind: QuantityKind },

    #[error("pole at t = {t}: observation {index} satisfies z = q(h; t) exactly")]
    Pole { index: usize, t: f64 },

    #[error("no valid observations ({rejected} rejected)")]
    EmptyObservationSet { rejected: usize },

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("input schema: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("quadrature did not converge (estimate {estimate}, error {error})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("root finding did not converge: {0}")]
    RootFinding(String),

    #[error("rejection sampler gave up after {tries} proposals")]
    RejectionFloor { tries: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for bad input, 3 for numerical trouble.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::EmptyObservationSet { .. }
            | Error::InsufficientData { .. }
            | Error::Schema(_)
            | Error::Config(_)
            | Error::Csv(_) => 2,
            Error::Singularity { .. }
            | Error::Pole { .. }
            | Error::Quadrature { .. }
            | Error::RootFinding(_)
            | Error::RejectionFloor { .. } => 3,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
