use std::path::PathBuf;

/// Errors raised by the gate-construction, calibration and I/O layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("generator is not skew-Hermitian: |G + G^dagger|_F = {deviation:.3e}")]
    NotSkewHermitian { deviation: f64 },

    #[error("operator is not unitary: |U^dagger U - I|_F = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    #[error("detuning |delta|/g = {delta_over_g} exceeds the two-step limit {limit}")]
    DetuningOutOfRange { delta_over_g: f64, limit: f64 },

    #[error("single-step sequence requires gtilde = 0, got gtilde/g = {gtilde_over_g}")]
    UnsupportedCoupling { gtilde_over_g: f64 },

    #[error("fidelity undefined: 1 - |U - target|_F^2 = {radicand:.6} is negative")]
    FidelityUndefined { radicand: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by physically invalid or unsupported parameters.
    pub fn is_domain_error(&self) -> bool {
        matches!(
            self,
            Error::DetuningOutOfRange { .. }
                | Error::UnsupportedCoupling { .. }
                | Error::FidelityUndefined { .. }
                | Error::InvalidArgument(_)
                | Error::NotSkewHermitian { .. }
                | Error::NotUnitary { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
