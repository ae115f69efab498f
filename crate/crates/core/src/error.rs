use thiserror::Error;

use crate::qubit::QubitId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("register of {requested} qubits exceeds the configured limit of {limit}")]
    SizeLimit { requested: usize, limit: usize },

    #[error("unknown qubit {0}")]
    UnknownQubit(QubitId),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("outcome has probability {probability:e}; projection is undefined")]
    ImpossibleOutcome { probability: f64 },

    #[error("unsupported composition on qubit {qubit}: {reason}")]
    UnsupportedComposition { qubit: QubitId, reason: String },

    #[error("ring {0} is not active")]
    InactiveRing(QubitId),
}

impl Error {
    /// Stable machine-readable code, used in service error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            Error::SizeLimit { .. } => "size_limit",
            Error::UnknownQubit(_) => "unknown_qubit",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::ImpossibleOutcome { .. } => "impossible_outcome",
            Error::UnsupportedComposition { .. } => "unsupported_composition",
            Error::InactiveRing(_) => "inactive_ring",
        }
    }
}
