use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure categories shared by every module of the crate.
///
/// The command-line front end maps these onto exit codes, so the grouping
/// (input problems, numeric problems, I/O problems) matters more than the
/// exact variant.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input data is malformed (negative times, non-finite values, rank deficiency).
    #[error("data error: {0}")]
    Data(String),

    /// A closed-form expression has a zero-variance input.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The density is not defined at the requested time.
    #[error("density undefined at t = {t}: point mass located there")]
    UnsupportedPoint { t: f64 },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: estimate {estimate}, error bound {error_bound} (tolerance {tolerance})")]
    Quadrature {
        estimate: f64,
        error_bound: f64,
        tolerance: f64,
    },

    /// A quadrature failure observed while sweeping, annotated with the fraction vector.
    #[error("at fractions {fractions:?}: {source}")]
    AtFraction {
        fractions: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    /// Iterative solver hit its iteration cap.
    #[error("solver did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    Convergence {
        iterations: usize,
        gradient_norm: f64,
        last_iterate: Vec<f64>,
    },

    /// A request would exceed a configured size cap.
    #[error("resource limit: {0}")]
    Resource(String),

    /// Wire-level violation on a harness connection.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// Reassembled payload does not match what was sent.
    #[error("payload integrity failure: {0}")]
    Integrity(String),

    /// An experiment aborted because too many trials failed.
    #[error("experiment aborted: {failed} of {total} trials failed")]
    FailureRate { failed: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for exit codes and reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numeric,
    Io,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Domain(_) | Error::Data(_) | Error::Degenerate(_) | Error::Resource(_) => {
                ErrorClass::Validation
            }
            Error::UnsupportedPoint { .. } | Error::Quadrature { .. } | Error::Convergence { .. } => {
                ErrorClass::Numeric
            }
            Error::AtFraction { source, .. } => source.class(),
            Error::Protocol(_) | Error::Integrity(_) | Error::FailureRate { .. } | Error::Io(_) => {
                ErrorClass::Io
            }
        }
    }

    pub(crate) fn at_fractions(self, fractions: &[f64]) -> Error {
        Error::AtFraction {
            fractions: fractions.to_vec(),
            source: Box::new(self),
        }
    }
}
