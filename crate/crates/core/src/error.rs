use thiserror::Error;

use crate::grid::Dims;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch { expected: Dims, found: Dims },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    /// The multiplier iteration grew without bound, so no multiplier exists
    /// in the complementary subspace.
    #[error("multiplier iteration diverged on subspace {subspace} (norm {norm:e})")]
    EtaDiverged { subspace: usize, norm: f64 },

    #[error("functional is not coercive: {0}")]
    NotCoercive(String),

    #[error("decomposition failed: {0}")]
    Factorization(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dims(expected: Dims, found: Dims) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, found })
    }
}
