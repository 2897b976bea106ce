use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The Fock truncation leaves more probability outside the basis than allowed.
    #[error("truncation tail {tail:e} at dim {dim} exceeds {bound:e}; increase the Fock dimension")]
    Truncation { dim: usize, tail: f64, bound: f64 },

    #[error("photon process order k = {0} is not supported (expected 1, 2 or 3)")]
    UnsupportedOrder(u32),

    #[error("mixing angle undefined: E_J = 0 and epsilon = 0")]
    Degenerate,

    #[error("Kraus series needs K > {cap} terms (gamma*t*E^2 up to {mu:.3e}); use the closed form")]
    Convergence { cap: usize, mu: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("projection weight {0:e} onto the two-qubit subspace is negligible")]
    NegligibleSupport(f64),

    #[error("integration step too large: trace drift {drift:e} at t = {t}")]
    Step { drift: f64, t: f64 },

    #[error("invalid parameters: {0}")]
    Validation(String),

    #[error("eigendecomposition failed: {0}")]
    Linalg(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("scenario parse error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// The innermost error, with any context layers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}
