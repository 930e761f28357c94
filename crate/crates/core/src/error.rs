use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// `index` is zero-based; the message reports the one-based pivot.
    #[error("matrix is not positive definite: pivot {} is nonpositive ({value:e})", .index + 1)]
    NotPositiveDefinite { index: usize, value: f64 },

    #[error("symmetric eigensolver did not converge within {max_iterations} iterations")]
    EigenNoConvergence { max_iterations: usize },

    #[error("matrix exponential overflow: norm {norm:e} exceeds representable scaling")]
    ExpOverflow { norm: f64 },

    #[error("period map is not a contraction: 1 - exp(-nu*T*mu) = {gap:e} for mode {mode}")]
    NonContraction { mode: usize, gap: f64 },

    #[error("kappa1 = {0} is not below 1")]
    KappaNotContractive(f64),

    #[error("kappa1 cross-check failed: spectral {spectral:e} vs literal {literal:e}")]
    KappaMismatch { spectral: f64, literal: f64 },

    #[error("forcing evaluation failed at x = {x}, t = {t}")]
    ForcingEvaluation { x: f64, t: f64 },

    #[error("load vector evaluation failed at t = {t}")]
    LoadEvaluation { t: f64 },

    #[error("invalid study configuration: {0}")]
    Config(String),

    #[error("study configuration nu = {nu}, beta = {beta}, n = {n}, m = {m} failed: {source}")]
    Study {
        nu: f64,
        beta: f64,
        n: usize,
        m: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
