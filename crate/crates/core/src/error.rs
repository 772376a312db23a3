use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not in SU(2): unitarity defect {defect:.3e}, det = {det_re:.6}{det_im:+.6}i")]
    NotSpecialUnitary { defect: f64, det_re: f64, det_im: f64 },

    #[error("b_x has no zero crossing for b_x(0) = {bx0} (D = {discriminant:.3e} < 0)")]
    NoSwitch { bx0: f64, discriminant: f64 },

    #[error("inverse-sine argument {value} outside [-1, 1] in {context}")]
    Domain { context: &'static str, value: f64 },

    #[error(
        "no analytic extremal reaches a SWAP-equivalent gate at gamma/omega0 = {ratio:.6} \
         (analytic coverage starts near {coverage})"
    )]
    NoAnalyticSolution { ratio: f64, coverage: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
