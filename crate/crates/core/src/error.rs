use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown domain tag `{0}`")]
    UnknownDomain(String),

    #[error("unknown case tag `{0}`")]
    UnknownCase(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("{kind} id {id} out of range (len {len})")]
    InvalidId {
        kind: &'static str,
        id: usize,
        len: usize,
    },

    #[error("unsupported quadrature degree {degree} (supported 1..={max})")]
    UnsupportedDegree { degree: usize, max: usize },

    #[error("non-finite value while evaluating {what} on {entity} {id}")]
    NonFinite {
        what: &'static str,
        entity: &'static str,
        id: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("viscosity must be positive, got {0}")]
    InvalidViscosity(f64),

    #[error("singular matrix: zero pivot at step {step} of {n}")]
    SingularMatrix { step: usize, n: usize },

    #[error("out of memory while factorising a {n}x{n} matrix")]
    OutOfMemory { n: usize },

    #[error("solver did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("residual {residual:.3e} above tolerance {tol:.3e} after refinement")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("local divergence identity violated on triangle {triangle}: deviation {deviation:.3e} > {tol:.3e}")]
    DivergenceIdentity {
        triangle: usize,
        deviation: f64,
        tol: f64,
    },

    #[error("pressure bound violated: e_p = {e_p:.6e} > sqrt(2)/2 * e_sigma = {bound:.6e}")]
    PressureBound { e_p: f64, bound: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("acceptance assertion failed: {0}")]
    Assertion(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
