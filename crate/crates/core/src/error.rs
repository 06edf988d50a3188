use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension too large: {0}")]
    DimensionOverflow(String),

    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time grid is not uniform: {0}")]
    NonUniformGrid(String),

    #[error("integration diverged at step {step} (t = {time:.6e})")]
    Divergence { step: usize, time: f64 },

    #[error("simulation of control {index} failed: {source}")]
    ControlFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("system has no output matrix (unlearned system)")]
    Unlearned,

    #[error("ill-conditioned transformation: residual {residual:.3e} exceeds {tolerance:.1e}")]
    IllConditioned { residual: f64, tolerance: f64 },

    #[error("non-nilpotent system: series term {order} has relative norm {norm:.3e}")]
    NonNilpotent { order: usize, norm: f64 },

    #[error("rank-deficient Gramian: effective rank {effective} < requested order {requested}")]
    RankDeficient { effective: usize, requested: usize },

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("quadrature did not converge after {refinements} refinements (last change {change:.3e})")]
    NonConvergence { refinements: usize, change: f64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by input or I/O.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Divergence { .. }
            | Error::IllConditioned { .. }
            | Error::NonNilpotent { .. }
            | Error::RankDeficient { .. }
            | Error::NonConvergence { .. }
            | Error::Invariant(_) => true,
            Error::ControlFailed { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn shape(context: &'static str, expected: impl ToString, got: impl ToString) -> Self {
        Error::ShapeMismatch {
            context,
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
