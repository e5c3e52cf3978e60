use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-finite state at node {node} (t = {time}); {hint}")]
    Explosion {
        node: usize,
        time: f64,
        hint: &'static str,
    },

    #[error("trajectory on substream {substream} failed: {source}")]
    Trajectory {
        substream: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "target is not attainable: residual {residual:e} outside the range of sigma at step {step}"
    )]
    Infeasible { step: usize, residual: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Explosion { .. } | Error::Trajectory { .. } | Error::Infeasible { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}
