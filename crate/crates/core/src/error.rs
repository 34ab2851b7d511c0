use thiserror::Error;

use crate::seqlang::{EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate annulus: inner radius {0} must be positive")]
    DegenerateAnnulus(f64),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("enclosure is not contained in the seed (clearance {0:e})")]
    Containment(f64),

    #[error("point {re}{im:+}i is not inside the domain")]
    Domain { re: f64, im: f64 },

    #[error("branch cut violation in factor {factor}: {detail}")]
    Branch { factor: usize, detail: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("stage {requested} is beyond the horizon {horizon}")]
    Horizon { requested: usize, horizon: usize },

    #[error("{count} pieces exceed the cap of {cap}")]
    Size { count: u128, cap: usize },

    #[error("system assembly failed: {0}")]
    Assembly(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no valid c: {0}")]
    NoValidC(String),

    #[error("degenerate push-forward: outer radius {outer:e} does not exceed inner radius {inner:e}")]
    DegeneratePush { inner: f64, outer: f64 },

    #[error("certificate format: {0}")]
    Format(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl Error {
    /// True for failures of a mathematical hypothesis or a caller-supplied
    /// precondition, as opposed to internal faults.
    pub fn is_hypothesis_failure(&self) -> bool {
        matches!(
            self,
            Error::Hypothesis(_)
                | Error::Precondition(_)
                | Error::NoValidC(_)
                | Error::Assembly(_)
                | Error::Parameter(_)
                | Error::Parse(_)
                | Error::Eval(_)
                | Error::Horizon { .. }
                | Error::Size { .. }
                | Error::Mode(_)
        )
    }
}
