use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("boundary trace is not a multiple of the base form (entry {row},{col}: {found} vs {expected})")]
    ProportionalityViolation {
        row: usize,
        col: usize,
        found: String,
        expected: String,
    },

    #[error("interior block is singular")]
    SingularInterior,

    #[error("eigen relation violated: {0}")]
    EigenrelationViolation(String),

    #[error("word budget exceeded: {count} words > budget {budget}")]
    BudgetExceeded { count: usize, budget: usize },

    #[error("inadmissible word {word}: {reason}")]
    InadmissibleWord { word: String, reason: String },

    #[error("network is disconnected")]
    DisconnectedNetwork,

    #[error("boundary set is empty")]
    EmptyBoundary,

    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),

    #[error("harmonic pair is dependent modulo constants")]
    DegeneratePair,

    #[error("no N <= {max_n} reaches the bound; best worst-case ratio {best}")]
    NotFound { max_n: usize, best: f64 },

    #[error("invalid vertex: {0}")]
    InvalidVertex(String),

    #[error("inner set is empty")]
    EmptyInnerSet,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("semantic error: {0}")]
    Semantic(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the failure comes from the input rather than the numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::BudgetExceeded { .. }
                | Error::InadmissibleWord { .. }
                | Error::EmptyBoundary
                | Error::DegenerateBasis(_)
                | Error::DegeneratePair
                | Error::InvalidVertex(_)
                | Error::EmptyInnerSet
                | Error::Parse(_)
                | Error::Semantic(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
