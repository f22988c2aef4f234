use thiserror::Error;

/// Errors raised while building chains or computing hitting probabilities.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("duplicate state `{0}`")]
    DuplicateState(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("empty state space")]
    EmptyStateSpace,

    #[error("negative rate {value} from `{from}` to `{to}`")]
    NegativeRate {
        from: String,
        to: String,
        value: f64,
    },

    #[error("duplicate rate from `{from}` to `{to}`")]
    DuplicateRate { from: String, to: String },

    #[error("diagonal entry of `{state}` must be negative and finite, got {value}")]
    InvalidDiagonal { state: String, value: f64 },

    #[error("row `{state}` sums to {sum}, outside tolerance")]
    RowSum { state: String, sum: f64 },

    #[error("non-conservative generator has no defective row")]
    NoDefect,

    #[error("taboo set covers the whole state space")]
    TabooCoversSpace,

    #[error("taboo set must be nonempty")]
    EmptyTaboo,

    #[error("generator is reducible")]
    Reducible,

    #[error("chain is recurrent; Green function is infinite")]
    Recurrent,

    #[error("chain must be transient")]
    NotTransient,

    #[error("taboo Green diverges: {0}")]
    TabooGreenDiverges(String),

    #[error("linear solve residual {residual:e} exceeds {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("{relation} denominator {value:e} is not positive")]
    Denominator { relation: &'static str, value: f64 },

    #[error("probability {value} out of range")]
    OutOfRange { value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// Numerical degeneracies (singular solves, vanishing denominators) as
    /// opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TabooGreenDiverges(_)
                | Error::Residual { .. }
                | Error::Denominator { .. }
                | Error::OutOfRange { .. }
                | Error::Recurrent
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
