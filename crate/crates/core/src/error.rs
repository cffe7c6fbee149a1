use thiserror::Error;

/// What went wrong while parsing a CSV row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    MalformedDate(String),
    NonNumeric(String),
    DuplicateDate(String),
    MonthlyGap { expected: String, found: String },
    MissingColumn(String),
    MissingHeader,
    Other(String),
}

impl std::fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::MalformedDate(d) => write!(f, "malformed date `{d}` (expected YYYY-MM)"),
            Self::NonNumeric(v) => write!(f, "non-numeric value `{v}`"),
            Self::DuplicateDate(d) => write!(f, "duplicate date {d}"),
            Self::MonthlyGap { expected, found } => {
                write!(f, "monthly gap: expected {expected}, found {found}")
            }
            Self::MissingColumn(c) => write!(f, "missing column `{c}`"),
            Self::MissingHeader => write!(f, "missing header row"),
            Self::Other(m) => f.write_str(m),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// `row` is the 1-based data row (the header is row 0).
    #[error("parse error at row {row}: {kind}")]
    Parse { row: usize, kind: ParseErrorKind },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported model order: {0}")]
    Unsupported(String),

    #[error("model is not stationary: {0}")]
    NonStationary(String),

    #[error("regressors are collinear (condition number {condition:.3e})")]
    Collinear { condition: f64 },

    #[error("estimation did not converge: {message}; best loglik {best_loglik:.6}, best parameters {best_params:?}")]
    NonConvergence {
        message: String,
        best_loglik: f64,
        best_params: Vec<f64>,
    },

    #[error("degenerate importance weights: effective sample size {ess:.3} out of {n}")]
    DegenerateImportance { ess: f64, n: usize },

    #[error("undefined rate: outcomes contain no `{missing_class}` observations")]
    UndefinedRate { missing_class: String },

    #[error("model file: {0}")]
    Model(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code for this error class (stable CLI contract).
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonConvergence { .. } => 3,
            Error::DegenerateImportance { .. } => 4,
            Error::UndefinedRate { .. } => 5,
            _ => 2,
        }
    }

    pub(crate) fn parse(row: usize, kind: ParseErrorKind) -> Self {
        Error::Parse { row, kind }
    }
}
