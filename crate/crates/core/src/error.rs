use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlaError {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("column `{0}` is constant (zero sample variance)")]
    DegenerateColumn(String),

    #[error("matrix is not symmetric: max |a_ij - a_ji| = {max_asymmetry:e}")]
    Symmetry { max_asymmetry: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("total variance is zero")]
    ZeroTrace,

    #[error("insufficient input: {0}")]
    InsufficientInput(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("eigenvector tracking failed at increment {increment}: best overlap {overlap:.3}")]
    Tracking { increment: f64, overlap: f64 },

    #[error("covariance factorization failed: {0}")]
    Factorization(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PlaError {
    /// True for errors caused by the numbers themselves rather than the input shape.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            PlaError::Numerical(_)
                | PlaError::ZeroTrace
                | PlaError::Tracking { .. }
                | PlaError::Factorization(_)
        )
    }

    /// Short stable identifier of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            PlaError::Parse(_) => "parse",
            PlaError::Dimension(_) => "dimension",
            PlaError::DegenerateColumn(_) => "degenerate-column",
            PlaError::Symmetry { .. } => "symmetry",
            PlaError::Numerical(_) => "numerical",
            PlaError::ZeroTrace => "zero-trace",
            PlaError::InsufficientInput(_) => "insufficient-input",
            PlaError::Consistency(_) => "consistency",
            PlaError::Tracking { .. } => "tracking",
            PlaError::Factorization(_) => "factorization",
            PlaError::Config(_) => "config",
            PlaError::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, PlaError>;
