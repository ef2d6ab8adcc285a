use thiserror::Error;

/// Everything that can go wrong across the library.
///
/// Condition violations carry enough context to be rendered as a single
/// `key=value` diagnostic line by the command-line driver.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("operator is singular at {at}")]
    Singular { at: String },

    #[error("symbol evaluation failed at xi={xi:?}: {reason}")]
    SymbolEvaluation { xi: Vec<f64>, reason: String },

    #[error("weight is not in A_p: constant {constant} exceeds {bound}")]
    ApViolation { constant: f64, bound: f64 },

    #[error("ellipticity condition violated: {0}")]
    Ellipticity(EllipticityViolation),

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("spectral parameter {re}{im:+}i lies outside the admissible sector |arg| < {max_arg}")]
    OutsideSector { re: f64, im: f64, max_arg: f64 },

    #[error("perturbation series does not contract (lambda too small): term norms {norms:?}")]
    NonContraction { norms: Vec<f64> },

    #[error("degeneracy 1/gamma is not integrable at the origin on axis {axis} (panel ratio {ratio})")]
    NonIntegrable { axis: usize, ratio: f64 },

    #[error("decode error: {0}")]
    Decode(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

/// Which half of the principal-part condition failed.
#[derive(Debug, Clone, PartialEq)]
pub enum EllipticityViolation {
    /// Lower ellipticity constant too small (`|K| >= M0 sum xi^2l` fails).
    LowerBound { m0: f64 },
    /// Symbol leaves every sector of opening below pi.
    Sector { phi1: f64 },
    /// Every top-order coefficient is zero.
    Degenerate,
}

impl std::fmt::Display for EllipticityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EllipticityViolation::LowerBound { m0 } => write!(f, "M0 <= 0 (M0 = {m0:e})"),
            EllipticityViolation::Sector { phi1 } => write!(f, "phi1 >= pi (phi1 = {phi1})"),
            EllipticityViolation::Degenerate => write!(f, "all top-order coefficients are zero"),
        }
    }
}

impl Error {
    /// Short machine-readable tag used in the driver's error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::ShapeMismatch { .. } => "shape-mismatch",
            Error::Singular { .. } => "singular",
            Error::SymbolEvaluation { .. } => "symbol-evaluation",
            Error::ApViolation { .. } => "ap-violation",
            Error::Ellipticity(_) => "ellipticity",
            Error::NotPositiveDefinite { .. } => "positive-definite",
            Error::OutsideSector { .. } => "sector",
            Error::NonContraction { .. } => "non-contraction",
            Error::NonIntegrable { .. } => "integrability",
            Error::Decode(_) => "decode",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
