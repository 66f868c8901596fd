use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quaternions are not in the same similarity class")]
    NotSimilar,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector")]
    ZeroVector,
    #[error("vector is not negative")]
    NotNegativeVector,
    #[error("Gram-Schmidt breakdown after {0} attempts")]
    GramSchmidtBreakdown(usize),
    #[error("matrix is not an isometry (defect {0:.3e})")]
    NotIsometry(f64),
    #[error("characteristic polynomial is not palindromic (deviation {0:.3e})")]
    PalindromeViolation(f64),
    #[error("operation requires the {0} field")]
    WrongField(&'static str),
    #[error("root finder did not converge")]
    NoConvergence,
    #[error("element is not regular loxodromic")]
    NotLoxodromic,
    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),
    #[error("eigenvalue class is real; its eigensphere is undefined")]
    RealEigenvalueClass,
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("pair is not weakly non-singular")]
    NotWeaklyNonsingular,
    #[error("pair is not non-singular")]
    NotNonsingular,
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("normalization impossible: {0}")]
    NormalizationImpossible(String),
    #[error("Gram pattern violation: {0}")]
    PatternViolation(String),
    #[error("lifts do not span the space")]
    SingularBasis,
    #[error("verification failed (residual {0:.3e})")]
    VerificationFailed(f64),
    #[error("operation requires n = 3, got n = {0}")]
    WrongDimension(usize),
    #[error("projective points inconsistent with the axis element")]
    InconsistentProjectivePoints,
    #[error("boundary elements are not compatible: {0}")]
    IncompatibleBoundary(String),
    #[error("invalid gluing graph: {0}")]
    GraphInvalid(String),
    #[error("compatibility failed: {0}")]
    CompatibilityFailed(String),
    #[error("pair generation exhausted after {0} attempts")]
    GenerationExhausted(usize),
    #[error("io error: {0}")]
    Io(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

impl Error {
    /// Process exit status for the command line: 3 for verification failures,
    /// 2 for degenerate or invalid mathematical input, 1 for I/O and parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::VerificationFailed(_) => 3,
            Error::Io(_) | Error::Parse { .. } => 1,
            _ => 2,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
    }
}
