use std::fmt;

/// Error type shared by every module in the crate.
#[derive(Debug)]
pub enum CalibError {
    /// A rotation quaternion deviates from unit norm beyond tolerance.
    NonUnitRotation { norm: f64 },
    /// A dual quaternion does not encode a rigid motion (scaled dual part or
    /// nonzero scalar in the translation quaternion).
    NotRigid,
    /// A scale factor that must be positive is zero or negative.
    NonPositiveScale { alpha: f64 },
    /// A motion pair references a scale group outside `0..m`.
    BadScaleIndex { index: usize, m: usize },
    /// A scale group received no motion pairs.
    EmptyScaleGroup { index: usize },
    /// Operands disagree on problem dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// A recovered scaled-rotation block points away from the rotation block.
    AntiparallelScale { index: usize, dot: f64 },
    /// No local-solver start converged within the iteration budget.
    NoConvergence { best_kkt: f64, best_violation: f64 },
    /// The dual problem has no strictly feasible point or a factorization
    /// broke down; the data does not pin down the solution.
    IllConditioned { message: String },
    /// The certified dual optimum does not have a one-dimensional null space.
    NullSpaceDimension { dim: usize, spectrum: Vec<f64> },
    /// The recovered null vector has a vanishing rotation block.
    DegenerateNullVector { rotation_norm: f64 },
    /// The recovered solution violates the feasibility constraints.
    ConstraintViolation { misfit: f64 },
    /// Estimated and reference scale lists have different lengths.
    ScaleCountMismatch { expected: usize, got: usize },
    /// A parameter is outside its documented range.
    InvalidParameter(String),
    /// Filesystem failure while reading or writing `path`.
    Io { path: String, source: std::io::Error },
    /// Malformed content in an input file.
    Parse { path: String, line: usize, message: String },
    /// Timestamps in a trajectory file do not strictly increase.
    NonMonotonicTimestamps { path: String, line: usize },
    /// The two trajectories share no common time span.
    NoOverlap,
    /// Fewer motion pairs than the minimum needed to pose the problem.
    TooFewPairs { count: usize },
}

impl fmt::Display for CalibError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalibError::NonUnitRotation { norm } => {
                write!(f, "rotation quaternion has norm {norm}, expected 1")
            }
            CalibError::NotRigid => {
                write!(f, "dual quaternion does not encode a rigid motion")
            }
            CalibError::NonPositiveScale { alpha } => {
                write!(f, "scale factor must be positive, got {alpha}")
            }
            CalibError::BadScaleIndex { index, m } => {
                write!(f, "scale index {index} out of range for {m} scale group(s)")
            }
            CalibError::EmptyScaleGroup { index } => {
                write!(f, "scale group {index} has no motion pairs")
            }
            CalibError::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            CalibError::AntiparallelScale { index, dot } => {
                write!(
                    f,
                    "scaled rotation block {index} is antiparallel to the rotation (dot {dot})"
                )
            }
            CalibError::NoConvergence { best_kkt, best_violation } => {
                write!(
                    f,
                    "no solver start converged (best KKT residual {best_kkt}, \
                     best constraint violation {best_violation})"
                )
            }
            CalibError::IllConditioned { message } => {
                write!(f, "problem is ill-conditioned: {message}")
            }
            CalibError::NullSpaceDimension { dim, spectrum } => {
                write!(
                    f,
                    "dual optimum has null space of dimension {dim}, expected 1; \
                     smallest eigenvalues {:?}",
                    &spectrum[..spectrum.len().min(4)]
                )
            }
            CalibError::DegenerateNullVector { rotation_norm } => {
                write!(
                    f,
                    "null vector has rotation-block norm {rotation_norm}, cannot normalize"
                )
            }
            CalibError::ConstraintViolation { misfit } => {
                write!(f, "recovered solution violates constraints by {misfit}")
            }
            CalibError::ScaleCountMismatch { expected, got } => {
                write!(f, "scale list length mismatch: expected {expected}, got {got}")
            }
            CalibError::InvalidParameter(message) => write!(f, "{message}"),
            CalibError::Io { path, source } => write!(f, "{path}: {source}"),
            CalibError::Parse { path, line, message } => {
                write!(f, "{path}:{line}: {message}")
            }
            CalibError::NonMonotonicTimestamps { path, line } => {
                write!(f, "{path}:{line}: timestamps must strictly increase")
            }
            CalibError::NoOverlap => {
                write!(f, "trajectories share no common time span")
            }
            CalibError::TooFewPairs { count } => {
                write!(f, "only {count} motion pair(s), need at least 3")
            }
        }
    }
}

impl std::error::Error for CalibError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CalibError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, CalibError>;
