use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("n must be even")]
    OddGridSize,
    #[error("n must be at least 4")]
    GridTooSmall,
    #[error("length must be positive")]
    NonPositiveLength,
    #[error("field has {found} values but grid has {expected} nodes")]
    SizeMismatch { expected: usize, found: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field contains non-finite values")]
    NonFinite,
    #[error("density must be strictly positive with finite mass")]
    InvalidDensity,
    #[error("a0 must be positive")]
    ZeroLowestCoefficient,
    #[error("a{0} must be positive")]
    ZeroLeadingCoefficient(usize),
    #[error("coefficient polynomials must have nonnegative coefficients")]
    NegativePolyCoefficient,
    #[error("inertia operator numerically indefinite")]
    IndefiniteOperator,
    #[error("Abar solve failed")]
    AbarSolveFailed,
    #[error("tangent must have zero mean")]
    NonZeroMeanTangent,
    #[error("pressure potential must have zero mean")]
    NonZeroMeanPressure,
    #[error("flow not injective")]
    FlowNotInjective,
    #[error("post-breaking time requested")]
    PostBreakingTime,
    #[error("Newton iteration did not converge")]
    NewtonNonConvergence,
    #[error("time step guard: non-finite values produced")]
    GuardNonFinite,
    #[error("time step guard: density fell below floor")]
    GuardDensityFloor,
    #[error("dt must be positive")]
    NonPositiveDt,
    #[error("trajectory has no stored snapshots")]
    EmptyTrajectory,
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
