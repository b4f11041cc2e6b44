use thiserror::Error;

/// Every failure the lab can report. Variants map onto the domain errors
/// named by each module; the CLI turns all of them into exit code 1.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shape mismatch: expected {expected} samples, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("potential has no bound state (lowest eigenvalue {0:.6e} >= 0)")]
    NoBoundState(f64),
    #[error("potential has more than one bound state (second eigenvalue {0:.6e} < 0)")]
    MultipleBoundStates(f64),
    #[error("shooting failure: {0}")]
    ShootingFailure(String),
    #[error("Newton iteration did not converge: {0}")]
    NewtonDivergence(String),
    #[error("branch anomaly: {0}")]
    BranchAnomaly(String),
    #[error("descent converged to the trivial state: {0}")]
    TrivialMinimizer(String),
    #[error("solver converged to the wrong branch: {0}")]
    WrongBranch(String),
    #[error("seed failure: {0}")]
    SeedFailure(String),
    #[error("mass ranges of the branches do not overlap")]
    NonOverlapping,
    #[error("not in the small-mass regime: {0}")]
    NotInRegime(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("time step failed at dt_min = {0:.3e}")]
    StepFailure(f64),
    #[error("modulation not applicable: {0}")]
    NotApplicable(String),
    #[error("modulation frame out of regime: {0}")]
    OutOfRegime(String),
    #[error("degenerate modulation frame (singular matrix)")]
    DegenerateFrame,
    #[error("unsupported functional tag: {0}")]
    UnsupportedTag(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for LabError {
    fn from(e: std::io::Error) -> Self {
        LabError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
