use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("double-well check failed: {0}")]
    InvalidWell(String),

    #[error("profile residual {residual:e} exceeds tolerance {tolerance:e}")]
    ProfileResidual { residual: f64, tolerance: f64 },

    #[error("degenerate profile: {0}")]
    DegenerateProfile(String),

    #[error("interface is not simple: segments {0} and {1} intersect")]
    SelfIntersection(usize, usize),

    #[error("circle violates clearance {clearance} from the domain boundary")]
    Clearance { clearance: f64 },

    #[error("point ({x}, {y}) left the domain during integration")]
    LeftDomain { x: f64, y: f64 },

    #[error("singular flow-map Jacobian (det = {0:e})")]
    SingularJacobian(f64),

    #[error("field has no sign change")]
    NoSignChange,

    #[error("zero contour has {0} closed components, expected 1")]
    MultipleComponents(usize),

    #[error("zero contour reaches within two cells of the boundary")]
    ContourNearBoundary,

    #[error("non-finite value at node ({i}, {j}) at t = {t}")]
    NonFinite { i: usize, j: usize, t: f64 },

    #[error("maximum principle violated by {excess:e} at t = {t}")]
    MaxPrinciple { excess: f64, t: f64 },

    #[error("resolution guard: h = {h} exceeds {limit}")]
    Resolution { h: f64, limit: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("test field support too close to the boundary")]
    SupportClearance,

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("non-positive value {0} cannot enter a log-log fit")]
    NonPositive(f64),

    #[error("duplicate eps value {0} in sweep")]
    DuplicateEps(f64),

    #[error("extinction time {extinction} reached (t = {t})")]
    Extinction { extinction: f64, t: f64 },

    #[error("front tracking self-intersection at t = {0}")]
    FrontIntersection(f64),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
