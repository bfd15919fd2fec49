use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("out of table range: r = {0}")]
    OutOfTableRange(f64),
    #[error("normalization failed: {0}")]
    NormalizationFailed(String),
    #[error("box too large: expected count {0} exceeds safe bound")]
    BoxTooLarge(f64),
    #[error("displacement exceeds torus radius: |x| = {0}, L/2 = {1}")]
    DisplacementTooLarge(f64, f64),
    #[error("no transition in range [{0}, {1}]")]
    NoTransitionInRange(f64, f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("grid size must be even, got n = {0}")]
    OddGridSize(usize),
    #[error("moment order {a} outside definition range [0, {max}]")]
    MomentOutOfRange { a: f64, max: f64 },
    #[error("supercritical kernel: J_hat(0) = {0} > 1")]
    SupercriticalKernel(f64),
    #[error("non-invertible kernel: J_hat({0:?}) = {1} >= 1 at k != 0")]
    NonInvertibleKernel(Vec<f64>, f64),
    #[error("singular moment matrix")]
    SingularSigma,
    #[error("need at least {needed} positive points in fit window, found {found}")]
    TooFewFitPoints { needed: usize, found: usize },
    #[error("nonpositive value in fit window at |x| = {0}")]
    NonpositiveFitValue(f64),
    #[error("delta-divergent: contractible edge with a = 0 has no finite L^s norm")]
    DeltaDivergent,
    #[error("grid too large for two-point diagram: needs {needed} bytes, budget {budget}")]
    GridTooLarge { needed: usize, budget: usize },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("unimplemented case id: {0}")]
    UnknownCase(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field file: {0}")]
    MalformedField(String),
}

pub type Result<T> = std::result::Result<T, Error>;
