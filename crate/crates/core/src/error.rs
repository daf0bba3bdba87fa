use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ODE step size underflow at x = {x} (h = {h:e})")]
    StepUnderflow { x: f64, h: f64 },

    #[error("ODE exceeded {0} steps")]
    TooManySteps(usize),

    #[error("no sign change in bracket [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("jump locations are not sorted")]
    UnsortedJumps,

    #[error("site {site} outside window [{lo}, {hi}]")]
    SiteOutsideWindow { site: i64, lo: i64, hi: i64 },

    #[error("continued fraction depth {depth} too small for Im z = {im_z:e} (|G(d) - G(d/2)| = {diff:e})")]
    DepthInsufficient { depth: usize, im_z: f64, diff: f64 },

    #[error("xi data covers up to {covered} but {required} is required")]
    InsufficientCoverage { covered: f64, required: f64 },

    #[error("interlacing violated: {0}")]
    Interlacing(String),

    #[error("cutoff sensitivity: {0}")]
    CutoffSensitivity(String),

    #[error("Wronskian vanishes numerically at z = {re} + {im}i")]
    WronskianVanishes { re: f64, im: f64 },

    #[error("potential is not short range: {0}")]
    NotShortRange(String),

    #[error("potential is not even: {0}")]
    NotEven(String),

    #[error("root bracketing failed: {0}")]
    BracketFailure(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
