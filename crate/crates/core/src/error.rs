use thiserror::Error;

/// Failure modes shared by every module of the lab.
///
/// Each variant carries a stable kebab-case [`code`](Error::code) that the
/// command line front end emits in its machine-readable error record.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("rational input: expansion terminated after digits {digits:?}")]
    RationalInput { digits: Vec<u64> },
    #[error("depth too small: need {needed}, have {have}")]
    DepthTooSmall { needed: usize, have: usize },
    #[error("digit {index} does not fit in 64 bits")]
    DigitOverflow { index: usize },
    #[error("cap exceeded: {what} = {value} > {cap}")]
    CapExceeded {
        what: &'static str,
        value: u128,
        cap: u128,
    },
    #[error("inverse of the conjugacy did not converge at u = {target}")]
    RootFindFailure { target: f64 },
    #[error("eigenvalue bracket failed at index {index}")]
    BracketFailure { index: usize },
    #[error("window [{a}, {b}] is numerically singular at E = {energy}")]
    NearSingularWindow { a: i64, b: i64, energy: f64 },
    #[error("energy {energy} sits on a histogram bin center")]
    EnergyOnAtom { energy: f64 },
    #[error("delta {delta} is not below the Lyapunov estimate {lyapunov}")]
    DeltaTooLarge { delta: f64, lyapunov: f64 },
    #[error("inverse iteration stalled at E = {energy} (residual {residual:e})")]
    IterationStall { energy: f64, residual: f64 },
    #[error("decay fit needs {needed} usable sites, found {usable}")]
    TooFewPoints { usable: usize, needed: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::InsufficientPrecision(_) => "insufficient-precision",
            Error::RationalInput { .. } => "rational-input",
            Error::DepthTooSmall { .. } => "depth-too-small",
            Error::DigitOverflow { .. } => "digit-overflow",
            Error::CapExceeded { .. } => "cap-exceeded",
            Error::RootFindFailure { .. } => "root-find-failure",
            Error::BracketFailure { .. } => "bracket-failure",
            Error::NearSingularWindow { .. } => "near-singular-window",
            Error::EnergyOnAtom { .. } => "E-on-atom",
            Error::DeltaTooLarge { .. } => "delta-too-large",
            Error::IterationStall { .. } => "iteration-stall",
            Error::TooFewPoints { .. } => "too-few-points",
            Error::Precondition(_) => "precondition",
            Error::InvalidInput(_) => "invalid-input",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
