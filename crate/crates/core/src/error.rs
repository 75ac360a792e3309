use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} must be positive (got {value})")]
    NonPositive { what: &'static str, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("density profile has no support on the sampled interval")]
    EmptySupport,

    #[error("region {0} contains no sites")]
    EmptyRegion(String),

    #[error("regions {0} and {1} overlap")]
    OverlappingRegions(String, String),

    #[error("direction must be a unit vector (|u| = {0})")]
    NonUnitDirection(f64),

    #[error("phase undefined in bin {bin} (transverse length {transverse:e})")]
    UndefinedPhase { bin: usize, transverse: f64 },

    #[error("detuning must be nonzero")]
    ZeroDetuning,

    #[error("field angle {0} rad outside [0, pi/2]")]
    AngleOutOfRange(f64),

    #[error("integrator step rotates {phase:.3} rad (limit 0.5); reduce dt")]
    StepTooLarge { phase: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("exact oracle supports 1..=6 atoms (got {0})")]
    DimensionGuard(usize),

    #[error("operation requires uniform coupling weights")]
    NonUniformWeights,

    #[error("state vector not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("self-consistent preparation did not converge after {iterations} iterations (residual {residual:e})")]
    PreparationFailed { iterations: usize, residual: f64 },

    #[error("probe region {0} depolarized below threshold")]
    ProbeDepolarized(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
