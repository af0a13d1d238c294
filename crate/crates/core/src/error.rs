use thiserror::Error;

/// Errors raised by the numerical engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid truncation: {0}")]
    InvalidSpec(String),

    #[error("basis dimension {dimension} exceeds capacity limit {limit}")]
    Capacity { dimension: usize, limit: usize },

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("basis was not built from the model truncation")]
    BasisMismatch,

    #[error("matrix element {0} is not real in the oscillator basis")]
    NonReal(String),

    #[error(
        "eigensolver did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("requested {requested} eigenpairs from a dimension-{dimension} problem")]
    TooManyEigenpairs { requested: usize, dimension: usize },

    #[error("no sign change of the population difference in [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("two-mode projection needs an even particle number, got {0}")]
    OddParticleNumber(usize),

    #[error("two-mode projection needs orthogonal modes (overlap {0:.3e})")]
    NonOrthogonalModes(f64),

    #[error("invalid ramp schedule: {0}")]
    InvalidSchedule(String),

    #[error("integrator exhausted {0} steps")]
    StepLimit(usize),

    #[error("integrator step size underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("norm drift {0:.3e} exceeds the allowed bound")]
    NormDrift(f64),

    #[error("energy gap {gap:.3e} at omega = {omega} is indistinguishable from zero")]
    ZeroGap { omega: f64, gap: f64 },

    #[error("finite-difference step unstable: {coarse} at delta vs {fine} at delta/2")]
    DeltaUnstable { coarse: f64, fine: f64 },

    #[error("need at least {needed} grid points, got {got}")]
    GridTooSmall { needed: usize, got: usize },

    #[error("stage {stage} failed at omega_ext = {omega_ext}: {source}")]
    Stage {
        stage: &'static str,
        omega_ext: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("solver failed at omega = {omega}: {source}")]
    AtOmega {
        omega: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("cache format error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str, omega_ext: f64) -> Error {
        Error::Stage {
            stage,
            omega_ext,
            source: Box::new(self),
        }
    }

    pub(crate) fn at_omega(self, omega: f64) -> Error {
        Error::AtOmega {
            omega,
            source: Box::new(self),
        }
    }
}
