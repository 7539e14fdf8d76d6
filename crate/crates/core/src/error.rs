use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid shift space: {0}")]
    InvalidSpace(String),
    #[error("invalid symbolic point: {0}")]
    InvalidPoint(String),
    #[error("invalid circle map: {0}")]
    InvalidMap(String),
    #[error("invalid cocycle: {0}")]
    InvalidCocycle(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("points lie in different 0-cylinders ({0} vs {1})")]
    CylinderMismatch(u8, u8),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("closing loop is inadmissible: transition {0} -> {1} is forbidden")]
    InadmissibleLoop(u8, u8),
    #[error("Hölder exponent {0} is outside (0, 1]")]
    InvalidExponent(f64),
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("cocycle is not {side}-dominated (theta = {theta})")]
    NotDominated { side: char, theta: f64 },
    #[error("points are not on a common {side} set")]
    NotStablePair { side: char },
    #[error("holonomy did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("periodic data differ: residual {residual} exceeds {tol}")]
    PeriodicDataMismatch { residual: f64, tol: f64 },
    #[error("no transfer value available at {0}")]
    MissingSample(String),
    #[error("regression needs at least {needed} distance scales, found {found}")]
    InsufficientScales { needed: usize, found: usize },
    #[error("cannot splice a homoclinic approximant at depth {0}")]
    DepthUnreachable(usize),
    #[error("distortion estimate {k_est} exceeds the admissible bound {k_max}")]
    DistortionUnbounded { k_est: f64, k_max: f64 },
    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
