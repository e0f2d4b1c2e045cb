use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate in {0}")]
    NonFinite(&'static str),

    #[error("pair already overlaps: distance {distance} < diameter {epsilon}")]
    Overlap { distance: f64, epsilon: f64 },

    #[error("contact distance {distance} deviates from diameter {epsilon}")]
    NotInContact { distance: f64, epsilon: f64 },

    #[error("collision normal is not a unit vector (|nu| = {0})")]
    NonUnitNormal(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("cannot certify moments: {0}")]
    CannotCertify(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("time {t} outside valid horizon [0, {horizon}]")]
    OutsideHorizon { t: f64, horizon: f64 },

    #[error("tree has no collisions to prune")]
    EmptyTree,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("thinning acceptance rate {0:.2e} below 1e-4; dominating rate is too loose")]
    ThinningRate(f64),

    #[error("thinning clock: {0}")]
    ThinningClock(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}
