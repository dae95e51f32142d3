use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unbounded region: {0}")]
    UnboundedRegion(String),

    #[error("radial grid must be sorted ascending and start at 0")]
    UnsortedGrid,

    #[error("out of grid: {0}")]
    OutOfGrid(String),

    #[error("point ({r}, {t}) is not a lattice node")]
    OffLattice { r: f64, t: f64 },

    #[error("no admissible cone: {0}")]
    NoAdmissibleCone(String),

    #[error("grid too short: {0}")]
    GridTooShort(String),

    #[error("outside Sigma-prime: (alpha, beta) = ({alpha}, {beta}) with t* = {t_star}")]
    OutsideSigmaPrime { alpha: f64, beta: f64, t_star: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("hypothesis b >= -1 violated (b = {0})")]
    ExponentBelowMinusOne(f64),

    #[error("extend window to r_star = {r_star} (window ends at {window_end})")]
    ExtendWindow { r_star: f64, window_end: f64 },

    #[error("certificate inconsistent: {0}")]
    CertificateFailed(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
