use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("state not normalized: norm = {norm:.3e}")]
    NotNormalized { norm: f64 },

    #[error("state vanishes identically")]
    ZeroState,

    #[error("probability mass {edge_mass:.3e} at the box boundary exceeds {limit:.1e}")]
    BoxOverflow { edge_mass: f64, limit: f64 },

    #[error("state not resolved by the grid: {0}")]
    UnderResolved(String),

    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    UnsupportedOrder(u32),

    #[error("negative density {value:.3e} at index {index}")]
    NegativeDensity { index: usize, value: f64 },

    #[error("inequality violated: {relation} (slack {slack:.3e} < -{tol:.1e})")]
    InequalityViolated {
        relation: &'static str,
        slack: f64,
        tol: f64,
    },

    #[error("identity violated: {identity} (residual {residual:.3e} > {tol:.1e})")]
    IdentityViolated {
        identity: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("unitarity lost at t = {t}: norm drift {drift:.3e}")]
    UnitarityLost { t: f64, drift: f64 },

    #[error("phase is undefined for a state with nodes")]
    NodalState,

    #[error("need at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },

    #[error("config: {0}")]
    Config(String),
}
