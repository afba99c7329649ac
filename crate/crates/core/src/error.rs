use thiserror::Error;

/// Errors produced by grid construction, field operations and solvers.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("grid: {0}")]
    Grid(String),

    #[error("field is in {found:?} space, expected {expected:?}")]
    WrongSpace {
        expected: crate::grid::Space,
        found: crate::grid::Space,
    },

    #[error("non-finite sample at grid point {point:?} (flat index {index}): {value}")]
    NonFiniteSample {
        point: Vec<f64>,
        index: usize,
        value: String,
    },

    #[error("non-finite field produced at t = {t}: {detail}")]
    NonFiniteField { t: f64, detail: String },

    #[error("dispersion: {0}")]
    Dispersion(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("norm: {0}")]
    Norm(String),

    #[error("integrator: {0}")]
    Integrator(String),

    #[error("Picard iteration diverged after {iterates} iterates (last ratios {ratios:?})")]
    PicardDiverged { iterates: usize, ratios: Vec<f64> },

    #[error("experiment: {0}")]
    Experiment(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("decay window [{t_lo}, {t_hi}] collides with wrap-around; safe horizon is t < {t_wrap:.6}")]
    WrapAround { t_lo: f64, t_hi: f64, t_wrap: f64 },

    #[error("I/O failure at {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("snapshot format: {0}")]
    SnapshotFormat(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
