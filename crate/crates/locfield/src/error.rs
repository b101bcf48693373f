use thiserror::Error;

/// Errors surfaced by the solvers and response integrals.
#[derive(Debug, Error)]
pub enum LocfieldError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("requested {requested} eigenpairs but only {reliable} are resolvable on a {grid_points}-point grid")]
    Resolution {
        requested: usize,
        reliable: usize,
        grid_points: usize,
    },

    #[error("potential is not confining: {0}")]
    Confinement(String),

    #[error("event outside the field domain: {0}")]
    Domain(String),

    #[error("two-path consistency failure: direct={direct:.6e} momentum={momentum:.6e} allowed={allowed:.3e}")]
    Consistency {
        direct: f64,
        momentum: f64,
        allowed: f64,
    },

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LocfieldError>;
