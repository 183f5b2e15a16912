use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space layout: {0}")]
    InvalidLayout(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("operands live on different space layouts")]
    LayoutMismatch,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("steady state is not unique: numerical null space has dimension {nullity}")]
    DegenerateSteadyState { nullity: usize },

    #[error("steady-state solve failed: {0}")]
    SteadyState(String),

    #[error("eigendecomposition failed (condition estimate {condition:e})")]
    Eigen { condition: f64 },

    #[error("emitter population {population:e} is too small to normalize a correlation")]
    ZeroPopulation { population: f64 },

    #[error("sensor {sensor} population {population:e} is below the resolvable threshold")]
    VanishingSensorPopulation { sensor: usize, population: f64 },

    #[error("dimension budget exceeded: {0}")]
    DimensionBudget(String),

    #[error("not in the triplet regime: {0}")]
    Regime(String),

    #[error("Fock truncation too small: tail population {tail:e} exceeds {limit:e}")]
    Truncation { tail: f64, limit: f64 },

    #[error("map cell ({i}, {j}) failed: {source}")]
    Cell {
        i: usize,
        j: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
