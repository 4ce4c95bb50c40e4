use std::path::PathBuf;

/// Errors raised by the laboratory.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter violates an operation's precondition.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("periodic domain is disconnected: {0}")]
    Disconnected(String),

    #[error("point ({x}, {y}) lies in an obstacle")]
    InObstacle { x: f64, y: f64 },

    #[error("isometry is not compatible with the lattice: {0}")]
    IncompatibleIsometry(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    /// The measured front came too close to a clamped window edge.
    #[error("front reached the window edge at t = {t}")]
    FrontHitsEdge { t: f64 },

    #[error("initial datum does not invade: {0}")]
    NotInvading(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{context}: {source}")]
    Io {
        context: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{experiment}: {source}")]
    Experiment {
        experiment: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into(),
            source,
        }
    }
}
