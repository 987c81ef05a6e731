use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("site ({row}, {col}) lies outside the {side}x{side} lattice")]
    SiteOutside { row: i64, col: i64, side: usize },
    #[error("overfull lattice: {requested} particles for {sites} sites")]
    Overfull { requested: usize, sites: usize },
    #[error("unknown particle id {0}")]
    UnknownParticle(u32),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("zero total rate: no admissible move")]
    Frozen,
    #[error("invalid sample grid: {0}")]
    Grid(String),
    #[error("initial value {value} lies below the reflecting boundary {boundary}")]
    BelowBoundary { value: f64, boundary: f64 },
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
