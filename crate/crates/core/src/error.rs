use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse mesh {path}: {reason}")]
    MeshParse { path: PathBuf, reason: String },

    #[error("unsupported mesh format for {0} (expected .obj or .stl)")]
    UnsupportedFormat(PathBuf),

    #[error("material binding references facet group `{0}` which is not present in the mesh")]
    MissingGroup(String),

    #[error("no material bound to facet group `{0}`")]
    UnboundGroup(String),

    #[error("unknown material `{0}`")]
    UnknownMaterial(String),

    #[error("all {0} facets are degenerate")]
    AllDegenerate(usize),

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("invalid material table: {0}")]
    MaterialTable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cross-range axis undefined at depression 90 deg")]
    DegenerateFrame,

    #[error("launch grid needs {requested} rays, limit is {limit}")]
    RayLimit { requested: u64, limit: u64 },

    #[error(
        "{count} of {total} inputs fall outside the focusing grid (first offenders: {first:?})"
    )]
    OutsideGrid {
        count: usize,
        total: usize,
        first: Vec<usize>,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("translation by ({dx}, {dy}) output pixels pushes content off the grid")]
    OffGrid { dx: i64, dy: i64 },

    #[error("bad {kind} file: {reason}")]
    Format { kind: &'static str, reason: String },

    #[error("image encoding failed: {0}")]
    Image(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
