use std::path::PathBuf;

use thiserror::Error;
use vhfplan_svm::SvmError;

use crate::geodata::TerrainClass;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}:{line}: {message}")]
    ParseRow {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("schema error: {message}")]
    Schema { message: String, ids: Vec<String> },

    #[error("geometry error in feature {id}: {message}")]
    Geometry { id: String, message: String },

    #[error("line {line}: rssi {value} dBm is neither the no-coverage code -120 nor at least the sensitivity -119")]
    Range { line: u64, value: f64 },

    #[error("invalid {name}: {message}")]
    InvalidInput { name: &'static str, message: String },

    #[error("hilly map has no contour lines")]
    NoTerrainData,

    #[error("geodesic iteration did not converge")]
    GeodesicNonConvergence,

    #[error("need at least {required} samples, got {actual}")]
    InsufficientData { required: usize, actual: usize },

    #[error("fold {fold} lacks samples of one class")]
    FoldDegeneracy { fold: usize },

    #[error("no grid cell met the bound after {relaxations} relaxations")]
    NonTermination { relaxations: usize },

    #[error("model was trained for {model:?} terrain, map is {map:?}")]
    TerrainClassMismatch {
        model: TerrainClass,
        map: TerrainClass,
    },

    #[error("target area {target} overlaps model training areas {overlapping:?}")]
    Leakage {
        target: String,
        overlapping: Vec<String>,
    },

    #[error("unsupported model format {found}, expected {expected}")]
    VersionMismatch { found: String, expected: String },

    #[error("model checksum mismatch")]
    Checksum,

    #[error(transparent)]
    Svm(#[from] SvmError),

    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } | Error::ParseRow { .. } => "ParseError",
            Error::Schema { .. } => "SchemaError",
            Error::Geometry { .. } => "GeometryError",
            Error::Range { .. } => "RangeError",
            Error::InvalidInput { .. } => "InvalidInput",
            Error::NoTerrainData => "NoTerrainData",
            Error::GeodesicNonConvergence => "NonConvergence",
            Error::InsufficientData { .. } => "InsufficientData",
            Error::FoldDegeneracy { .. } => "FoldDegeneracy",
            Error::NonTermination { .. } => "NonTermination",
            Error::TerrainClassMismatch { .. } => "TerrainClassMismatch",
            Error::Leakage { .. } => "LeakageError",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::Checksum => "ChecksumError",
            Error::Svm(SvmError::SingleClassData) => "SingleClassData",
            Error::Svm(SvmError::NonConvergence { .. }) => "NonConvergence",
            Error::Svm(SvmError::DegenerateFeature { .. }) => "DegenerateFeature",
            Error::Svm(_) => "SvmError",
            Error::Bind { .. } => "BindError",
            Error::Io { .. } => "IoError",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
