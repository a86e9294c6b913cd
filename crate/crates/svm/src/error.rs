use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("need at least {required} samples, got {actual}")]
    TooFewSamples { required: usize, actual: usize },

    #[error("training labels contain a single class")]
    SingleClassData,

    #[error("feature {index} has zero variance")]
    DegenerateFeature { index: usize },

    #[error("row {row} has {actual} features, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        actual: usize,
    },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("solver stopped after {iterations} iterations with KKT violation {violation:e}")]
    NonConvergence { iterations: u64, violation: f64 },
}

pub type Result<T> = std::result::Result<T, SvmError>;
