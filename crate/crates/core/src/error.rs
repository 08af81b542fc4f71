use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid filtration: {0}")]
    Filtration(String),

    #[error("level {level} out of range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },

    #[error("group mismatch: {0}")]
    GroupMismatch(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("enumeration of {count} items exceeds budget {budget}")]
    EnumerationTooLarge { count: u128, budget: u64 },

    #[error("corner has no completion: Moebius coefficient of subset {subset:#b} is not in level {level}")]
    CompletionFailure { subset: usize, level: usize },

    #[error("map is not p-homogeneous-consistent: {0}")]
    NotPHomogeneousConsistent(String),

    #[error("restriction to the fundamental domain is not a morphism: {0}")]
    TargetNotPHomogeneous(String),

    #[error("unsupported covering target: {0}")]
    UnsupportedTarget(String),

    #[error("homomorphism is not a filtered surjection at level {level}: {reason}")]
    NotSurjective { level: usize, reason: String },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error("inconsistent family at rank {n}: {reason}")]
    InconsistentFamily { n: usize, reason: String },

    #[error("stage `{stage}` failed: {witness}")]
    Stage { stage: String, witness: String },
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Malformed(e.to_string())
    }
}
