use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("subject not in universe: op-ex {0}")]
    SubjectNotInUniverse(usize),

    #[error("unknown event {0}")]
    UnknownEvent(usize),

    #[error("no spec registered for object `{0}`")]
    MissingSpec(String),

    #[error("object `{object}` has no operation `{operation}`")]
    UnknownOperation { object: String, operation: String },

    #[error("unknown object spec `{0}`")]
    UnknownSpec(String),

    #[error("unknown condition `{0}`")]
    UnknownCondition(String),

    #[error("unknown program `{0}`")]
    UnknownProgram(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid history: {0}")]
    InvalidHistory(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("event identity conflict: {0}")]
    EventConflict(String),

    #[error("precondition failed for history {index}: {reason}")]
    Precondition { index: usize, reason: String },

    #[error("inconsistent state graph: {0}")]
    Construction(String),
}

impl Error {
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource(_))
    }
}
