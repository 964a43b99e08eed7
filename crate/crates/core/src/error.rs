use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid value for `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("spatial covariance is not positive definite (pivot {pivot})")]
    Cholesky { pivot: usize },

    #[error("destination cell index {index} out of range ({cells} cells)")]
    InvalidCell { index: usize, cells: usize },

    #[error("composite channel is zero; beamformer undefined")]
    DegenerateChannel,

    #[error("exhaustive search over {levels}^{elements} grid points exceeds the 1e8 guard")]
    SearchTooLarge { levels: usize, elements: usize },

    #[error("episode already finished; call reset first")]
    EpisodeFinished,

    #[error("replay buffer holds {have} transitions, {need} requested")]
    BufferUnderfilled { have: usize, need: usize },

    #[error("forward cache does not match this network")]
    StaleCache,

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
