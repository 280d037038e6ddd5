use thiserror::Error;

use crate::meeting::ParticipantId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown participant `{0}`")]
    UnknownParticipant(ParticipantId),

    #[error("roster error: {0}")]
    Roster(String),

    #[error("clock error: {0}")]
    Clock(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("meeting has not started")]
    NotStarted,

    #[error("meeting has not ended")]
    NotEnded,

    #[error("invalid scenario: {0}")]
    Scenario(String),
}
