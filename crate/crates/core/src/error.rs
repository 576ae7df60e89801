use thiserror::Error;

/// Errors raised by the slot-grid model and the environments built on it.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("slot id {id} out of range for a grid of {capacity} slots")]
    SlotOutOfRange { id: usize, capacity: usize },
    #[error("coordinate ({bay}, {row}, {tier}) outside grid {bays}x{rows}x{tiers}")]
    CoordOutOfRange {
        bay: usize,
        row: usize,
        tier: usize,
        bays: usize,
        rows: usize,
        tiers: usize,
    },
    #[error("slot {0} is empty")]
    EmptySlot(usize),
    #[error("slot {0} is already occupied")]
    OccupiedSlot(usize),
    #[error("slot {slot} requires group {required}, got {given}")]
    GroupMismatch { slot: usize, required: i32, given: i32 },
    #[error("slot {0} would float: the slot below it is empty")]
    Floating(usize),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("cannot split {targets} targets across {cranes} cranes")]
    TooManyCranes { cranes: usize, targets: usize },
    #[error("episode is already finished")]
    EpisodeFinished,
    #[error("episode is still running")]
    EpisodeRunning,
    #[error("action {action} outside action space of size {size}")]
    ActionOutOfRange { action: usize, size: usize },
    #[error("oracle refused: {0}")]
    OracleGuard(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
