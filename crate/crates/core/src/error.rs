use thiserror::Error;

/// Errors produced by the planning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("schedule violates {0}")]
    Schedule(#[from] ScheduleViolation),
}

pub type Result<T> = std::result::Result<T, Error>;

/// The first constraint a candidate day schedule fails, named by role.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleViolation {
    #[error("demand balance for patient type {0} (served + unserved != demand)")]
    DemandBalance(usize),
    #[error("patients assigned to unmarked session {session} of unit {unit}")]
    UnmarkedSession { unit: usize, session: usize },
    #[error("standard-unit marks are not a prefix of the day's sessions")]
    PrefixMarks,
    #[error("marks of unit {0} are not one contiguous block")]
    NonContiguousMarks(usize),
    #[error("session {session} load {load} exceeds the {machines} machines of unit {unit}")]
    UnitCapacity {
        unit: usize,
        session: usize,
        load: u32,
        machines: u32,
    },
    #[error("infected patients scheduled in session {0} at or before a suspected-patient session")]
    InfectedBeforeSuspected(usize),
    #[error("session {0} mixes infected and suspected patients")]
    MixedIsolatedSession(usize),
    #[error("matrix dimensions do not match the clinic configuration")]
    Shape,
}
