use chrono::{DateTime, Utc};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("event at {wall_time} is before the course start")]
    BeforeCourseStart { wall_time: DateTime<Utc> },
    #[error("events are not ordered by wall time (index {index})")]
    Unordered { index: usize },
    #[error("session mixes students {first} and {other}")]
    MixedStudents { first: String, other: String },
    #[error("seek event {event_id} has no seek_from_s")]
    SeekWithoutOrigin { event_id: String },
    #[error("unknown timezone {0}")]
    UnknownTimezone(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid snapshot: {0}")]
    Snapshot(String),
    #[error("log line {line}: {message}")]
    LogCorrupt { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CoreError> = std::result::Result<T, E>;
