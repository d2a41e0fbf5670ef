//! Event log persistence, validation, session reconstruction and segment
//! derivation.

mod log;
mod segments;
mod session;

pub use log::{
    parse_event_value, read_log, validate_event, write_log, AppendOutcome, EventLog, RejectReason,
    Rejection,
};
pub use segments::{
    derive_activity, derive_segments, Activity, ReconstructionPolicy, DEFAULT_HEARTBEAT_TIMEOUT_S,
};
pub use session::{events_by_student, reconstruct_sessions, sessions_for_log, DEFAULT_SESSION_GAP_S};
