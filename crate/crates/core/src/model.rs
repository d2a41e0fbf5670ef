//! Shared domain types.
//!
//! Positions are kept as real video seconds everywhere in this module; the
//! integer 1-second binning happens only in [`crate::scoring`].

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::timefmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub video_id: String,
    pub title: String,
    pub duration_s: u32,
    pub published_at: NaiveDate,
    pub course_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_url: Option<String>,
    /// Instructor-provided hint of the important part. Stored only; it does
    /// not affect scoring.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_annotation: Option<ImportantPartAnnotation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Load,
    Play,
    Pause,
    Seek,
    RateChange,
    Focus,
    Blur,
    Heartbeat,
    Ended,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Load => "load",
            EventKind::Play => "play",
            EventKind::Pause => "pause",
            EventKind::Seek => "seek",
            EventKind::RateChange => "rate_change",
            EventKind::Focus => "focus",
            EventKind::Blur => "blur",
            EventKind::Heartbeat => "heartbeat",
            EventKind::Ended => "ended",
        }
    }
}

/// One raw player action as reported by a client.
///
/// `rate` is the playback rate the player reports at the time of the event;
/// for `rate_change` it is the new rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionEvent {
    pub event_id: String,
    pub student_id: String,
    pub video_id: String,
    #[serde(with = "timefmt::millis")]
    pub wall_time: DateTime<Utc>,
    pub kind: EventKind,
    pub position_s: f64,
    #[serde(default = "default_rate")]
    pub rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seek_from_s: Option<f64>,
}

fn default_rate() -> f64 {
    1.0
}

/// A contiguous stretch of actual playback at one rate and focus state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaybackSegment {
    pub student_id: String,
    pub video_id: String,
    pub start_pos_s: f64,
    pub end_pos_s: f64,
    pub rate: f64,
    pub in_focus: bool,
    #[serde(with = "timefmt::millis")]
    pub wall_start: DateTime<Utc>,
    #[serde(with = "timefmt::millis")]
    pub wall_end: DateTime<Utc>,
    pub day_index: u32,
    pub session_id: String,
}

impl PlaybackSegment {
    pub fn video_len_s(&self) -> f64 {
        self.end_pos_s - self.start_pos_s
    }

    /// Wall-clock listening time for this segment.
    pub fn listening_s(&self) -> f64 {
        self.video_len_s() / self.rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeekDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeekAction {
    pub student_id: String,
    pub video_id: String,
    #[serde(with = "timefmt::millis")]
    pub wall_time: DateTime<Utc>,
    pub from_pos_s: f64,
    pub to_pos_s: f64,
    pub direction: SeekDirection,
    pub day_index: u32,
    pub session_id: String,
}

/// Per-video array of 1-second bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinScoreTimeline {
    pub video_id: String,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub computed_at: NaiveDate,
    #[serde(with = "timefmt::millis")]
    pub event_horizon: DateTime<Utc>,
}

impl BinScoreTimeline {
    pub const BIN_WIDTH_S: u32 = 1;

    /// All-zero timeline for a video with no usage.
    pub fn cold(
        video_id: impl Into<String>,
        duration_s: u32,
        computed_at: NaiveDate,
        event_horizon: DateTime<Utc>,
    ) -> Self {
        let n = duration_s as usize;
        Self {
            video_id: video_id.into(),
            raw: vec![0.0; n],
            normalized: vec![0.0; n],
            computed_at,
            event_horizon,
        }
    }

    pub fn duration_s(&self) -> u32 {
        self.raw.len() as u32
    }

    pub fn max_raw(&self) -> f64 {
        self.raw.iter().copied().fold(0.0, f64::max)
    }
}

/// The instructor's single most important interval of a video, `[start_s, end_s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportantPartAnnotation {
    pub start_s: u32,
    pub end_s: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoAnnotation {
    pub video_id: String,
    pub start_s: u32,
    pub end_s: u32,
}

impl VideoAnnotation {
    pub fn interval(&self) -> ImportantPartAnnotation {
        ImportantPartAnnotation {
            start_s: self.start_s,
            end_s: self.end_s,
        }
    }

    pub fn validate(&self, duration_s: u32) -> Result<(), String> {
        if self.start_s >= self.end_s {
            return Err(format!(
                "annotation for {} is empty: [{}, {})",
                self.video_id, self.start_s, self.end_s
            ));
        }
        if self.end_s > duration_s {
            return Err(format!(
                "annotation for {} ends at {} past duration {}",
                self.video_id, self.end_s, duration_s
            ));
        }
        Ok(())
    }
}

/// A student's run of activity with no inactivity gap above the session gap.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub session_id: String,
    pub student_id: String,
    pub events: Vec<InteractionEvent>,
    pub wall_start: DateTime<Utc>,
    pub wall_end: DateTime<Utc>,
}
