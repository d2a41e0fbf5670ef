//! Player state machine that turns a session's raw events into played
//! segments and seek actions.
//!
//! The player starts paused, focused, at rate 1.0. An open segment tracks the
//! last *confirmed* position (from `play` or `heartbeat`). An observation that
//! arrives more than `heartbeat_timeout_s` after the last confirmation is not
//! trusted: the segment is cut at the confirmed position instead. Reported
//! end positions are clamped to what the elapsed wall time at the segment's
//! rate allows, so a segment never claims more video than could have played.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::calendar::CourseCalendar;
use crate::error::{CoreError, Result};
use crate::ingest::session::{events_by_student, reconstruct_sessions, DEFAULT_SESSION_GAP_S};
use crate::model::{EventKind, InteractionEvent, PlaybackSegment, SeekAction, SeekDirection, Session};

pub const DEFAULT_HEARTBEAT_TIMEOUT_S: u32 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionPolicy {
    pub session_gap_s: u32,
    pub heartbeat_timeout_s: u32,
}

impl Default for ReconstructionPolicy {
    fn default() -> Self {
        Self {
            session_gap_s: DEFAULT_SESSION_GAP_S,
            heartbeat_timeout_s: DEFAULT_HEARTBEAT_TIMEOUT_S,
        }
    }
}

/// Segments and seeks derived from some set of sessions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Activity {
    pub segments: Vec<PlaybackSegment>,
    pub seeks: Vec<SeekAction>,
}

impl Activity {
    pub fn extend(&mut self, other: Activity) {
        self.segments.extend(other.segments);
        self.seeks.extend(other.seeks);
    }
}

#[derive(Debug, Clone)]
struct OpenSegment {
    video_id: String,
    start_pos: f64,
    start_wall: DateTime<Utc>,
    rate: f64,
    in_focus: bool,
    confirmed_pos: f64,
    confirmed_wall: DateTime<Utc>,
}

impl OpenSegment {
    fn secs_since(from: DateTime<Utc>, to: DateTime<Utc>) -> f64 {
        (to - from).num_milliseconds().max(0) as f64 / 1000.0
    }

    /// Furthest position playback could have reached by `t`.
    fn reachable(&self, t: DateTime<Utc>) -> f64 {
        self.start_pos + Self::secs_since(self.start_wall, t) * self.rate
    }

    fn clamp(&self, pos: f64, t: DateTime<Utc>) -> f64 {
        pos.min(self.reachable(t)).max(self.confirmed_pos)
    }
}

struct Machine<'a> {
    session: &'a Session,
    calendar: &'a CourseCalendar,
    timeout_ms: i64,
    video: Option<String>,
    rate: f64,
    in_focus: bool,
    open: Option<OpenSegment>,
    out: Activity,
}

impl<'a> Machine<'a> {
    fn is_fresh(&self, open: &OpenSegment, t: DateTime<Utc>) -> bool {
        (t - open.confirmed_wall).num_milliseconds() <= self.timeout_ms
    }

    fn open_at(&mut self, video_id: &str, pos: f64, t: DateTime<Utc>) {
        self.open = Some(OpenSegment {
            video_id: video_id.to_string(),
            start_pos: pos,
            start_wall: t,
            rate: self.rate,
            in_focus: self.in_focus,
            confirmed_pos: pos,
            confirmed_wall: t,
        });
    }

    fn emit(&mut self, seg: OpenSegment, end_pos: f64, wall_end: DateTime<Utc>) -> Result<()> {
        if end_pos - seg.start_pos > 0.0 {
            self.out.segments.push(PlaybackSegment {
                student_id: self.session.student_id.clone(),
                video_id: seg.video_id,
                start_pos_s: seg.start_pos,
                end_pos_s: end_pos,
                rate: seg.rate,
                in_focus: seg.in_focus,
                wall_start: seg.start_wall,
                wall_end,
                day_index: self.calendar.day_index_of(seg.start_wall)?,
                session_id: self.session.session_id.clone(),
            });
        }
        Ok(())
    }

    /// Closes the open segment at the last confirmed position.
    fn close_confirmed(&mut self) -> Result<()> {
        if let Some(seg) = self.open.take() {
            let (pos, wall) = (seg.confirmed_pos, seg.confirmed_wall);
            self.emit(seg, pos, wall)?;
        }
        Ok(())
    }

    /// Closes the open segment using an observed position at `t`. Returns
    /// whether the observation was fresh.
    fn close_observed(&mut self, pos: f64, t: DateTime<Utc>) -> Result<bool> {
        let Some(seg) = self.open.take() else {
            return Ok(false);
        };
        if self.is_fresh(&seg, t) {
            let end = seg.clamp(pos, t);
            self.emit(seg, end, t)?;
            Ok(true)
        } else {
            let (pos, wall) = (seg.confirmed_pos, seg.confirmed_wall);
            self.emit(seg, pos, wall)?;
            Ok(false)
        }
    }

    /// Confirms playback progress; a stale confirmation restarts the segment.
    fn confirm(&mut self, e: &InteractionEvent) -> Result<()> {
        let fresh = match self.open.as_ref() {
            Some(seg) => self.is_fresh(seg, e.wall_time),
            None => return Ok(()),
        };
        if fresh {
            let seg = self.open.as_mut().expect("checked above");
            seg.confirmed_pos = seg.clamp(e.position_s, e.wall_time);
            seg.confirmed_wall = e.wall_time;
        } else {
            self.close_confirmed()?;
            self.open_at(&e.video_id, e.position_s, e.wall_time);
        }
        Ok(())
    }

    fn step(&mut self, e: &InteractionEvent) -> Result<()> {
        if self.video.as_deref() != Some(e.video_id.as_str()) {
            self.close_confirmed()?;
            self.video = Some(e.video_id.clone());
        }
        let playing = self.open.is_some();
        match e.kind {
            EventKind::Load => {
                self.close_confirmed()?;
            }
            EventKind::Play => {
                if playing && e.rate == self.rate {
                    self.confirm(e)?;
                } else {
                    self.close_observed(e.position_s, e.wall_time)?;
                    self.rate = e.rate;
                    self.open_at(&e.video_id, e.position_s, e.wall_time);
                }
            }
            EventKind::Heartbeat => self.confirm(e)?,
            EventKind::Pause | EventKind::Ended => {
                self.close_observed(e.position_s, e.wall_time)?;
            }
            EventKind::Seek => {
                let from = e.seek_from_s.ok_or_else(|| CoreError::SeekWithoutOrigin {
                    event_id: e.event_id.clone(),
                })?;
                let to = e.position_s;
                self.out.seeks.push(SeekAction {
                    student_id: self.session.student_id.clone(),
                    video_id: e.video_id.clone(),
                    wall_time: e.wall_time,
                    from_pos_s: from,
                    to_pos_s: to,
                    direction: if to > from {
                        SeekDirection::Forward
                    } else {
                        SeekDirection::Backward
                    },
                    day_index: self.calendar.day_index_of(e.wall_time)?,
                    session_id: self.session.session_id.clone(),
                });
                if playing {
                    self.close_observed(from, e.wall_time)?;
                    self.open_at(&e.video_id, to, e.wall_time);
                }
            }
            EventKind::RateChange => {
                if e.rate == self.rate {
                    self.confirm(e)?;
                } else {
                    self.rate = e.rate;
                    if playing {
                        self.close_observed(e.position_s, e.wall_time)?;
                        self.open_at(&e.video_id, e.position_s, e.wall_time);
                    }
                }
            }
            EventKind::Focus | EventKind::Blur => {
                let focused = e.kind == EventKind::Focus;
                if focused == self.in_focus {
                    self.confirm(e)?;
                } else {
                    self.in_focus = focused;
                    if playing {
                        self.close_observed(e.position_s, e.wall_time)?;
                        self.open_at(&e.video_id, e.position_s, e.wall_time);
                    }
                }
            }
        }
        Ok(())
    }
}

/// Replays one session through the player state machine.
pub fn derive_segments(
    session: &Session,
    calendar: &CourseCalendar,
    policy: &ReconstructionPolicy,
) -> Result<Activity> {
    if let Some(i) = session
        .events
        .windows(2)
        .position(|w| w[1].wall_time < w[0].wall_time)
    {
        return Err(CoreError::Unordered { index: i + 1 });
    }
    let mut m = Machine {
        session,
        calendar,
        timeout_ms: i64::from(policy.heartbeat_timeout_s) * 1000,
        video: None,
        rate: 1.0,
        in_focus: true,
        open: None,
        out: Activity::default(),
    };
    for e in &session.events {
        m.step(e)?;
    }
    m.close_confirmed()?;
    Ok(m.out)
}

/// Segments and seeks for an entire log: groups by student, reconstructs
/// sessions, and replays each one.
pub fn derive_activity(
    events: &[InteractionEvent],
    calendar: &CourseCalendar,
    policy: &ReconstructionPolicy,
) -> Result<Activity> {
    let mut all = Activity::default();
    for list in events_by_student(events).values() {
        for session in reconstruct_sessions(list, policy.session_gap_s)? {
            all.extend(derive_segments(&session, calendar, policy)?);
        }
    }
    Ok(all)
}
