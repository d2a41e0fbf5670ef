//! A simulated HTML5 player that emits the events a real client would send.
//!
//! Wall time advances in whole milliseconds and positions follow
//! `anchor + elapsed * rate`, the same relation the reconstruction uses to
//! bound reported positions.

use chrono::{DateTime, TimeDelta, Utc};
use rand::Rng;

use super::HEARTBEAT_S;
use crate::model::{EventKind, InteractionEvent, VideoMeta};

pub struct IdGen {
    seed: u64,
    next: u64,
}

impl IdGen {
    pub fn new(seed: u64) -> Self {
        Self { seed, next: 0 }
    }

    fn next_id(&mut self) -> String {
        self.next += 1;
        format!("sim-{}-{:07}", self.seed, self.next)
    }
}

pub struct Player<'a> {
    student_id: String,
    video_id: String,
    duration: f64,
    t: DateTime<Utc>,
    rate: f64,
    playing: bool,
    focused: bool,
    pos: f64,
    anchor_pos: f64,
    anchor_t: DateTime<Utc>,
    last_beat: DateTime<Utc>,
    refocus_at: Option<DateTime<Utc>>,
    /// Chance of losing focus at each heartbeat.
    blur_prob: f64,
    events: Vec<InteractionEvent>,
    ids: &'a mut IdGen,
}

impl<'a> Player<'a> {
    pub fn new(
        student_id: &str,
        video: &VideoMeta,
        start: DateTime<Utc>,
        focus_loss_per_min: f64,
        ids: &'a mut IdGen,
    ) -> Self {
        let per_beat = 1.0 - (1.0 - focus_loss_per_min).powf(HEARTBEAT_S as f64 / 60.0);
        Self {
            student_id: student_id.to_string(),
            video_id: video.video_id.clone(),
            duration: f64::from(video.duration_s),
            t: start,
            rate: 1.0,
            playing: false,
            focused: true,
            pos: 0.0,
            anchor_pos: 0.0,
            anchor_t: start,
            last_beat: start,
            refocus_at: None,
            blur_prob: per_beat.clamp(0.0, 1.0),
            events: Vec::new(),
            ids,
        }
    }

    pub fn now(&self) -> DateTime<Utc> {
        self.t
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn pos(&self) -> f64 {
        self.pos
    }

    pub fn finish(self) -> Vec<InteractionEvent> {
        self.events
    }

    fn emit(&mut self, kind: EventKind, position_s: f64, seek_from_s: Option<f64>) {
        let event_id = self.ids.next_id();
        self.events.push(InteractionEvent {
            event_id,
            student_id: self.student_id.clone(),
            video_id: self.video_id.clone(),
            wall_time: self.t,
            kind,
            position_s,
            rate: self.rate,
            seek_from_s,
        });
    }

    fn reanchor(&mut self) {
        self.anchor_pos = self.pos;
        self.anchor_t = self.t;
        self.last_beat = self.t;
    }

    pub fn load(&mut self, pos: f64) {
        self.playing = false;
        self.pos = pos;
        self.emit(EventKind::Load, pos, None);
    }

    /// Lets wall time pass while paused.
    pub fn idle(&mut self, secs: i64) {
        debug_assert!(!self.playing);
        self.t += TimeDelta::seconds(secs);
    }

    pub fn set_rate(&mut self, rate: f64) {
        self.rate = rate;
        self.emit(EventKind::RateChange, self.pos, None);
        self.reanchor();
    }

    pub fn play(&mut self) {
        self.playing = true;
        self.emit(EventKind::Play, self.pos, None);
        self.reanchor();
    }

    fn restore_focus(&mut self) {
        if !self.focused {
            self.focused = true;
            self.refocus_at = None;
            self.emit(EventKind::Focus, self.pos, None);
            self.reanchor();
        }
    }

    pub fn pause(&mut self) {
        self.restore_focus();
        self.playing = false;
        self.emit(EventKind::Pause, self.pos, None);
    }

    pub fn ended(&mut self) {
        self.restore_focus();
        self.playing = false;
        self.emit(EventKind::Ended, self.pos, None);
    }

    pub fn seek(&mut self, to: f64) {
        let from = self.pos;
        self.pos = to.clamp(0.0, self.duration);
        self.emit(EventKind::Seek, self.pos, Some(from));
        self.reanchor();
    }

    /// Plays until `target`, sending heartbeats and focus changes on the way.
    pub fn play_to<R: Rng>(&mut self, target: f64, rng: &mut R) {
        debug_assert!(self.playing);
        let target = target.min(self.duration);
        while self.pos < target {
            let need_ms = ((target - self.anchor_pos) / self.rate * 1000.0).ceil() as i64;
            let reach = self.anchor_t + TimeDelta::milliseconds(need_ms.max(1));
            let beat = self.last_beat + TimeDelta::seconds(HEARTBEAT_S);
            let next = [Some(reach), Some(beat), self.refocus_at]
                .into_iter()
                .flatten()
                .min()
                .expect("non-empty");
            self.t = next.max(self.t);
            if self.t >= reach {
                self.pos = target;
                break;
            }
            let elapsed = (self.t - self.anchor_t).num_milliseconds() as f64 / 1000.0;
            self.pos = (self.anchor_pos + elapsed * self.rate).min(target);
            if self.refocus_at == Some(self.t) {
                self.restore_focus();
            } else {
                self.emit(EventKind::Heartbeat, self.pos, None);
                self.last_beat = self.t;
                if self.focused && self.blur_prob > 0.0 && rng.random_bool(self.blur_prob) {
                    self.focused = false;
                    self.emit(EventKind::Blur, self.pos, None);
                    self.reanchor();
                    self.refocus_at = Some(self.t + TimeDelta::seconds(rng.random_range(10..60)));
                }
            }
        }
    }
}
