//! Test-only oracles and log generators. Nothing here calls into the
//! library's ingest or scoring code paths.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use contour_core::model::{EventKind, InteractionEvent, VideoMeta};
use contour_core::{Catalog, WeightConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn course_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2021, 9, 6).unwrap()
}

pub fn start_instant() -> DateTime<Utc> {
    Utc.from_utc_datetime(&course_start().and_hms_opt(0, 0, 0).unwrap())
}

pub fn video(id: &str, duration_s: u32) -> VideoMeta {
    VideoMeta {
        video_id: id.into(),
        title: format!("Video {id}"),
        duration_s,
        published_at: course_start(),
        course_id: "c1".into(),
        media_url: None,
        seed_annotation: None,
    }
}

// ---------------------------------------------------------------------------
// Second-by-second replay oracle
// ---------------------------------------------------------------------------

const STALE_S: i64 = 30;
const GAP_S: i64 = 600;

fn sec(t: DateTime<Utc>) -> i64 {
    let ms = (t - start_instant()).num_milliseconds();
    assert_eq!(ms % 1000, 0, "oracle expects whole-second timestamps");
    ms / 1000
}

fn quarters(p: f64) -> i64 {
    let q = p * 4.0;
    assert_eq!(q.fract(), 0.0, "oracle expects quarter-second positions");
    q as i64
}

fn quarters_per_s(rate: f64) -> i64 {
    quarters(rate)
}

struct OracleSeg {
    video: String,
    start_q: i64,
    start_t: i64,
    rate_q: i64,
    focus: bool,
    playhead_q: i64,
    conf_q: i64,
    conf_t: i64,
    cells: Vec<i64>,
}

struct OracleSeek {
    video: String,
    from_q: i64,
    to_q: i64,
    t: i64,
}

struct Tally<'a> {
    weights: &'a WeightConfig,
    durations: &'a HashMap<String, u32>,
    raw: HashMap<String, Vec<f64>>,
}

impl Tally<'_> {
    fn mult(&self, t: i64) -> f64 {
        let day = t.div_euclid(86_400);
        1.0 + self.weights.decay_slope_per_day * day as f64
    }

    fn commit(&mut self, seg: OracleSeg, end_q: i64) {
        let mut per_bin: BTreeMap<i64, u32> = BTreeMap::new();
        for &c in seg.cells.iter().filter(|&&c| c >= seg.start_q && c < end_q) {
            *per_bin.entry(c.div_euclid(4)).or_default() += 1;
        }
        let w = self.weights;
        let inc = match (seg.rate_q, seg.focus) {
            (q, true) if q <= 5 => w.play_focused,
            (q, false) if q <= 5 => w.play_unfocused,
            (q, true) if q <= 7 => w.fast15_focused,
            (q, false) if q <= 7 => w.fast15_unfocused,
            (_, true) => w.fast2x_focused,
            (_, false) => w.fast2x_unfocused,
        } * self.mult(seg.start_t);
        let dur = self.durations[&seg.video] as i64;
        let raw = self.raw.get_mut(&seg.video).unwrap();
        for (bin, n) in per_bin {
            if n >= 2 && bin < dur {
                raw[bin as usize] += inc;
            }
        }
    }

    fn seek(&mut self, s: &OracleSeek) {
        let dur = self.durations[&s.video] as i64;
        let m = self.mult(s.t);
        let w = *self.weights;
        let from_bin = s.from_q.div_euclid(4);
        let to_bin = s.to_q.div_euclid(4);
        let raw = self.raw.get_mut(&s.video).unwrap();
        for bin in 0..dur {
            if s.to_q < s.from_q {
                if bin >= to_bin && bin < from_bin {
                    raw[bin as usize] += w.replay_bonus * m;
                }
            } else {
                let k = bin - from_bin;
                let p = if (0..60).contains(&k) {
                    w.skip_penalty_min1
                } else if (60..120).contains(&k) {
                    w.skip_penalty_min2
                } else if (120..180).contains(&k) {
                    w.skip_penalty_min3
                } else {
                    0.0
                };
                raw[bin as usize] += p * m;
            }
        }
    }
}

struct Player {
    video: Option<String>,
    rate_q: i64,
    focus: bool,
    open: Option<OracleSeg>,
}

impl Player {
    fn start(&mut self, video: &str, q: i64, t: i64) {
        self.open = Some(OracleSeg {
            video: video.to_string(),
            start_q: q,
            start_t: t,
            rate_q: self.rate_q,
            focus: self.focus,
            playhead_q: q,
            conf_q: q,
            conf_t: t,
            cells: Vec::new(),
        });
    }

    fn end_confirmed(&mut self, tally: &mut Tally) {
        if let Some(seg) = self.open.take() {
            let end = seg.conf_q;
            tally.commit(seg, end);
        }
    }

    fn end_observed(&mut self, q: i64, t: i64, tally: &mut Tally) {
        if let Some(seg) = self.open.take() {
            let end = if t - seg.conf_t <= STALE_S {
                q.min(seg.playhead_q).max(seg.conf_q)
            } else {
                seg.conf_q
            };
            tally.commit(seg, end);
        }
    }

    fn confirm(&mut self, video: &str, q: i64, t: i64, tally: &mut Tally) {
        let Some(seg) = self.open.as_mut() else { return };
        if t - seg.conf_t <= STALE_S {
            seg.conf_q = q.min(seg.playhead_q).max(seg.conf_q);
            seg.conf_t = t;
        } else {
            self.end_confirmed(tally);
            self.start(video, q, t);
        }
    }
}

/// Independent raw-score computation: walks wall time one second at a time,
/// marking quarter-second video cells as they play, and scores bins that
/// collected at least two committed quarters.
pub fn oracle_raw(
    events: &[InteractionEvent],
    catalog: &Catalog,
    weights: &WeightConfig,
    horizon: DateTime<Utc>,
) -> HashMap<String, Vec<f64>> {
    let durations: HashMap<String, u32> = catalog
        .iter()
        .map(|v| (v.video_id.clone(), v.duration_s))
        .collect();
    let mut tally = Tally {
        weights,
        durations: &durations,
        raw: catalog
            .iter()
            .map(|v| (v.video_id.clone(), vec![0.0; v.duration_s as usize]))
            .collect(),
    };

    let mut students: Vec<&str> = events.iter().map(|e| e.student_id.as_str()).collect();
    students.sort();
    students.dedup();

    for student in students {
        let mut mine: Vec<&InteractionEvent> = events
            .iter()
            .filter(|e| e.student_id == student && e.wall_time <= horizon)
            .collect();
        mine.sort_by_key(|e| e.wall_time);

        let mut sessions: Vec<Vec<&InteractionEvent>> = Vec::new();
        for e in mine {
            let split = match sessions.last().and_then(|s| s.last()) {
                Some(prev) => sec(e.wall_time) - sec(prev.wall_time) > GAP_S,
                None => true,
            };
            if split {
                sessions.push(Vec::new());
            }
            sessions.last_mut().unwrap().push(e);
        }

        for session in sessions {
            let mut p = Player {
                video: None,
                rate_q: 4,
                focus: true,
                open: None,
            };
            let t0 = sec(session[0].wall_time);
            let t1 = sec(session[session.len() - 1].wall_time);
            let mut idx = 0;
            for t in t0..=t1 {
                if let Some(seg) = p.open.as_mut() {
                    if t > seg.start_t {
                        for k in 0..seg.rate_q {
                            seg.cells.push(seg.playhead_q + k);
                        }
                        seg.playhead_q += seg.rate_q;
                    }
                }
                while idx < session.len() && sec(session[idx].wall_time) == t {
                    oracle_step(&mut p, session[idx], t, &mut tally);
                    idx += 1;
                }
            }
            p.end_confirmed(&mut tally);
        }
    }
    tally.raw
}

fn oracle_step(p: &mut Player, e: &InteractionEvent, t: i64, tally: &mut Tally) {
    if p.video.as_deref() != Some(e.video_id.as_str()) {
        p.end_confirmed(tally);
        p.video = Some(e.video_id.clone());
    }
    let q = quarters(e.position_s);
    let playing = p.open.is_some();
    match e.kind {
        EventKind::Load => p.end_confirmed(tally),
        EventKind::Play => {
            let r = quarters_per_s(e.rate);
            if playing && r == p.rate_q {
                p.confirm(&e.video_id, q, t, tally);
            } else {
                p.end_observed(q, t, tally);
                p.rate_q = r;
                p.start(&e.video_id, q, t);
            }
        }
        EventKind::Heartbeat => p.confirm(&e.video_id, q, t, tally),
        EventKind::Pause | EventKind::Ended => p.end_observed(q, t, tally),
        EventKind::Seek => {
            let from_q = quarters(e.seek_from_s.unwrap());
            tally.seek(&OracleSeek {
                video: e.video_id.clone(),
                from_q,
                to_q: q,
                t,
            });
            if playing {
                p.end_observed(from_q, t, tally);
                p.start(&e.video_id, q, t);
            }
        }
        EventKind::RateChange => {
            let r = quarters_per_s(e.rate);
            if r == p.rate_q {
                p.confirm(&e.video_id, q, t, tally);
            } else {
                p.rate_q = r;
                if playing {
                    p.end_observed(q, t, tally);
                    p.start(&e.video_id, q, t);
                }
            }
        }
        EventKind::Focus | EventKind::Blur => {
            let f = e.kind == EventKind::Focus;
            if f == p.focus {
                p.confirm(&e.video_id, q, t, tally);
            } else {
                p.focus = f;
                if playing {
                    p.end_observed(q, t, tally);
                    p.start(&e.video_id, q, t);
                }
            }
        }
    }
}

/// Session count by a linear scan over sorted gaps.
pub fn oracle_session_count(times_s: &[i64], gap_s: i64) -> usize {
    if times_s.is_empty() {
        return 0;
    }
    1 + times_s.windows(2).filter(|w| w[1] - w[0] > gap_s).count()
}

// ---------------------------------------------------------------------------
// Random but physically consistent logs
// ---------------------------------------------------------------------------

pub struct GenParams {
    pub max_events: usize,
    pub max_students: usize,
    pub max_videos: usize,
    pub max_duration: u32,
    pub max_day: i64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            max_events: 200,
            max_students: 4,
            max_videos: 3,
            max_duration: 120,
            max_day: 12,
        }
    }
}

const RATES: [f64; 5] = [0.75, 1.0, 1.25, 1.5, 2.0];

struct GenPlayer<'a> {
    rng: &'a mut ChaCha8Rng,
    student: String,
    t: i64,
    video: usize,
    durations: &'a [u32],
    pos_q: i64,
    rate: f64,
    playing: bool,
    focus: bool,
    since_hb: i64,
    out: Vec<InteractionEvent>,
    next_id: &'a mut usize,
}

impl GenPlayer<'_> {
    fn dur_q(&self) -> i64 {
        self.durations[self.video] as i64 * 4
    }

    fn emit(&mut self, kind: EventKind, seek_from_q: Option<i64>) {
        *self.next_id += 1;
        self.out.push(InteractionEvent {
            event_id: format!("g{}", self.next_id),
            student_id: self.student.clone(),
            video_id: format!("v{}", self.video),
            wall_time: start_instant() + Duration::seconds(self.t),
            kind,
            position_s: self.pos_q as f64 / 4.0,
            rate: self.rate,
            seek_from_s: seek_from_q.map(|q| q as f64 / 4.0),
        });
    }

    /// Lets wall time pass; while playing, emits heartbeats (unless
    /// `silent`) and stops at the end of the video.
    fn wait(&mut self, secs: i64, silent: bool) {
        for _ in 0..secs {
            self.t += 1;
            if self.playing {
                let step = quarters_per_s(self.rate);
                self.pos_q = (self.pos_q + step).min(self.dur_q());
                self.since_hb += 1;
                if self.pos_q >= self.dur_q() {
                    self.emit(EventKind::Ended, None);
                    self.playing = false;
                    return;
                }
                if !silent && self.since_hb >= 10 {
                    self.emit(EventKind::Heartbeat, None);
                    self.since_hb = 0;
                }
            }
        }
    }

    fn random_target(&mut self) -> i64 {
        loop {
            let q = self.rng.random_range(0..self.dur_q());
            if q != self.pos_q {
                return q;
            }
        }
    }

    fn act(&mut self) {
        let roll = self.rng.random_range(0..100);
        match roll {
            0..=19 => {
                if !self.playing && self.pos_q < self.dur_q() {
                    self.emit(EventKind::Play, None);
                    self.playing = true;
                    self.since_hb = 0;
                } else {
                    let n = self.rng.random_range(0..=25);
                    self.wait(n, false);
                }
            }
            20..=44 => {
                let n = self.rng.random_range(0..=40);
                self.wait(n, false);
            }
            45..=52 => {
                if self.playing {
                    self.emit(EventKind::Pause, None);
                    self.playing = false;
                }
            }
            53..=62 => {
                let from = self.pos_q;
                let to = self.random_target();
                self.pos_q = to;
                self.emit(EventKind::Seek, Some(from));
                self.since_hb = 0;
            }
            63..=69 => {
                self.rate = RATES[self.rng.random_range(0..RATES.len())];
                self.emit(EventKind::RateChange, None);
                self.since_hb = 0;
            }
            70..=76 => {
                // occasionally re-announce the same focus state
                if self.rng.random_bool(0.8) {
                    self.focus = !self.focus;
                }
                let kind = if self.focus {
                    EventKind::Focus
                } else {
                    EventKind::Blur
                };
                self.emit(kind, None);
            }
            77..=81 => {
                // heartbeats lost while the player keeps going
                let n = self.rng.random_range(31..=120);
                self.wait(n, true);
            }
            82..=85 => {
                self.t += self.rng.random_range(601..=3000);
                self.playing = false;
            }
            86..=90 => {
                self.video = self.rng.random_range(0..self.durations.len());
                self.pos_q = 0;
                self.playing = false;
                self.emit(EventKind::Load, None);
            }
            91..=93 => {
                if self.playing {
                    self.emit(EventKind::Play, None);
                    self.since_hb = 0;
                }
            }
            _ => {
                self.t += 86_400 * self.rng.random_range(1..=2);
                self.playing = false;
            }
        }
    }
}

/// A random catalog plus a log of at most `max_events` events in arrival
/// order (students interleaved by wall time).
pub fn random_log(seed: u64, params: &GenParams) -> (Catalog, Vec<InteractionEvent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_videos = rng.random_range(1..=params.max_videos);
    let durations: Vec<u32> = (0..n_videos)
        .map(|_| rng.random_range(5..=params.max_duration))
        .collect();
    let catalog: Catalog = durations
        .iter()
        .enumerate()
        .map(|(i, &d)| video(&format!("v{i}"), d))
        .collect();

    let n_students = rng.random_range(1..=params.max_students);
    let budget = rng.random_range(1..=params.max_events);
    let per_student = (budget / n_students).max(1);
    let mut next_id = 0;
    let mut all = Vec::new();
    for s in 0..n_students {
        let mut sub = ChaCha8Rng::seed_from_u64(rng.random());
        let start = rng.random_range(0..params.max_day) * 86_400 + rng.random_range(0..80_000);
        let video = rng.random_range(0..n_videos);
        let mut p = GenPlayer {
            rng: &mut sub,
            student: format!("s{s}"),
            t: start,
            video,
            durations: &durations,
            pos_q: 0,
            rate: 1.0,
            playing: false,
            focus: true,
            since_hb: 0,
            out: Vec::new(),
            next_id: &mut next_id,
        };
        p.emit(EventKind::Load, None);
        while p.out.len() < per_student {
            p.act();
        }
        p.out.truncate(per_student);
        all.extend(p.out);
    }
    all.sort_by_key(|e| e.wall_time);
    (catalog, all)
}
