//! Score inflation by a single student replaying one second over and over.
//!
//! Honest watchers play a designated region once per honest day. The
//! attacker opens the video at the attacked bin and, `k` times, plays one
//! second and seeks back to its start. The experiment reports whether the
//! highest plateau has left the honest region for the attacked bin, and the
//! smallest `k` for which that happens.

use chrono::{DateTime, TimeDelta, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::player::{IdGen, Player};
use crate::analytics::{highest_plateau, Plateau, PlateauParams};
use crate::config::CourseRules;
use crate::error::{CoreError, Result};
use crate::model::{InteractionEvent, VideoMeta};
use crate::scoring::recompute_timeline;

/// Upper bound on `k`; the attack must fit inside one day.
pub const MAX_REPLAYS: u32 = 60_000;

#[derive(Debug, Clone, PartialEq)]
pub struct BandwagonParams {
    pub video: VideoMeta,
    pub honest_n: u32,
    /// `[start_s, end_s)` watched by every honest student.
    pub honest_region: (u32, u32),
    pub honest_days: Vec<u32>,
    pub attack_bin: u32,
    pub attack_day: u32,
    pub plateau: PlateauParams,
    pub seed: u64,
}

impl BandwagonParams {
    /// Honest watchers of `[300, 360)` on day 0, attack on bin 100 on day 0.
    pub fn new(video: VideoMeta, honest_n: u32) -> Self {
        Self {
            video,
            honest_n,
            honest_region: (300, 360),
            honest_days: vec![0],
            attack_bin: 100,
            attack_day: 0,
            plateau: PlateauParams::default(),
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let (s, e) = self.honest_region;
        let dur = self.video.duration_s;
        if !(s < e && e <= dur) {
            return Err(CoreError::Config(format!("honest region {s}..{e} outside video")));
        }
        if self.attack_bin >= dur || (s..e).contains(&self.attack_bin) {
            return Err(CoreError::Config("attack bin must be inside the video and outside the honest region".into()));
        }
        Ok(())
    }

    /// Midnight after the last simulated day.
    fn horizon(&self, rules: &CourseRules) -> DateTime<Utc> {
        let last = self.honest_days.iter().copied().max().unwrap_or(0).max(self.attack_day);
        day_midnight(rules, last + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwagonReport {
    pub replays: u32,
    pub plateau_moved: bool,
    /// Bins whose raw score differs from the honest-only timeline.
    pub bins_affected: usize,
    pub plateaus: Vec<Plateau>,
    /// Smallest `k` that moves the plateau, if any up to [`MAX_REPLAYS`].
    pub critical_k: Option<u32>,
}

fn day_midnight(rules: &CourseRules, day: u32) -> DateTime<Utc> {
    rules
        .calendar
        .midnight(rules.calendar.course_start + TimeDelta::days(i64::from(day)))
}

/// Honest and attacker events for `k` replays (no attacker when `k == 0`).
pub fn bandwagon_log(params: &BandwagonParams, k: u32, rules: &CourseRules) -> Result<Vec<InteractionEvent>> {
    params.validate()?;
    if k > MAX_REPLAYS {
        return Err(CoreError::Config(format!("k must be at most {MAX_REPLAYS}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut ids = IdGen::new(params.seed);
    let mut events = Vec::new();
    let (s, e) = params.honest_region;
    for &day in &params.honest_days {
        for i in 0..params.honest_n {
            let start = day_midnight(rules, day) + TimeDelta::seconds(rng.random_range(9 * 3600..18 * 3600));
            let mut p = Player::new(&format!("honest-{i:03}"), &params.video, start, 0.0, &mut ids);
            p.load(f64::from(s));
            p.play();
            p.play_to(f64::from(e), &mut rng);
            p.pause();
            events.extend(p.finish());
        }
    }
    if k > 0 {
        let b = f64::from(params.attack_bin);
        let start = day_midnight(rules, params.attack_day) + TimeDelta::hours(1);
        let mut p = Player::new("attacker", &params.video, start, 0.0, &mut ids);
        p.load(b);
        p.play();
        for _ in 0..k {
            p.play_to(b + 1.0, &mut rng);
            p.seek(b);
        }
        p.play_to(b + 1.0, &mut rng);
        p.pause();
        events.extend(p.finish());
    }
    events.sort_by_key(|e| e.wall_time);
    Ok(events)
}

struct Outcome {
    moved: bool,
    raw: Vec<f64>,
    plateaus: Vec<Plateau>,
}

fn run(params: &BandwagonParams, k: u32, rules: &CourseRules) -> Result<Outcome> {
    let events = bandwagon_log(params, k, rules)?;
    let horizon = params.horizon(rules);
    let tl = recompute_timeline(&params.video, &events, horizon, rules, rules.calendar.local_date(horizon))?;
    let plateaus = highest_plateau(&tl, params.plateau.threshold_frac, params.plateau.min_len_s);
    let (s, e) = params.honest_region;
    let on_attack = plateaus
        .iter()
        .any(|p| (p.start_s..p.end_s).contains(&params.attack_bin));
    let on_honest = plateaus.iter().any(|p| p.start_s < e && s < p.end_s);
    Ok(Outcome {
        moved: on_attack && !on_honest,
        raw: tl.raw,
        plateaus,
    })
}

/// Smallest `k` that relocates the plateau. Relocation is monotone in `k`
/// since only the attacked bin's score grows, so a galloping then binary
/// search is exact.
fn critical_k(params: &BandwagonParams, rules: &CourseRules) -> Result<Option<u32>> {
    let mut hi = 1u32;
    while !run(params, hi, rules)?.moved {
        if hi == MAX_REPLAYS {
            return Ok(None);
        }
        hi = (hi * 2).min(MAX_REPLAYS);
    }
    let mut lo = hi / 2; // not moved (or zero)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if run(params, mid, rules)?.moved {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

pub fn bandwagon_experiment(params: &BandwagonParams, k: u32, rules: &CourseRules) -> Result<BandwagonReport> {
    let honest = run(params, 0, rules)?;
    let attacked = run(params, k, rules)?;
    let bins_affected = honest
        .raw
        .iter()
        .zip(&attacked.raw)
        .filter(|(a, b)| a != b)
        .count();
    Ok(BandwagonReport {
        replays: k,
        plateau_moved: attacked.moved,
        bins_affected,
        plateaus: attacked.plateaus,
        critical_k: critical_k(params, rules)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calendar::CourseCalendar;
    use chrono::NaiveDate;

    fn setup(honest_n: u32) -> (BandwagonParams, CourseRules) {
        let start = NaiveDate::from_ymd_opt(2021, 9, 6).unwrap();
        let video = VideoMeta {
            video_id: "v".into(),
            title: "v".into(),
            duration_s: 600,
            published_at: start,
            course_id: "c".into(),
            media_url: None,
            seed_annotation: None,
        };
        (BandwagonParams::new(video, honest_n), CourseRules::new(CourseCalendar::utc(start)))
    }

    #[test]
    fn no_attack_keeps_honest_plateau() {
        let (p, rules) = setup(20);
        let r = bandwagon_experiment(&p, 0, &rules).unwrap();
        assert!(!r.plateau_moved);
        assert_eq!(r.bins_affected, 0);
        assert_eq!((r.plateaus[0].start_s, r.plateaus[0].end_s), (300, 360));
    }

    #[test]
    fn attack_touches_one_bin() {
        let (p, rules) = setup(5);
        let r = bandwagon_experiment(&p, 3, &rules).unwrap();
        assert_eq!(r.bins_affected, 1);
    }

    #[test]
    fn attack_in_honest_region_rejected() {
        let (mut p, rules) = setup(5);
        p.attack_bin = 310;
        assert!(bandwagon_log(&p, 1, &rules).is_err());
    }
}
