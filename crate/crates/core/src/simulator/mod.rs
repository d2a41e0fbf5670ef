//! Synthetic cohorts of students driving a simulated player.
//!
//! Every student gets its own ChaCha stream derived from the run seed, so a
//! given `(cohort, catalog, rules, n_days, seed)` always yields the same log.
//! Contour followers read the timeline published at the start of each
//! simulated day, which closes the feedback loop.

mod bandwagon;
mod player;
mod profile;

pub use bandwagon::{bandwagon_experiment, bandwagon_log, BandwagonParams, BandwagonReport};
pub use profile::{BehaviorProfile, CohortSpec, CountDist, RateChoice, WatchStyle};

use std::collections::HashMap;

use chrono::{DateTime, TimeDelta, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analytics::{highest_plateau, PlateauParams};
use crate::catalog::Catalog;
use crate::config::CourseRules;
use crate::error::{CoreError, Result};
use crate::model::{BinScoreTimeline, InteractionEvent, VideoMeta};
use crate::scoring::recompute_all;
use player::{IdGen, Player};

/// Heartbeat period of the simulated player.
pub const HEARTBEAT_S: i64 = 10;

/// Earliest and latest local start of a study session, seconds after midnight.
const DAY_START_S: i64 = 8 * 3600;
const DAY_END_S: i64 = 22 * 3600;

struct Student<'a> {
    id: String,
    profile: &'a BehaviorProfile,
    rng: ChaCha8Rng,
    /// Planned session starts, ascending.
    plan: Vec<DateTime<Utc>>,
    busy_until: Option<DateTime<Utc>>,
}

fn plan_sessions<R: Rng>(
    profile: &BehaviorProfile,
    rules: &CourseRules,
    n_days: u32,
    rng: &mut R,
) -> Vec<DateTime<Utc>> {
    let mut plan = Vec::new();
    let start = rules.calendar.course_start;
    for week_start in (0..n_days).step_by(7) {
        let week_end = (week_start + 7).min(n_days);
        // a partial final week still receives the full weekly count
        for _ in 0..profile.sessions_per_week.sample(rng) {
            let day = rng.random_range(week_start..week_end);
            let date = start + TimeDelta::days(i64::from(day));
            let offset = rng.random_range(DAY_START_S..DAY_END_S);
            plan.push(rules.calendar.midnight(date) + TimeDelta::seconds(offset));
        }
    }
    plan.sort();
    plan
}

/// Simulates `n_days` of the cohort from the course start.
pub fn simulate_cohort(
    cohort: &CohortSpec,
    catalog: &Catalog,
    rules: &CourseRules,
    n_days: u32,
    seed: u64,
) -> Result<Vec<InteractionEvent>> {
    cohort.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut students: Vec<Student> = Vec::new();
    for profile in &cohort.profiles {
        for i in 0..profile.count {
            let mut rng = ChaCha8Rng::seed_from_u64(master.random());
            let plan = plan_sessions(profile, rules, n_days, &mut rng);
            students.push(Student {
                id: format!("{}-{i:03}", profile.name),
                profile,
                rng,
                plan,
                busy_until: None,
            });
        }
    }
    let followers = cohort
        .profiles
        .iter()
        .any(|p| p.watch_style == WatchStyle::ContourFollower && p.count > 0);

    let mut ids = IdGen::new(seed);
    let mut events: Vec<InteractionEvent> = Vec::new();
    for day in 0..n_days {
        let date = rules.calendar.course_start + TimeDelta::days(i64::from(day));
        let next_midnight = rules.calendar.midnight(date + TimeDelta::days(1));
        let available: Vec<&VideoMeta> = catalog.iter().filter(|v| v.published_at <= date).collect();
        if available.is_empty() {
            continue;
        }
        let published: HashMap<String, BinScoreTimeline> = if followers {
            recompute_all(catalog, &events, rules.calendar.midnight(date), rules, date)?
                .into_iter()
                .map(|t| (t.video_id.clone(), t))
                .collect()
        } else {
            HashMap::new()
        };
        for s in &mut students {
            let todays: Vec<DateTime<Utc>> = s
                .plan
                .iter()
                .copied()
                .filter(|&t| rules.calendar.midnight(date) <= t && t < next_midnight)
                .collect();
            for planned in todays {
                let start = match s.busy_until {
                    Some(b) if b + TimeDelta::seconds(60) > planned => b + TimeDelta::seconds(60),
                    _ => planned,
                };
                let video = available[s.rng.random_range(0..available.len())];
                let mut player = Player::new(&s.id, video, start, s.profile.focus_loss_prob, &mut ids);
                run_session(&mut player, s.profile, published.get(&video.video_id), &mut s.rng);
                s.busy_until = Some(player.now());
                events.extend(player.finish());
            }
        }
    }
    events.sort_by_key(|e| e.wall_time);
    Ok(events)
}

fn run_session<R: Rng>(
    p: &mut Player,
    profile: &BehaviorProfile,
    published: Option<&BinScoreTimeline>,
    rng: &mut R,
) {
    let dur = p.duration();
    let rate = profile.sample_rate(rng);
    p.load(0.0);
    p.idle(rng.random_range(1..5));
    if rate != 1.0 {
        p.set_rate(rate);
    }
    match profile.watch_style {
        WatchStyle::Linear => {
            p.play();
            p.play_to(dur, rng);
        }
        WatchStyle::Skipper => {
            p.play();
            while p.pos() < dur {
                let chunk = rng.random_range(20.0..90.0);
                p.play_to((p.pos() + chunk).min(dur), rng);
                if p.pos() < dur && rng.random_bool(0.6) {
                    let jump = rng.random_range(30.0..120.0);
                    if p.pos() + jump < dur {
                        p.seek((p.pos() + jump).floor());
                    }
                }
            }
        }
        WatchStyle::Replayer => {
            p.play();
            let mut replays = 0;
            while p.pos() < dur {
                let chunk = rng.random_range(30.0..90.0);
                p.play_to((p.pos() + chunk).min(dur), rng);
                if p.pos() < dur && replays < 5 && rng.random_bool(0.3) {
                    let back = rng.random_range(10.0..40.0);
                    p.seek((p.pos() - back).max(0.0).floor());
                    replays += 1;
                }
            }
        }
        WatchStyle::Distracted => {
            p.play();
            let stop = dur * rng.random_range(0.2..1.0);
            while p.pos() < stop {
                let chunk = rng.random_range(30.0..120.0);
                p.play_to((p.pos() + chunk).min(stop), rng);
                if p.pos() < stop && rng.random_bool(0.5) {
                    p.pause();
                    p.idle(rng.random_range(15..300));
                    p.play();
                }
            }
        }
        WatchStyle::ContourFollower => {
            let target = published.and_then(|t| {
                highest_plateau(t, PlateauParams::default().threshold_frac, PlateauParams::default().min_len_s)
                    .into_iter()
                    .max_by(|a, b| a.level.total_cmp(&b.level).then(b.start_s.cmp(&a.start_s)))
            });
            let (from, to) = match target {
                Some(pl) => (
                    f64::from(pl.start_s),
                    (f64::from(pl.end_s) + rng.random_range(0.0..15.0)).min(dur),
                ),
                None => {
                    // cold start: sample a random part
                    let len = rng.random_range(30.0..180.0f64).min(dur);
                    let from = rng.random_range(0.0..=(dur - len)).floor();
                    (from, (from + len).min(dur))
                }
            };
            if from > 0.0 {
                p.seek(from);
            }
            p.play();
            p.play_to(to, rng);
        }
    }
    if p.pos() >= dur {
        p.ended();
    } else {
        p.pause();
    }
}

/// Rejects cohorts that cannot produce any event.
pub fn check_inputs(cohort: &CohortSpec, catalog: &Catalog, n_days: u32) -> Result<()> {
    cohort.validate()?;
    if catalog.is_empty() {
        return Err(CoreError::Config("catalog has no videos".into()));
    }
    if n_days == 0 {
        return Err(CoreError::Config("days must be positive".into()));
    }
    Ok(())
}

