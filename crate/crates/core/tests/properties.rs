mod common;

use chrono::{Duration, TimeDelta};
use common::{course_start, oracle_session_count, random_log, start_instant, video, GenParams};
use contour_core::analytics::coverage;
use contour_core::ingest::{derive_activity, reconstruct_sessions, sessions_for_log};
use contour_core::model::{EventKind, InteractionEvent};
use contour_core::scoring::{normalize_timeline, recompute_all};
use contour_core::{day_multiplier, Catalog, CourseCalendar, CourseRules, WeightConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rules() -> CourseRules {
    CourseRules::new(CourseCalendar::utc(course_start()))
}

fn raw_by_video(catalog: &Catalog, events: &[InteractionEvent], rules: &CourseRules) -> Vec<Vec<f64>> {
    let horizon = start_instant() + Duration::days(400);
    recompute_all(catalog, events, horizon, rules, course_start())
        .unwrap()
        .into_iter()
        .map(|t| t.raw)
        .collect()
}

#[test]
fn segments_respect_wall_time_and_range() {
    let r = rules();
    for seed in 0..100 {
        let (catalog, events) = random_log(seed, &GenParams::default());
        let a = derive_activity(&events, &r.calendar, &r.policy).unwrap();
        for s in &a.segments {
            let dur = f64::from(catalog.get(&s.video_id).unwrap().duration_s);
            assert!(0.0 <= s.start_pos_s && s.start_pos_s < s.end_pos_s && s.end_pos_s <= dur);
            let wall = (s.wall_end - s.wall_start).num_milliseconds() as f64 / 1000.0;
            assert!(s.video_len_s() <= wall * s.rate + 1e-9, "seed {seed}: {s:?}");
        }
        // one student's segments never overlap in wall time
        let mut by_student = a.segments.clone();
        by_student.sort_by(|x, y| (&x.student_id, x.wall_start).cmp(&(&y.student_id, y.wall_start)));
        for w in by_student.windows(2) {
            if w[0].student_id == w[1].student_id {
                assert!(w[0].wall_end <= w[1].wall_start, "seed {seed}");
            }
        }
    }
}

/// Events of different students may arrive in any interleaving; each
/// student's own events keep their relative order.
#[test]
fn derivation_ignores_cross_student_interleaving() {
    let r = rules();
    for seed in 0..50 {
        let (catalog, events) = random_log(seed, &GenParams::default());
        let mut queues: Vec<std::collections::VecDeque<InteractionEvent>> = Vec::new();
        let mut index = std::collections::HashMap::new();
        for e in &events {
            let q = *index.entry(e.student_id.clone()).or_insert_with(|| {
                queues.push(Default::default());
                queues.len() - 1
            });
            queues[q].push_back(e.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mixed = Vec::new();
        while queues.iter().any(|q| !q.is_empty()) {
            let live: Vec<usize> = (0..queues.len()).filter(|&i| !queues[i].is_empty()).collect();
            let pick = live[rng.random_range(0..live.len())];
            mixed.push(queues[pick].pop_front().unwrap());
        }
        assert_eq!(raw_by_video(&catalog, &events, &r), raw_by_video(&catalog, &mixed, &r));
    }
}

#[test]
fn scores_add_across_students() {
    let r = rules();
    for seed in 0..100 {
        let (catalog, events) = random_log(seed, &GenParams::default());
        let (a, b): (Vec<_>, Vec<_>) = events.iter().cloned().partition(|e| e.student_id.ends_with('0'));
        let all = raw_by_video(&catalog, &events, &r);
        let ra = raw_by_video(&catalog, &a, &r);
        let rb = raw_by_video(&catalog, &b, &r);
        for ((x, y), z) in all.iter().zip(&ra).zip(&rb) {
            for i in 0..x.len() {
                assert!((x[i] - (y[i] + z[i])).abs() <= 1e-9, "seed {seed}");
            }
        }
    }
}

#[test]
fn shifting_a_day_log_scales_by_the_multiplier() {
    let r = rules();
    let params = GenParams {
        max_day: 1,
        ..GenParams::default()
    };
    let mut checked = 0;
    for seed in 0..1000 {
        let (catalog, events) = random_log(seed, &params);
        if events.iter().any(|e| r.calendar.day_index_of(e.wall_time).unwrap() != 0) {
            continue;
        }
        checked += 1;
        let base = raw_by_video(&catalog, &events, &r);
        for shift in [1u32, 3, 9] {
            let moved: Vec<_> = events
                .iter()
                .cloned()
                .map(|mut e| {
                    e.wall_time += TimeDelta::days(i64::from(shift));
                    e
                })
                .collect();
            let scale = day_multiplier(shift, &r.weights) / day_multiplier(0, &r.weights);
            for (b, m) in base.iter().zip(raw_by_video(&catalog, &moved, &r)) {
                for i in 0..b.len() {
                    assert!((m[i] - b[i] * scale).abs() <= 1e-9, "seed {seed}");
                    // later usage never counts for less in magnitude
                    assert!(m[i].abs() >= b[i].abs());
                }
            }
        }
    }
    assert!(checked >= 30, "only {checked} single-day logs");
}

#[test]
fn normalization_invariant_under_weight_scaling() {
    let r = rules();
    for seed in 0..50 {
        let (catalog, events) = random_log(seed, &GenParams::default());
        let base = raw_by_video(&catalog, &events, &r);
        let doubled: [f64; 10] = WeightConfig::default().base_increments().map(|x| x * 2.0);
        let mut scaled_rules = r;
        scaled_rules.weights = WeightConfig::from_base_increments(doubled);
        let scaled = raw_by_video(&catalog, &events, &scaled_rules);
        for (b, s) in base.iter().zip(&scaled) {
            let nb = normalize_timeline(b);
            let ns = normalize_timeline(s);
            for i in 0..nb.len() {
                assert!((nb[i] - ns[i]).abs() <= 1e-12);
                assert!((s[i] - 2.0 * b[i]).abs() <= 1e-9);
            }
        }
    }
}

#[test]
fn session_count_matches_gap_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let v = video("v", 60);
    for _ in 0..300 {
        let n = rng.random_range(1..40);
        let mut t = 0i64;
        let mut times = Vec::new();
        for _ in 0..n {
            t += match rng.random_range(0..4) {
                0 => rng.random_range(0..10),
                1 => rng.random_range(590..=610),
                2 => 600,
                _ => rng.random_range(0..3000),
            };
            times.push(t);
        }
        let events: Vec<_> = times
            .iter()
            .enumerate()
            .map(|(i, &s)| InteractionEvent {
                event_id: format!("e{i}"),
                student_id: "s".into(),
                video_id: v.video_id.clone(),
                wall_time: start_instant() + TimeDelta::seconds(s),
                kind: EventKind::Heartbeat,
                position_s: 0.0,
                rate: 1.0,
                seek_from_s: None,
            })
            .collect();
        let sessions = reconstruct_sessions(&events, 600).unwrap();
        assert_eq!(sessions.len(), oracle_session_count(&times, 600));
        assert_eq!(sessions.iter().map(|s| s.events.len()).sum::<usize>(), events.len());
    }
}

#[test]
fn sessions_partition_each_student() {
    for seed in 0..50 {
        let (_, events) = random_log(seed, &GenParams::default());
        let sessions = sessions_for_log(&events, 600).unwrap();
        assert_eq!(sessions.iter().map(|s| s.events.len()).sum::<usize>(), events.len());
        for s in &sessions {
            assert!(s.events.iter().all(|e| e.student_id == s.student_id));
            for w in s.events.windows(2) {
                assert!((w[1].wall_time - w[0].wall_time).num_seconds() <= 600);
            }
        }
    }
}

#[test]
fn coverage_grows_with_horizon() {
    let r = rules();
    for seed in 0..30 {
        let (catalog, events) = random_log(seed, &GenParams::default());
        let student = events[0].student_id.clone();
        for v in catalog.iter() {
            let mut prev = 0.0;
            for cut in (1..=4).map(|q| events.len() * q / 4) {
                let c = coverage(&student, v, &events[..cut], &r).unwrap();
                assert!((0.0..=1.0).contains(&c));
                assert!(c >= prev, "seed {seed}");
                prev = c;
            }
        }
    }
}
