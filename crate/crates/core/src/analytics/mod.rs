//! Read-side measurements over a log snapshot: usage summaries, coverage,
//! contour snapshots over time, plateaus and the important-part evaluation.

mod evaluation;
mod plateau;

use std::collections::{BTreeSet, HashSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::config::CourseRules;
use crate::error::{CoreError, Result};
use crate::ingest::{derive_activity, sessions_for_log};
use crate::model::{BinScoreTimeline, InteractionEvent, VideoMeta};
use crate::scoring::{recompute_timeline, segment_bins};

pub use evaluation::{
    evaluate_timelines, evaluation_report, read_annotations, threshold_sweep, write_report_csv,
    EvaluationReport, EvaluationRow, Exclusion, SweepPoint,
};
pub use plateau::{
    highest_plateau, match_important_part, runs_at_least, Plateau, PlateauParams, RELAX_STEP,
};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageSummary {
    pub n_students: usize,
    pub n_videos: usize,
    pub n_sessions: usize,
    pub total_playback_hours: f64,
    pub avg_playback_min_per_student: f64,
}

/// Course-wide usage totals. Playback time is wall-clock listening time,
/// i.e. each segment's video length divided by its rate.
pub fn usage_summary(events: &[InteractionEvent], catalog: &Catalog, rules: &CourseRules) -> Result<UsageSummary> {
    let in_catalog: Vec<InteractionEvent> = events
        .iter()
        .filter(|e| catalog.contains(&e.video_id))
        .cloned()
        .collect();
    let students: HashSet<&str> = in_catalog.iter().map(|e| e.student_id.as_str()).collect();
    let videos: HashSet<&str> = in_catalog.iter().map(|e| e.video_id.as_str()).collect();
    let n_sessions = sessions_for_log(&in_catalog, rules.policy.session_gap_s)?.len();
    let activity = derive_activity(&in_catalog, &rules.calendar, &rules.policy)?;
    let total_s: f64 = activity.segments.iter().map(|s| s.listening_s()).sum();
    let total_min = total_s / 60.0;
    Ok(UsageSummary {
        n_students: students.len(),
        n_videos: videos.len(),
        n_sessions,
        total_playback_hours: total_s / 3600.0,
        avg_playback_min_per_student: if students.is_empty() {
            0.0
        } else {
            total_min / students.len() as f64
        },
    })
}

/// Fraction of a video's bins that one student has ever played.
pub fn coverage(
    student_id: &str,
    video: &VideoMeta,
    events: &[InteractionEvent],
    rules: &CourseRules,
) -> Result<f64> {
    if video.duration_s == 0 {
        return Ok(0.0);
    }
    let mine: Vec<InteractionEvent> = events
        .iter()
        .filter(|e| e.student_id == student_id)
        .cloned()
        .collect();
    let activity = derive_activity(&mine, &rules.calendar, &rules.policy)?;
    let covered: BTreeSet<u32> = activity
        .segments
        .iter()
        .filter(|s| s.video_id == video.video_id)
        .flat_map(segment_bins)
        .filter(|&b| b < video.duration_s)
        .collect();
    Ok(covered.len() as f64 / f64::from(video.duration_s))
}

/// Timelines as they would have been published at the start of each date.
pub fn contour_snapshots(
    video: &VideoMeta,
    events: &[InteractionEvent],
    dates: &[NaiveDate],
    rules: &CourseRules,
) -> Result<Vec<BinScoreTimeline>> {
    if dates.windows(2).any(|w| w[1] < w[0]) {
        return Err(CoreError::Config("snapshot dates must be ascending".into()));
    }
    dates
        .iter()
        .map(|&d| recompute_timeline(video, events, rules.calendar.midnight(d), rules, d))
        .collect()
}

/// Gini coefficient of the non-negative part of `values`; 0 for uniform or
/// empty input.
pub fn gini(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().map(|&x| x.max(0.0)).collect();
    let n = v.len();
    let total: f64 = v.iter().sum();
    if n == 0 || total <= 0.0 {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let weighted: f64 = v
        .iter()
        .enumerate()
        .map(|(i, &x)| (2.0 * (i as f64 + 1.0) - n as f64 - 1.0) * x)
        .sum();
    weighted / (n as f64 * total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gini_bounds() {
        assert_eq!(gini(&[]), 0.0);
        assert_eq!(gini(&[3.0; 10]), 0.0);
        let mut spike = vec![0.0; 10];
        spike[4] = 5.0;
        assert!((gini(&spike) - 0.9).abs() < 1e-12);
    }
}
