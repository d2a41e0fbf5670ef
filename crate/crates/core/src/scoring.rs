//! Playback weighting: per-second bin increments from played segments,
//! backward seeks (replays) and forward seeks (skips), each scaled by the
//! recency multiplier of the day it happened, then normalized for display.

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::config::CourseRules;
use crate::error::Result;
use crate::ingest::{derive_activity, Activity};
use crate::model::{
    BinScoreTimeline, InteractionEvent, PlaybackSegment, SeekAction, SeekDirection, VideoMeta,
};
use crate::weights::{day_multiplier, WeightConfig};

/// Minimum overlap (seconds) for a played segment to count in an edge bin.
pub const MIN_BIN_OVERLAP_S: f64 = 0.5;
/// Width of each skip-penalty band, in bins.
pub const SKIP_BAND_S: u32 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateBand {
    Normal,
    Fast15,
    Fast2x,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaSource {
    Play,
    Replay,
    SkipPenalty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinDelta {
    pub video_id: String,
    pub bin_index: u32,
    pub amount: f64,
    pub source: DeltaSource,
}

pub fn rate_band(rate: f64, config: &WeightConfig) -> RateBand {
    let normal_upper = if config.rate125_equals_1x { 1.25 } else { 1.0 };
    if rate <= normal_upper {
        RateBand::Normal
    } else if rate <= 1.75 {
        RateBand::Fast15
    } else {
        RateBand::Fast2x
    }
}

fn base_increment(band: RateBand, in_focus: bool, c: &WeightConfig) -> f64 {
    match (band, in_focus) {
        (RateBand::Normal, true) => c.play_focused,
        (RateBand::Normal, false) => c.play_unfocused,
        (RateBand::Fast15, true) => c.fast15_focused,
        (RateBand::Fast15, false) => c.fast15_unfocused,
        (RateBand::Fast2x, true) => c.fast2x_focused,
        (RateBand::Fast2x, false) => c.fast2x_unfocused,
    }
}

fn each_segment_bin(seg: &PlaybackSegment, config: &WeightConfig, mut f: impl FnMut(u32, f64)) {
    if seg.end_pos_s.partial_cmp(&seg.start_pos_s) != Some(std::cmp::Ordering::Greater) || seg.start_pos_s < 0.0 {
        return;
    }
    let amount = base_increment(rate_band(seg.rate, config), seg.in_focus, config)
        * day_multiplier(seg.day_index, config);
    for bin in segment_bins(seg) {
        f(bin, amount);
    }
}

/// Bins a played segment counts in: those it overlaps by at least
/// [`MIN_BIN_OVERLAP_S`].
pub fn segment_bins(seg: &PlaybackSegment) -> impl Iterator<Item = u32> + '_ {
    let valid = seg.end_pos_s > seg.start_pos_s && seg.start_pos_s >= 0.0;
    let (first, last) = if valid {
        (seg.start_pos_s.floor() as u32, seg.end_pos_s.ceil() as u32)
    } else {
        (0, 0)
    };
    (first..last).filter(move |&bin| {
        let lo = seg.start_pos_s.max(f64::from(bin));
        let hi = seg.end_pos_s.min(f64::from(bin + 1));
        hi - lo >= MIN_BIN_OVERLAP_S
    })
}

fn each_replay_bin(seek: &SeekAction, config: &WeightConfig, mut f: impl FnMut(u32, f64)) {
    if seek.direction != SeekDirection::Backward {
        return;
    }
    let amount = config.replay_bonus * day_multiplier(seek.day_index, config);
    let lo = seek.to_pos_s.max(0.0).floor() as u32;
    let hi = seek.from_pos_s.max(0.0).floor() as u32;
    for bin in lo..hi {
        f(bin, amount);
    }
}

fn each_skip_bin(
    seek: &SeekAction,
    config: &WeightConfig,
    duration_s: u32,
    mut f: impl FnMut(u32, f64),
) {
    if seek.direction != SeekDirection::Forward {
        return;
    }
    let mult = day_multiplier(seek.day_index, config);
    let origin = seek.from_pos_s.max(0.0).floor() as u32;
    let bands = [
        config.skip_penalty_min1,
        config.skip_penalty_min2,
        config.skip_penalty_min3,
    ];
    for (k, penalty) in bands.into_iter().enumerate() {
        let start = origin.saturating_add(SKIP_BAND_S * k as u32);
        let end = start.saturating_add(SKIP_BAND_S).min(duration_s);
        for bin in start..end {
            f(bin, penalty * mult);
        }
    }
}

/// Bin increments earned by one played segment.
pub fn segment_increments(segment: &PlaybackSegment, config: &WeightConfig) -> Vec<BinDelta> {
    let mut out = Vec::new();
    each_segment_bin(segment, config, |bin_index, amount| {
        out.push(BinDelta {
            video_id: segment.video_id.clone(),
            bin_index,
            amount,
            source: DeltaSource::Play,
        })
    });
    out
}

/// Replay bonus for a backward seek: every bin in `[floor(to), floor(from))`.
pub fn replay_increments(seek: &SeekAction, config: &WeightConfig) -> Vec<BinDelta> {
    let mut out = Vec::new();
    each_replay_bin(seek, config, |bin_index, amount| {
        out.push(BinDelta {
            video_id: seek.video_id.clone(),
            bin_index,
            amount,
            source: DeltaSource::Replay,
        })
    });
    out
}

/// Penalties in the three one-minute bands following the skip origin,
/// clipped to the video duration.
pub fn skip_penalties(seek: &SeekAction, config: &WeightConfig, duration_s: u32) -> Vec<BinDelta> {
    let mut out = Vec::new();
    each_skip_bin(seek, config, duration_s, |bin_index, amount| {
        out.push(BinDelta {
            video_id: seek.video_id.clone(),
            bin_index,
            amount,
            source: DeltaSource::SkipPenalty,
        })
    });
    out
}

/// Sums every delta of `activity` that belongs to `video_id` into a raw
/// per-second array of length `duration_s`.
pub fn accumulate(
    activity: &Activity,
    video_id: &str,
    duration_s: u32,
    config: &WeightConfig,
) -> Vec<f64> {
    let mut raw = vec![0.0; duration_s as usize];
    let mut add = |bin: u32, amount: f64| {
        if let Some(slot) = raw.get_mut(bin as usize) {
            *slot += amount;
        }
    };
    for seg in activity.segments.iter().filter(|s| s.video_id == video_id) {
        each_segment_bin(seg, config, &mut add);
    }
    for seek in activity.seeks.iter().filter(|s| s.video_id == video_id) {
        each_replay_bin(seek, config, &mut add);
        each_skip_bin(seek, config, duration_s, &mut add);
    }
    raw
}

/// Clamps negatives to zero and scales by the maximum. All-non-positive
/// input yields all zeros.
pub fn normalize_timeline(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().copied().fold(0.0_f64, f64::max);
    if max.is_nan() || max <= 0.0 {
        return vec![0.0; raw.len()];
    }
    raw.iter()
        .map(|&r| if r > 0.0 { (r / max).min(1.0) } else { 0.0 })
        .collect()
}

fn within_horizon(events: &[InteractionEvent], horizon: DateTime<Utc>) -> Vec<InteractionEvent> {
    events
        .iter()
        .filter(|e| e.wall_time <= horizon)
        .cloned()
        .collect()
}

/// Full replay of the log up to `horizon` for one video.
pub fn recompute_timeline(
    video: &VideoMeta,
    events: &[InteractionEvent],
    horizon: DateTime<Utc>,
    rules: &CourseRules,
    computed_at: NaiveDate,
) -> Result<BinScoreTimeline> {
    let visible = within_horizon(events, horizon);
    let activity = derive_activity(&visible, &rules.calendar, &rules.policy)?;
    Ok(timeline_from_activity(video, &activity, horizon, rules, computed_at))
}

/// Recomputes every catalog video from a single pass over the log.
pub fn recompute_all(
    catalog: &Catalog,
    events: &[InteractionEvent],
    horizon: DateTime<Utc>,
    rules: &CourseRules,
    computed_at: NaiveDate,
) -> Result<Vec<BinScoreTimeline>> {
    let visible = within_horizon(events, horizon);
    let activity = derive_activity(&visible, &rules.calendar, &rules.policy)?;
    Ok(catalog
        .iter()
        .map(|v| timeline_from_activity(v, &activity, horizon, rules, computed_at))
        .collect())
}

pub fn timeline_from_activity(
    video: &VideoMeta,
    activity: &Activity,
    horizon: DateTime<Utc>,
    rules: &CourseRules,
    computed_at: NaiveDate,
) -> BinScoreTimeline {
    let raw = accumulate(activity, &video.video_id, video.duration_s, &rules.weights);
    let normalized = normalize_timeline(&raw);
    BinScoreTimeline {
        video_id: video.video_id.clone(),
        raw,
        normalized,
        computed_at,
        event_horizon: horizon,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn seg(start: f64, end: f64, rate: f64, focus: bool, day: u32) -> PlaybackSegment {
        let t = Utc.with_ymd_and_hms(2021, 9, 6, 9, 0, 0).unwrap();
        PlaybackSegment {
            student_id: "s".into(),
            video_id: "v".into(),
            start_pos_s: start,
            end_pos_s: end,
            rate,
            in_focus: focus,
            wall_start: t,
            wall_end: t,
            day_index: day,
            session_id: "x".into(),
        }
    }

    fn seek(from: f64, to: f64, day: u32) -> SeekAction {
        SeekAction {
            student_id: "s".into(),
            video_id: "v".into(),
            wall_time: Utc.with_ymd_and_hms(2021, 9, 6, 9, 0, 0).unwrap(),
            from_pos_s: from,
            to_pos_s: to,
            direction: if to > from {
                SeekDirection::Forward
            } else {
                SeekDirection::Backward
            },
            day_index: day,
            session_id: "x".into(),
        }
    }

    fn bins(d: &[BinDelta]) -> Vec<(u32, f64)> {
        d.iter().map(|b| (b.bin_index, b.amount)).collect()
    }

    #[test]
    fn bands() {
        let c = WeightConfig::default();
        assert_eq!(rate_band(0.75, &c), RateBand::Normal);
        assert_eq!(rate_band(1.0, &c), RateBand::Normal);
        assert_eq!(rate_band(1.25, &c), RateBand::Normal);
        assert_eq!(rate_band(1.5, &c), RateBand::Fast15);
        assert_eq!(rate_band(1.75, &c), RateBand::Fast15);
        assert_eq!(rate_band(2.0, &c), RateBand::Fast2x);
        let strict = WeightConfig {
            rate125_equals_1x: false,
            ..c
        };
        assert_eq!(rate_band(1.25, &strict), RateBand::Fast15);
    }

    #[test]
    fn edge_bins_need_half_second() {
        let c = WeightConfig::default();
        let d = segment_increments(&seg(9.6, 12.4, 1.0, true, 0), &c);
        assert_eq!(bins(&d), [(10, 1.0), (11, 1.0)]);
        let d = segment_increments(&seg(9.5, 12.5, 1.0, true, 0), &c);
        assert_eq!(bins(&d), [(9, 1.0), (10, 1.0), (11, 1.0), (12, 1.0)]);
        assert!(segment_increments(&seg(10.2, 10.6, 1.0, true, 0), &c).is_empty());
    }

    #[test]
    fn replay_floor_boundaries() {
        let c = WeightConfig::default();
        assert_eq!(bins(&replay_increments(&seek(61.4, 60.2, 0), &c)), [(60, 2.0)]);
        assert!(replay_increments(&seek(60.9, 60.2, 0), &c).is_empty());
        assert!(replay_increments(&seek(10.0, 20.0, 0), &c).is_empty());
    }

    #[test]
    fn skip_clipped_at_end() {
        let c = WeightConfig::default();
        let d = skip_penalties(&seek(550.0, 590.0, 0), &c, 600);
        assert_eq!(d.len(), 50);
        assert!(d.iter().all(|b| b.amount == -0.3 && b.bin_index >= 550 && b.bin_index < 600));
        assert!(skip_penalties(&seek(120.0, 60.0, 0), &c, 600).is_empty());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_timeline(&[2.0, 4.0, 1.0]), [0.5, 1.0, 0.25]);
        assert_eq!(normalize_timeline(&[-1.0, 0.0, 0.0]), [0.0, 0.0, 0.0]);
        assert_eq!(normalize_timeline(&[-0.3, 3.0, 1.5]), [0.0, 1.0, 0.5]);
        assert_eq!(normalize_timeline(&[0.0]), [0.0]);
    }
}
