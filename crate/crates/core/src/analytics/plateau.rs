//! Plateau detection on normalized timelines and the important-part match.

use serde::{Deserialize, Serialize};

use crate::model::{BinScoreTimeline, ImportantPartAnnotation};

/// A maximal run of high normalized score, `[start_s, end_s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub video_id: String,
    pub start_s: u32,
    pub end_s: u32,
    /// Mean normalized score inside the run.
    pub level: f64,
}

impl Plateau {
    pub fn len_s(&self) -> u32 {
        self.end_s - self.start_s
    }

    pub fn overlap_s(&self, a: &ImportantPartAnnotation) -> u32 {
        self.end_s
            .min(a.end_s)
            .saturating_sub(self.start_s.max(a.start_s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauParams {
    pub threshold_frac: f64,
    pub min_len_s: u32,
    pub min_overlap_s: u32,
}

impl Default for PlateauParams {
    fn default() -> Self {
        Self {
            threshold_frac: 0.9,
            min_len_s: 10,
            min_overlap_s: 1,
        }
    }
}

/// Threshold decrement used when no run is long enough.
pub const RELAX_STEP: f64 = 0.05;

/// Maximal `[start, end)` runs of bins with value `>= threshold`.
pub fn runs_at_least(values: &[f64], threshold: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &v) in values.iter().enumerate() {
        match (v >= threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, values.len()));
    }
    out
}

fn to_plateau(video_id: &str, norm: &[f64], (s, e): (usize, usize)) -> Plateau {
    let level = norm[s..e].iter().sum::<f64>() / (e - s) as f64;
    Plateau {
        video_id: video_id.to_string(),
        start_s: s as u32,
        end_s: e as u32,
        level,
    }
}

fn longest(runs: &[(usize, usize)]) -> Option<(usize, usize)> {
    // earliest wins ties
    runs.iter()
        .copied()
        .fold(None, |best: Option<(usize, usize)>, r| match best {
            Some(b) if b.1 - b.0 >= r.1 - r.0 => Some(b),
            _ => Some(r),
        })
}

/// Highest-scoring regions of a timeline.
///
/// Returns every maximal run at or above `threshold_frac` that is at least
/// `min_len_s` long, ordered by start. When none qualifies, the threshold is
/// lowered in steps of [`RELAX_STEP`] and the single longest run at the first
/// threshold that yields a long-enough run is returned. If even the lowest
/// positive threshold yields nothing long enough (a very short video), the
/// longest run at that threshold is returned. An all-zero timeline has no
/// plateau.
pub fn highest_plateau(timeline: &BinScoreTimeline, threshold_frac: f64, min_len_s: u32) -> Vec<Plateau> {
    let norm = &timeline.normalized;
    if !norm.iter().any(|&v| v > 0.0) {
        return Vec::new();
    }
    let min_len = min_len_s as usize;
    let strict: Vec<_> = runs_at_least(norm, threshold_frac)
        .into_iter()
        .filter(|(s, e)| e - s >= min_len)
        .collect();
    if !strict.is_empty() {
        return strict
            .into_iter()
            .map(|r| to_plateau(&timeline.video_id, norm, r))
            .collect();
    }

    let mut last_runs = Vec::new();
    let mut k = 1u32;
    loop {
        let t = threshold_frac - RELAX_STEP * f64::from(k);
        if t <= 1e-9 {
            break;
        }
        let runs = runs_at_least(norm, t);
        let long: Vec<_> = runs.iter().copied().filter(|(s, e)| e - s >= min_len).collect();
        if let Some(r) = longest(&long) {
            return vec![to_plateau(&timeline.video_id, norm, r)];
        }
        last_runs = runs;
        k += 1;
    }
    if last_runs.is_empty() {
        last_runs = runs_at_least(norm, threshold_frac.min(1.0));
    }
    longest(&last_runs)
        .map(|r| vec![to_plateau(&timeline.video_id, norm, r)])
        .unwrap_or_default()
}

/// Whether any plateau overlaps the annotated part by at least
/// `min_overlap_s` seconds.
pub fn match_important_part(
    plateaus: &[Plateau],
    annotation: &ImportantPartAnnotation,
    min_overlap_s: u32,
) -> bool {
    plateaus
        .iter()
        .any(|p| p.overlap_s(annotation) >= min_overlap_s.max(1))
}
