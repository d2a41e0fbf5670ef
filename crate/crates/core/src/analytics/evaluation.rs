use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::plateau::{highest_plateau, match_important_part, Plateau, PlateauParams};
use crate::catalog::Catalog;
use crate::config::CourseRules;
use crate::error::{CoreError, Result};
use crate::model::{BinScoreTimeline, ImportantPartAnnotation, InteractionEvent, VideoAnnotation};
use crate::scoring::recompute_all;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRow {
    pub video_id: String,
    pub plateaus: Vec<Plateau>,
    pub annotation: ImportantPartAnnotation,
    pub matched: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub video_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub params: PlateauParams,
    pub rows: Vec<EvaluationRow>,
    pub excluded: Vec<Exclusion>,
}

impl EvaluationReport {
    pub fn evaluated(&self) -> usize {
        self.rows.len()
    }

    pub fn matched(&self) -> usize {
        self.rows.iter().filter(|r| r.matched).count()
    }

    /// `matched / evaluated`, or `None` when nothing was evaluated.
    pub fn rate(&self) -> Option<f64> {
        (!self.rows.is_empty()).then(|| self.matched() as f64 / self.rows.len() as f64)
    }

    pub fn rate_label(&self) -> String {
        match self.rate() {
            Some(r) => format!("{:.1}%", r * 100.0),
            None => "n/a".into(),
        }
    }
}

/// Compares each timeline's plateaus with its annotation. Videos without an
/// annotation (or with an invalid one) are excluded and listed.
pub fn evaluate_timelines(
    timelines: &[BinScoreTimeline],
    annotations: &[VideoAnnotation],
    params: PlateauParams,
) -> EvaluationReport {
    let by_video: HashMap<&str, &VideoAnnotation> =
        annotations.iter().map(|a| (a.video_id.as_str(), a)).collect();
    let mut rows = Vec::new();
    let mut excluded = Vec::new();
    for tl in timelines {
        let Some(ann) = by_video.get(tl.video_id.as_str()) else {
            excluded.push(Exclusion {
                video_id: tl.video_id.clone(),
                reason: "missing annotation".into(),
            });
            continue;
        };
        if let Err(reason) = ann.validate(tl.duration_s()) {
            excluded.push(Exclusion {
                video_id: tl.video_id.clone(),
                reason,
            });
            continue;
        }
        let plateaus = highest_plateau(tl, params.threshold_frac, params.min_len_s);
        let annotation = ann.interval();
        rows.push(EvaluationRow {
            video_id: tl.video_id.clone(),
            matched: match_important_part(&plateaus, &annotation, params.min_overlap_s),
            plateaus,
            annotation,
        });
    }
    let known: HashSet<&str> = timelines.iter().map(|t| t.video_id.as_str()).collect();
    for a in annotations {
        if !known.contains(a.video_id.as_str()) {
            excluded.push(Exclusion {
                video_id: a.video_id.clone(),
                reason: "unknown video".into(),
            });
        }
    }
    EvaluationReport {
        params,
        rows,
        excluded,
    }
}

/// Recomputes every catalog video up to `horizon` and evaluates it.
pub fn evaluation_report(
    catalog: &Catalog,
    events: &[InteractionEvent],
    annotations: &[VideoAnnotation],
    rules: &CourseRules,
    horizon: DateTime<Utc>,
    computed_at: NaiveDate,
    params: PlateauParams,
) -> Result<EvaluationReport> {
    let timelines = recompute_all(catalog, events, horizon, rules, computed_at)?;
    Ok(evaluate_timelines(&timelines, annotations, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub matched: usize,
    pub evaluated: usize,
    pub rate: Option<f64>,
}

/// One match rate per plateau threshold.
pub fn threshold_sweep(
    timelines: &[BinScoreTimeline],
    annotations: &[VideoAnnotation],
    thresholds: &[f64],
    base: PlateauParams,
) -> Vec<SweepPoint> {
    thresholds
        .iter()
        .map(|&threshold| {
            let report = evaluate_timelines(
                timelines,
                annotations,
                PlateauParams {
                    threshold_frac: threshold,
                    ..base
                },
            );
            SweepPoint {
                threshold,
                matched: report.matched(),
                evaluated: report.evaluated(),
                rate: report.rate(),
            }
        })
        .collect()
}

/// Reads `video_id,start_s,end_s` rows (with header). A video may appear
/// only once.
pub fn read_annotations<R: Read>(reader: R) -> Result<Vec<VideoAnnotation>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<VideoAnnotation>().enumerate() {
        let row = row.map_err(|e| CoreError::Config(format!("annotations row {}: {e}", i + 1)))?;
        if row.start_s >= row.end_s {
            return Err(CoreError::Config(format!(
                "annotations row {}: start_s must be < end_s",
                i + 1
            )));
        }
        if !seen.insert(row.video_id.clone()) {
            return Err(CoreError::Config(format!(
                "annotations row {}: second interval for {}",
                i + 1,
                row.video_id
            )));
        }
        out.push(row);
    }
    Ok(out)
}

pub fn write_report_csv<W: Write>(writer: W, report: &EvaluationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| CoreError::Io(std::io::Error::other(e));
    w.write_record(["video_id", "annotation_start_s", "annotation_end_s", "plateaus", "matched"])
        .map_err(io)?;
    for r in &report.rows {
        let plateaus = r
            .plateaus
            .iter()
            .map(|p| format!("{}-{}", p.start_s, p.end_s))
            .collect::<Vec<_>>()
            .join(";");
        w.write_record([
            r.video_id.clone(),
            r.annotation.start_s.to_string(),
            r.annotation.end_s.to_string(),
            plateaus,
            r.matched.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
