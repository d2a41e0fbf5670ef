//! Append-only event log stored as newline-delimited JSON.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calendar::CourseCalendar;
use crate::catalog::Catalog;
use crate::error::{CoreError, Result};
use crate::model::{EventKind, InteractionEvent};
use crate::timefmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    UnknownVideo,
    PositionOutOfRange,
    NonPositiveRate,
    MalformedTimestamp,
    InvalidSeek,
    BeforeCourseStart,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// Position of the event in the submitted batch.
    pub index: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<String>,
    pub reason: RejectReason,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AppendOutcome {
    pub accepted: usize,
    /// Events whose id was already in the log (or earlier in the batch).
    pub duplicates: usize,
    pub rejected: Vec<Rejection>,
}

/// Checks one event against the catalog and the course calendar.
pub fn validate_event(
    event: &InteractionEvent,
    catalog: &Catalog,
    calendar: Option<&CourseCalendar>,
) -> std::result::Result<(), (RejectReason, String)> {
    if event.event_id.is_empty() || event.student_id.is_empty() {
        return Err((
            RejectReason::Malformed,
            "event_id and student_id must be non-empty".into(),
        ));
    }
    let Some(video) = catalog.get(&event.video_id) else {
        return Err((
            RejectReason::UnknownVideo,
            format!("unknown video {}", event.video_id),
        ));
    };
    let duration = f64::from(video.duration_s);
    let in_range = |p: f64| p.is_finite() && (0.0..=duration).contains(&p);
    if !in_range(event.position_s) {
        return Err((
            RejectReason::PositionOutOfRange,
            format!("position {} outside [0, {duration}]", event.position_s),
        ));
    }
    if !(event.rate.is_finite() && event.rate > 0.0) {
        return Err((
            RejectReason::NonPositiveRate,
            format!("rate {} is not positive", event.rate),
        ));
    }
    match (event.kind, event.seek_from_s) {
        (EventKind::Seek, None) => {
            return Err((RejectReason::InvalidSeek, "seek without seek_from_s".into()))
        }
        (EventKind::Seek, Some(from)) => {
            if !in_range(from) {
                return Err((
                    RejectReason::PositionOutOfRange,
                    format!("seek_from_s {from} outside [0, {duration}]"),
                ));
            }
            if from == event.position_s {
                return Err((
                    RejectReason::InvalidSeek,
                    "seek_from_s equals position_s".into(),
                ));
            }
        }
        (_, Some(_)) => {
            return Err((
                RejectReason::Malformed,
                "seek_from_s is only allowed on seek events".into(),
            ))
        }
        (_, None) => {}
    }
    if let Some(cal) = calendar {
        if event.wall_time < cal.course_start_instant() {
            return Err((
                RejectReason::BeforeCourseStart,
                format!("{} precedes the course start", timefmt::format_millis(&event.wall_time)),
            ));
        }
    }
    Ok(())
}

/// Turns one JSON value into an event, distinguishing bad timestamps from
/// other structural problems.
pub fn parse_event_value(value: Value) -> std::result::Result<InteractionEvent, (RejectReason, String)> {
    match serde_json::from_value::<InteractionEvent>(value.clone()) {
        Ok(e) => Ok(e),
        Err(err) => {
            let bad_time = match value.get("wall_time") {
                Some(Value::String(s)) => timefmt::parse_millis(s).is_err(),
                Some(_) => true,
                None => false,
            };
            let reason = if bad_time {
                RejectReason::MalformedTimestamp
            } else {
                RejectReason::Malformed
            };
            Err((reason, err.to_string()))
        }
    }
}

/// A parsed event, or its id (if any), reject reason and detail.
type Parsed = std::result::Result<InteractionEvent, (Option<String>, RejectReason, String)>;

/// Durable, append-only sequence of events with idempotent appends keyed on
/// `event_id`. Replaying from the start is always possible.
#[derive(Debug)]
pub struct EventLog {
    path: Option<PathBuf>,
    file: Option<File>,
    events: Vec<InteractionEvent>,
    seen: HashSet<String>,
}

impl EventLog {
    pub fn in_memory() -> Self {
        Self {
            path: None,
            file: None,
            events: Vec::new(),
            seen: HashSet::new(),
        }
    }

    /// Opens (or creates) a log file and loads its contents. A torn final
    /// line left by an interrupted write is dropped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let mut text = String::new();
        file.read_to_string(&mut text)?;

        let mut events = Vec::new();
        let mut seen = HashSet::new();
        let complete = match text.rfind('\n') {
            Some(i) => i + 1,
            None => 0,
        };
        for (i, line) in text[..complete].lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let event: InteractionEvent =
                serde_json::from_str(line).map_err(|e| CoreError::LogCorrupt {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if seen.insert(event.event_id.clone()) {
                events.push(event);
            }
        }
        if complete < text.len() {
            drop(file);
            let f = OpenOptions::new().write(true).open(&path)?;
            f.set_len(complete as u64)?;
            f.sync_all()?;
            file = OpenOptions::new().read(true).append(true).open(&path)?;
            file.seek(SeekFrom::End(0))?;
        }
        Ok(Self {
            path: Some(path),
            file: Some(file),
            events,
            seen,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn events(&self) -> &[InteractionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn contains(&self, event_id: &str) -> bool {
        self.seen.contains(event_id)
    }

    /// Validates each event individually and appends the valid, unseen ones
    /// in arrival order.
    pub fn append_events(
        &mut self,
        batch: Vec<InteractionEvent>,
        catalog: &Catalog,
        calendar: Option<&CourseCalendar>,
    ) -> Result<AppendOutcome> {
        self.append_parsed(batch.into_iter().map(Ok).collect(), catalog, calendar)
    }

    /// Like [`EventLog::append_events`] but takes raw JSON values, so a
    /// malformed record is rejected on its own instead of failing the batch.
    pub fn append_json(
        &mut self,
        batch: Vec<Value>,
        catalog: &Catalog,
        calendar: Option<&CourseCalendar>,
    ) -> Result<AppendOutcome> {
        let parsed = batch
            .into_iter()
            .map(|v| {
                let id = v
                    .get("event_id")
                    .and_then(Value::as_str)
                    .map(str::to_string);
                parse_event_value(v).map_err(|(r, d)| (id, r, d))
            })
            .collect();
        self.append_parsed(parsed, catalog, calendar)
    }

    fn append_parsed(
        &mut self,
        batch: Vec<Parsed>,
        catalog: &Catalog,
        calendar: Option<&CourseCalendar>,
    ) -> Result<AppendOutcome> {
        let mut outcome = AppendOutcome::default();
        let mut fresh = Vec::new();
        let mut batch_ids = HashSet::new();
        for (index, item) in batch.into_iter().enumerate() {
            let event = match item {
                Ok(e) => e,
                Err((event_id, reason, detail)) => {
                    outcome.rejected.push(Rejection {
                        index,
                        event_id,
                        reason,
                        detail,
                    });
                    continue;
                }
            };
            if let Err((reason, detail)) = validate_event(&event, catalog, calendar) {
                outcome.rejected.push(Rejection {
                    index,
                    event_id: Some(event.event_id.clone()),
                    reason,
                    detail,
                });
                continue;
            }
            if self.seen.contains(&event.event_id) || !batch_ids.insert(event.event_id.clone()) {
                outcome.duplicates += 1;
                continue;
            }
            fresh.push(event);
        }

        if let Some(file) = self.file.as_mut() {
            let mut buf = Vec::new();
            for e in &fresh {
                serde_json::to_writer(&mut buf, e)?;
                buf.push(b'\n');
            }
            file.write_all(&buf)?;
            file.sync_data()?;
        }
        outcome.accepted = fresh.len();
        for e in fresh {
            self.seen.insert(e.event_id.clone());
            self.events.push(e);
        }
        Ok(outcome)
    }
}

/// Reads a whole NDJSON log without taking ownership of the file.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<InteractionEvent>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| CoreError::LogCorrupt {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}

/// Serializes events as NDJSON, one record per line.
pub fn write_log<W: Write>(mut w: W, events: &[InteractionEvent]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}
