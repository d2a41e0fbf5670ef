use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::model::{InteractionEvent, Session};
use crate::timefmt;

/// Inactivity (in seconds) above which a new session starts.
pub const DEFAULT_SESSION_GAP_S: u32 = 600;

/// Splits one student's time-ordered events into sessions wherever two
/// consecutive events are more than `gap_s` seconds apart.
pub fn reconstruct_sessions(events: &[InteractionEvent], gap_s: u32) -> Result<Vec<Session>> {
    let Some(first) = events.first() else {
        return Ok(Vec::new());
    };
    let gap_ms = i64::from(gap_s) * 1000;
    let mut sessions = Vec::new();
    let mut current: Vec<InteractionEvent> = vec![first.clone()];

    for (i, pair) in events.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        if next.student_id != first.student_id {
            return Err(CoreError::MixedStudents {
                first: first.student_id.clone(),
                other: next.student_id.clone(),
            });
        }
        let delta = (next.wall_time - prev.wall_time).num_milliseconds();
        if delta < 0 {
            return Err(CoreError::Unordered { index: i + 1 });
        }
        if delta > gap_ms {
            sessions.push(close(std::mem::take(&mut current)));
        }
        current.push(next.clone());
    }
    sessions.push(close(current));
    Ok(sessions)
}

fn close(events: Vec<InteractionEvent>) -> Session {
    let wall_start = events[0].wall_time;
    let wall_end = events[events.len() - 1].wall_time;
    let student_id = events[0].student_id.clone();
    Session {
        session_id: format!("{student_id}@{}", timefmt::format_millis(&wall_start)),
        student_id,
        events,
        wall_start,
        wall_end,
    }
}

/// Groups a whole log by student, each list sorted by wall time. Events with
/// equal timestamps keep their log order.
pub fn events_by_student(events: &[InteractionEvent]) -> BTreeMap<&str, Vec<InteractionEvent>> {
    let mut by_student: BTreeMap<&str, Vec<InteractionEvent>> = BTreeMap::new();
    for e in events {
        by_student
            .entry(e.student_id.as_str())
            .or_default()
            .push(e.clone());
    }
    for list in by_student.values_mut() {
        list.sort_by_key(|e| e.wall_time);
    }
    by_student
}

/// Sessions for every student in a log.
pub fn sessions_for_log(events: &[InteractionEvent], gap_s: u32) -> Result<Vec<Session>> {
    let mut out = Vec::new();
    for list in events_by_student(events).values() {
        out.extend(reconstruct_sessions(list, gap_s)?);
    }
    Ok(out)
}
