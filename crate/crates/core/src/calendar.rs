//! Course-day arithmetic in the course's configured timezone.

use chrono::{DateTime, LocalResult, NaiveDate, NaiveTime, TimeDelta, TimeZone, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Anchors day 0 at local midnight of `course_start` in `timezone`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CourseCalendar {
    pub course_start: NaiveDate,
    #[serde(default = "default_tz")]
    pub timezone: Tz,
}

fn default_tz() -> Tz {
    Tz::UTC
}

impl CourseCalendar {
    pub fn new(course_start: NaiveDate, timezone: Tz) -> Self {
        Self {
            course_start,
            timezone,
        }
    }

    pub fn utc(course_start: NaiveDate) -> Self {
        Self::new(course_start, Tz::UTC)
    }

    pub fn parse_timezone(name: &str) -> Result<Tz> {
        name.parse::<Tz>()
            .map_err(|_| CoreError::UnknownTimezone(name.to_string()))
    }

    /// Calendar date of `t` in the course timezone.
    pub fn local_date(&self, t: DateTime<Utc>) -> NaiveDate {
        t.with_timezone(&self.timezone).date_naive()
    }

    /// The UTC instant at which `date` begins in the course timezone.
    pub fn midnight(&self, date: NaiveDate) -> DateTime<Utc> {
        let mut local = date.and_time(NaiveTime::MIN);
        // A DST jump can skip local midnight; the day then starts at the
        // first representable instant after it.
        for _ in 0..48 {
            match self.timezone.from_local_datetime(&local) {
                LocalResult::Single(t) => return t.with_timezone(&Utc),
                LocalResult::Ambiguous(earliest, _) => return earliest.with_timezone(&Utc),
                LocalResult::None => local += TimeDelta::minutes(30),
            }
        }
        Utc.from_utc_datetime(&date.and_time(NaiveTime::MIN))
    }

    pub fn course_start_instant(&self) -> DateTime<Utc> {
        self.midnight(self.course_start)
    }

    /// Whole days between the course start and the local date of `wall_time`.
    pub fn day_index_of(&self, wall_time: DateTime<Utc>) -> Result<u32> {
        let days = (self.local_date(wall_time) - self.course_start).num_days();
        u32::try_from(days).map_err(|_| CoreError::BeforeCourseStart { wall_time })
    }
}
