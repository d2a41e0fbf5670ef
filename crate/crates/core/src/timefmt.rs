//! Timestamp formatting shared by the log, snapshots and exports.

use chrono::{DateTime, DurationRound, SecondsFormat, TimeDelta, Utc};

/// Renders a timestamp as RFC 3339 with exactly three fractional digits.
pub fn format_millis(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Parses an RFC 3339 timestamp and truncates it to millisecond precision.
pub fn parse_millis(s: &str) -> Result<DateTime<Utc>, chrono::ParseError> {
    let t = DateTime::parse_from_rfc3339(s)?.with_timezone(&Utc);
    Ok(t.duration_trunc(TimeDelta::milliseconds(1)).unwrap_or(t))
}

pub mod millis {
    use chrono::{DateTime, Utc};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_millis(t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_millis(&raw).map_err(serde::de::Error::custom)
    }
}
