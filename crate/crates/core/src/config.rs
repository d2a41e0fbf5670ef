//! Course configuration file (`course.toml`).
//!
//! ```toml
//! course_id = "comp1001"
//! title = "Data Analytics"
//! join_code = "K7QX2M9A"        # exactly 8 characters
//! instructor_code = "prof-secret"
//! course_start = "2021-09-06"
//! timezone = "Europe/Dublin"    # IANA zone, default UTC
//!
//! [policy]
//! session_gap_s = 600
//! heartbeat_timeout_s = 30
//!
//! [weights]                     # any subset; the rest keep their defaults
//! replay_bonus = 2.0
//! ```

use std::path::Path;

use chrono::NaiveDate;
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::calendar::CourseCalendar;
use crate::error::{CoreError, Result};
use crate::ingest::ReconstructionPolicy;
use crate::weights::WeightConfig;

pub const JOIN_CODE_LEN: usize = 8;

/// Everything the scoring pipeline needs besides the log itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CourseRules {
    pub calendar: CourseCalendar,
    pub policy: ReconstructionPolicy,
    pub weights: WeightConfig,
}

impl CourseRules {
    pub fn new(calendar: CourseCalendar) -> Self {
        Self {
            calendar,
            policy: ReconstructionPolicy::default(),
            weights: WeightConfig::default(),
        }
    }

    pub fn with_weights(mut self, weights: WeightConfig) -> Self {
        self.weights = weights;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CourseConfig {
    pub course_id: String,
    #[serde(default)]
    pub title: String,
    pub join_code: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instructor_code: Option<String>,
    pub course_start: NaiveDate,
    #[serde(default = "utc")]
    pub timezone: Tz,
    #[serde(default)]
    pub policy: ReconstructionPolicy,
    #[serde(default)]
    pub weights: WeightConfig,
}

fn utc() -> Tz {
    Tz::UTC
}

impl CourseConfig {
    pub fn new(course_id: impl Into<String>, join_code: impl Into<String>, course_start: NaiveDate) -> Self {
        Self {
            course_id: course_id.into(),
            title: String::new(),
            join_code: join_code.into(),
            instructor_code: None,
            course_start,
            timezone: Tz::UTC,
            policy: ReconstructionPolicy::default(),
            weights: WeightConfig::default(),
        }
    }

    pub fn rules(&self) -> CourseRules {
        CourseRules {
            calendar: CourseCalendar::new(self.course_start, self.timezone),
            policy: self.policy,
            weights: self.weights,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.course_id.is_empty()
            || !self
                .course_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            return Err(CoreError::Config(format!(
                "course_id {:?} must be non-empty [A-Za-z0-9_-]",
                self.course_id
            )));
        }
        if self.join_code.chars().count() != JOIN_CODE_LEN {
            return Err(CoreError::Config(format!(
                "join_code must be exactly {JOIN_CODE_LEN} characters"
            )));
        }
        if self.policy.session_gap_s == 0 || self.policy.heartbeat_timeout_s == 0 {
            return Err(CoreError::Config("policy intervals must be positive".into()));
        }
        self.weights.validate().map_err(CoreError::Config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: CourseConfig =
            toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("course config is always representable as TOML")
    }
}

/// Loads a standalone weights file (a TOML table of [`WeightConfig`] fields).
pub fn load_weights(path: impl AsRef<Path>) -> Result<WeightConfig> {
    let w: WeightConfig = toml::from_str(&std::fs::read_to_string(path)?)
        .map_err(|e| CoreError::Config(e.to_string()))?;
    w.validate().map_err(CoreError::Config)?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_example() {
        let cfg = CourseConfig::from_toml(
            r#"
course_id = "comp1001"
title = "Data Analytics"
join_code = "K7QX2M9A"
instructor_code = "prof-secret"
course_start = "2021-09-06"
timezone = "Europe/Dublin"

[policy]
session_gap_s = 600

[weights]
replay_bonus = 2.5
"#,
        )
        .unwrap();
        assert_eq!(cfg.timezone, chrono_tz::Europe::Dublin);
        assert_eq!(cfg.policy.heartbeat_timeout_s, 30);
        assert_eq!(cfg.weights.replay_bonus, 2.5);
        assert_eq!(cfg.weights.play_unfocused, 0.25);
        let again = CourseConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn join_code_length_enforced() {
        let cfg = CourseConfig::new("c1", "SHORT", NaiveDate::from_ymd_opt(2021, 9, 6).unwrap());
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bad_timezone_rejected() {
        let err = CourseConfig::from_toml(
            "course_id = \"c\"\njoin_code = \"ABCDEFGH\"\ncourse_start = \"2021-09-06\"\ntimezone = \"Nowhere/Land\"\n",
        );
        assert!(err.is_err());
    }
}
