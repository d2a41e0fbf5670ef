//! On-disk layout of a course under a data directory:
//!
//! ```text
//! <data_dir>/<course_id>/course.toml
//! <data_dir>/<course_id>/catalog.json
//! <data_dir>/<course_id>/events.ndjson
//! <data_dir>/<course_id>/snapshots/<video_id>.bin
//! ```

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::config::CourseConfig;
use crate::error::{CoreError, Result};
use crate::ingest::{read_log, EventLog};
use crate::model::{BinScoreTimeline, InteractionEvent};
use crate::scoring::recompute_all;
use crate::snapshot;

/// Ids used as directory or file names.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

#[derive(Debug, Clone)]
pub struct CourseStore {
    root: PathBuf,
    config: CourseConfig,
}

impl CourseStore {
    pub fn create(data_dir: impl AsRef<Path>, config: CourseConfig) -> Result<Self> {
        config.validate()?;
        let root = data_dir.as_ref().join(&config.course_id);
        if root.join("course.toml").exists() {
            return Err(CoreError::Config(format!(
                "course {} already exists",
                config.course_id
            )));
        }
        std::fs::create_dir_all(root.join("snapshots"))?;
        snapshot::write_bytes_atomic(&root.join("course.toml"), config.to_toml().as_bytes())?;
        let store = Self { root, config };
        store.save_catalog(&Catalog::new())?;
        Ok(store)
    }

    pub fn open(data_dir: impl AsRef<Path>, course_id: &str) -> Result<Self> {
        if !is_valid_id(course_id) {
            return Err(CoreError::Config(format!("invalid course id {course_id:?}")));
        }
        let root = data_dir.as_ref().join(course_id);
        let config = CourseConfig::load(root.join("course.toml"))?;
        if config.course_id != course_id {
            return Err(CoreError::Config(format!(
                "{} declares course_id {}",
                root.display(),
                config.course_id
            )));
        }
        std::fs::create_dir_all(root.join("snapshots"))?;
        Ok(Self { root, config })
    }

    /// Every course directory under `data_dir`, sorted by id.
    pub fn open_all(data_dir: impl AsRef<Path>) -> Result<Vec<Self>> {
        let data_dir = data_dir.as_ref();
        let mut ids = Vec::new();
        for entry in std::fs::read_dir(data_dir)? {
            let entry = entry?;
            if entry.path().join("course.toml").is_file() {
                if let Some(name) = entry.file_name().to_str() {
                    ids.push(name.to_string());
                }
            }
        }
        ids.sort();
        ids.iter().map(|id| Self::open(data_dir, id)).collect()
    }

    /// Replaces the calendar fields for this process only; `course.toml` is
    /// left untouched.
    pub fn override_calendar(&mut self, timezone: Option<Tz>, course_start: Option<NaiveDate>) {
        if let Some(tz) = timezone {
            self.config.timezone = tz;
        }
        if let Some(d) = course_start {
            self.config.course_start = d;
        }
    }

    pub fn config(&self) -> &CourseConfig {
        &self.config
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn events_path(&self) -> PathBuf {
        self.root.join("events.ndjson")
    }

    pub fn catalog_path(&self) -> PathBuf {
        self.root.join("catalog.json")
    }

    pub fn snapshot_path(&self, video_id: &str) -> PathBuf {
        self.root.join("snapshots").join(format!("{video_id}.bin"))
    }

    pub fn load_catalog(&self) -> Result<Catalog> {
        let path = self.catalog_path();
        if !path.exists() {
            return Ok(Catalog::new());
        }
        Ok(serde_json::from_slice(&std::fs::read(path)?)?)
    }

    pub fn save_catalog(&self, catalog: &Catalog) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(catalog)?;
        bytes.push(b'\n');
        snapshot::write_bytes_atomic(&self.catalog_path(), &bytes)
    }

    pub fn open_log(&self) -> Result<EventLog> {
        EventLog::open(self.events_path())
    }

    pub fn read_events(&self) -> Result<Vec<InteractionEvent>> {
        let path = self.events_path();
        if !path.exists() {
            return Ok(Vec::new());
        }
        read_log(path)
    }

    pub fn read_snapshot(&self, video_id: &str) -> Result<Option<BinScoreTimeline>> {
        let path = self.snapshot_path(video_id);
        if !path.exists() {
            return Ok(None);
        }
        snapshot::read(&path).map(Some)
    }

    /// Recomputes every video as of the start of `as_of` (course timezone)
    /// and writes the snapshots. A video whose snapshot cannot be written
    /// keeps its previous file and is reported as failed.
    pub fn recompute_and_publish(
        &self,
        catalog: &Catalog,
        events: &[InteractionEvent],
        as_of: NaiveDate,
    ) -> Result<(Vec<BinScoreTimeline>, PublishReport)> {
        let rules = self.config.rules();
        let horizon = rules.calendar.midnight(as_of);
        let timelines = recompute_all(catalog, events, horizon, &rules, as_of)?;
        let mut published = Vec::new();
        let mut entries = Vec::new();
        for t in timelines {
            let result = snapshot::write_atomic(&self.snapshot_path(&t.video_id), &t);
            entries.push(PublishEntry {
                video_id: t.video_id.clone(),
                max_raw: t.max_raw(),
                published: result.is_ok(),
                error: result.err().map(|e| e.to_string()),
            });
            if entries.last().is_some_and(|e| e.published) {
                published.push(t);
            }
        }
        Ok((
            published,
            PublishReport {
                course_id: self.config.course_id.clone(),
                computed_at: as_of,
                horizon,
                entries,
            },
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishEntry {
    pub video_id: String,
    pub max_raw: f64,
    pub published: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishReport {
    pub course_id: String,
    pub computed_at: NaiveDate,
    #[serde(with = "crate::timefmt::millis")]
    pub horizon: DateTime<Utc>,
    pub entries: Vec<PublishEntry>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids() {
        assert!(is_valid_id("v-01_a.b"));
        assert!(!is_valid_id(""));
        assert!(!is_valid_id("../x"));
        assert!(!is_valid_id(".hidden"));
        assert!(!is_valid_id("a/b"));
    }

    #[test]
    fn create_and_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = CourseConfig::new("c1", "ABCDEFGH", NaiveDate::from_ymd_opt(2021, 9, 6).unwrap());
        CourseStore::create(dir.path(), cfg.clone()).unwrap();
        assert!(CourseStore::create(dir.path(), cfg.clone()).is_err());
        let s = CourseStore::open(dir.path(), "c1").unwrap();
        assert_eq!(s.config(), &cfg);
        assert!(s.load_catalog().unwrap().is_empty());
        assert!(s.read_events().unwrap().is_empty());
        assert_eq!(CourseStore::open_all(dir.path()).unwrap().len(), 1);
    }
}
