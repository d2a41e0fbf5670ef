//! Per-course state: the single-writer event log, the catalog and the
//! published timelines.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, NaiveDate, Utc};
use contour_core::ingest::{AppendOutcome, EventLog};
use contour_core::store::{CourseStore, PublishReport};
use contour_core::{BinScoreTimeline, Catalog, CourseRules, VideoMeta};
use serde_json::Value;

use crate::error::ApiError;

pub type Published = HashMap<String, Arc<BinScoreTimeline>>;

pub struct CourseHandle {
    store: CourseStore,
    rules: CourseRules,
    log: Mutex<EventLog>,
    catalog: RwLock<Catalog>,
    published: RwLock<Arc<Published>>,
    last_run: Mutex<Option<NaiveDate>>,
    recompute_lock: Mutex<()>,
}

impl CourseHandle {
    /// Opens the log and catalog and loads whatever snapshots exist. Videos
    /// without a snapshot start from a zero timeline.
    pub fn open(store: CourseStore, now: DateTime<Utc>) -> contour_core::Result<Self> {
        let rules = store.config().rules();
        let log = store.open_log()?;
        let catalog = store.load_catalog()?;
        let today = rules.calendar.local_date(now);
        let mut published = Published::new();
        let mut last_run: Option<NaiveDate> = None;
        for v in catalog.iter() {
            let t = match store.read_snapshot(&v.video_id) {
                Ok(Some(t)) if t.duration_s() == v.duration_s => {
                    last_run = last_run.max(Some(t.computed_at));
                    t
                }
                Ok(_) => cold(v, &rules, today),
                Err(e) => {
                    tracing::warn!(video = %v.video_id, error = %e, "ignoring unreadable snapshot");
                    cold(v, &rules, today)
                }
            };
            published.insert(v.video_id.clone(), Arc::new(t));
        }
        Ok(Self {
            store,
            rules,
            log: Mutex::new(log),
            catalog: RwLock::new(catalog),
            published: RwLock::new(Arc::new(published)),
            last_run: Mutex::new(last_run),
            recompute_lock: Mutex::new(()),
        })
    }

    pub fn course_id(&self) -> &str {
        &self.store.config().course_id
    }

    pub fn store(&self) -> &CourseStore {
        &self.store
    }

    pub fn rules(&self) -> &CourseRules {
        &self.rules
    }

    pub fn catalog(&self) -> Catalog {
        self.catalog.read().expect("catalog lock").clone()
    }

    pub fn published(&self) -> Arc<Published> {
        self.published.read().expect("published lock").clone()
    }

    pub fn timeline(&self, video_id: &str) -> Option<Arc<BinScoreTimeline>> {
        self.published().get(video_id).cloned()
    }

    pub fn last_run(&self) -> Option<NaiveDate> {
        *self.last_run.lock().expect("last_run lock")
    }

    pub fn event_count(&self) -> usize {
        self.log.lock().expect("log lock").len()
    }

    /// Copy-on-write update; readers keep the map they already hold.
    fn update_published(&self, f: impl FnOnce(&mut Published)) {
        let mut slot = self.published.write().expect("published lock");
        let mut next = (**slot).clone();
        f(&mut next);
        *slot = Arc::new(next);
    }

    /// Validates and appends a batch. Blocking: call from a blocking task.
    pub fn append(&self, batch: Vec<Value>) -> Result<AppendOutcome, ApiError> {
        let mut log = self.log.lock().expect("log lock");
        let catalog = self.catalog.read().expect("catalog lock");
        log.append_json(batch, &catalog, Some(&self.rules.calendar))
            .map_err(ApiError::internal)
    }

    /// Adds a video to the catalog and publishes its zero timeline. An
    /// empty `video_id` gets the next free `vNNN` id.
    pub fn register(&self, mut video: VideoMeta, now: DateTime<Utc>) -> Result<VideoMeta, ApiError> {
        let mut catalog = self.catalog.write().expect("catalog lock");
        if video.video_id.is_empty() {
            video.video_id = (catalog.len() + 1..)
                .map(|n| format!("v{n:03}"))
                .find(|id| !catalog.contains(id))
                .expect("unbounded range");
        }
        if catalog.contains(&video.video_id) {
            return Err(ApiError::conflict(format!("video {} already exists", video.video_id)));
        }
        let mut next = catalog.clone();
        next.insert(video.clone());
        self.store.save_catalog(&next).map_err(ApiError::internal)?;
        *catalog = next;
        let zero = Arc::new(cold(&video, &self.rules, self.rules.calendar.local_date(now)));
        self.update_published(|p| {
            p.insert(video.video_id.clone(), zero);
        });
        Ok(video)
    }

    /// Full replay of the log as of the start of `as_of`, written to disk
    /// and then swapped in. Blocking.
    pub fn recompute(&self, as_of: NaiveDate) -> contour_core::Result<PublishReport> {
        let _guard = self.recompute_lock.lock().expect("recompute lock");
        let events = self.log.lock().expect("log lock").events().to_vec();
        let catalog = self.catalog();
        let (timelines, report) = self.store.recompute_and_publish(&catalog, &events, as_of)?;
        for e in report.entries.iter().filter(|e| !e.published) {
            tracing::error!(video = %e.video_id, error = ?e.error, "snapshot not published");
        }
        self.update_published(|p| {
            for t in timelines {
                p.insert(t.video_id.clone(), Arc::new(t));
            }
        });
        let mut last = self.last_run.lock().expect("last_run lock");
        *last = (*last).max(Some(as_of));
        Ok(report)
    }

    /// Recomputes if the local date at `now` has not been published yet.
    pub fn run_if_due(&self, now: DateTime<Utc>) -> contour_core::Result<Option<PublishReport>> {
        let today = self.rules.calendar.local_date(now);
        if self.last_run().is_some_and(|d| d >= today) {
            return Ok(None);
        }
        self.recompute(today).map(Some)
    }
}

fn cold(v: &VideoMeta, rules: &CourseRules, date: NaiveDate) -> BinScoreTimeline {
    BinScoreTimeline::cold(v.video_id.clone(), v.duration_s, date, rules.calendar.midnight(date))
}
