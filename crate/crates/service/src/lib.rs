//! HTTP front end for one or more courses stored under a data directory.
//!
//! Timelines are served from the last published snapshot; a background
//! scheduler republishes each course once its local date changes. All
//! blocking work (log appends, recomputes) runs on the blocking pool so
//! reads stay responsive. The API is described in `api/openapi-v1.yaml`.

mod api;
pub mod auth;
pub mod clock;
pub mod course;
pub mod error;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::Router;
use chrono::{NaiveDate, TimeDelta};
use chrono_tz::Tz;
use contour_core::store::{CourseStore, PublishReport};

pub use auth::{pseudonym, Role, TokenStore};
pub use clock::{Clock, ManualClock, SystemClock};
pub use course::CourseHandle;
pub use error::ApiError;

/// Largest accepted event batch.
pub const MAX_BATCH: usize = 500;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    /// Built UI bundle mounted at `/`.
    pub static_dir: Option<PathBuf>,
    pub token_ttl: TimeDelta,
    /// How often the scheduler checks for a new local date.
    pub poll_interval: Duration,
    pub timezone: Option<Tz>,
    pub course_start: Option<NaiveDate>,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            static_dir: None,
            token_ttl: TimeDelta::hours(12),
            poll_interval: Duration::from_secs(30),
            timezone: None,
            course_start: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("data directory {path}: {source}")]
    DataDir {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no courses under {0}")]
    NoCourses(PathBuf),
    #[error(transparent)]
    Core(#[from] contour_core::CoreError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct AppState {
    pub config: ServiceConfig,
    pub courses: BTreeMap<String, Arc<CourseHandle>>,
    pub tokens: TokenStore,
    pub clock: Arc<dyn Clock>,
}

impl AppState {
    pub fn load(config: ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        let meta = std::fs::metadata(&config.data_dir).map_err(|source| ServiceError::DataDir {
            path: config.data_dir.clone(),
            source,
        })?;
        if !meta.is_dir() {
            return Err(ServiceError::DataDir {
                path: config.data_dir.clone(),
                source: std::io::Error::other("not a directory"),
            });
        }
        let now = clock.now();
        let mut courses = BTreeMap::new();
        for mut store in CourseStore::open_all(&config.data_dir)? {
            store.override_calendar(config.timezone, config.course_start);
            let handle = CourseHandle::open(store, now)?;
            courses.insert(handle.course_id().to_string(), Arc::new(handle));
        }
        if courses.is_empty() {
            return Err(ServiceError::NoCourses(config.data_dir.clone()));
        }
        Ok(Self {
            tokens: TokenStore::new(config.token_ttl),
            config,
            courses,
            clock,
        })
    }

    pub fn course(&self, id: &str) -> Option<&Arc<CourseHandle>> {
        self.courses.get(id)
    }

    /// Publishes every course whose local date has moved past its last run.
    /// Blocking.
    pub fn run_due(&self) -> Vec<PublishReport> {
        let now = self.clock.now();
        let mut reports = Vec::new();
        for c in self.courses.values() {
            match c.run_if_due(now) {
                Ok(Some(r)) => {
                    tracing::info!(course = %c.course_id(), as_of = %r.computed_at, "published timelines");
                    reports.push(r);
                }
                Ok(None) => {}
                Err(e) => tracing::error!(course = %c.course_id(), error = %e, "recompute failed"),
            }
        }
        reports
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let app = api::routes().with_state(state.clone());
    match &state.config.static_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    }
}

/// Runs the scheduler until the returned handle is aborted.
pub fn spawn_scheduler(state: Arc<AppState>) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(state.config.poll_interval);
        tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        loop {
            tick.tick().await;
            let st = state.clone();
            if let Err(e) = tokio::task::spawn_blocking(move || st.run_due()).await {
                tracing::error!(error = %e, "scheduler task panicked");
            }
        }
    })
}

/// Serves until `shutdown` resolves. Appends are synced per batch, so the
/// log is durable once in-flight requests finish.
pub async fn serve(
    state: Arc<AppState>,
    addr: SocketAddr,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Bind { addr, source })?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let scheduler = spawn_scheduler(state.clone());
    let result = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await;
    scheduler.abort();
    result.map_err(ServiceError::Io)
}
