//! Playback-weighted usage timelines for lecture videos.
//!
//! Raw player events go into an append-only [`ingest::EventLog`]. They are
//! replayed into sessions, played segments and seeks, which
//! [`scoring`] turns into per-second scores with a linear recency boost.
//! [`analytics`] derives usage summaries, plateaus and the
//! important-part evaluation, and [`simulator`] generates synthetic cohorts.

pub mod analytics;
pub mod calendar;
pub mod catalog;
pub mod config;
pub mod error;
pub mod ingest;
pub mod model;
pub mod render;
pub mod scoring;
pub mod simulator;
pub mod snapshot;
pub mod store;
pub mod timefmt;
pub mod weights;

pub use calendar::CourseCalendar;
pub use catalog::Catalog;
pub use config::{CourseConfig, CourseRules};
pub use error::{CoreError, Result};
pub use model::*;
pub use weights::{day_multiplier, WeightConfig};
