use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use chrono::{NaiveDate, Utc};
use contour_core::analytics::{
    evaluate_timelines, read_annotations, threshold_sweep, usage_summary, write_report_csv, PlateauParams,
};
use contour_core::config::load_weights;
use contour_core::ingest::write_log;
use contour_core::render::{render_svg, SvgOptions};
use contour_core::scoring::{recompute_all, recompute_timeline};
use contour_core::simulator::{simulate_cohort, CohortSpec};
use contour_core::store::CourseStore;
use contour_core::{snapshot, BinScoreTimeline, CoreError, CourseCalendar, CourseConfig, InteractionEvent, VideoMeta};
use contour_service::{AppState, ServiceConfig, ServiceError, SystemClock};
use serde_json::{json, Value};

use crate::{Command, CourseArgs, Format};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("data directory {0} does not exist")]
    NoDataDir(PathBuf),
    #[error("no course {course} under {dir}")]
    UnknownCourse { course: String, dir: PathBuf },
    #[error("no video {0} in the catalog")]
    UnknownVideo(String),
}

/// Short machine-readable category for the stderr error line.
pub fn error_kind(e: &anyhow::Error) -> &'static str {
    if let Some(e) = e.downcast_ref::<CliError>() {
        return match e {
            CliError::NoDataDir(_) => "data_dir",
            CliError::UnknownCourse { .. } | CliError::UnknownVideo(_) => "not_found",
        };
    }
    if let Some(e) = e.downcast_ref::<CoreError>() {
        return match e {
            CoreError::Config(_) | CoreError::UnknownTimezone(_) => "config",
            CoreError::Snapshot(_) => "snapshot",
            CoreError::LogCorrupt { .. } => "log_corrupt",
            CoreError::Io(_) => "io",
            _ => "invalid_data",
        };
    }
    if let Some(e) = e.downcast_ref::<ServiceError>() {
        return match e {
            ServiceError::DataDir { .. } | ServiceError::NoCourses(_) => "data_dir",
            ServiceError::Bind { .. } => "bind",
            _ => "service",
        };
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return "io";
    }
    "error"
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Init {
            course,
            join_code,
            instructor_code,
            course_start,
            timezone,
            title,
            weights,
        } => {
            std::fs::create_dir_all(&course.data_dir)
                .with_context(|| format!("creating {}", course.data_dir.display()))?;
            let mut cfg = CourseConfig::new(&course.course, join_code, course_start);
            cfg.title = title;
            cfg.instructor_code = instructor_code;
            cfg.timezone = CourseCalendar::parse_timezone(&timezone)?;
            if let Some(path) = weights {
                cfg.weights = load_weights(path)?;
            }
            let store = CourseStore::create(&course.data_dir, cfg)?;
            print_json(&json!({ "course_id": course.course, "path": store.root() }))
        }
        Command::AddVideo {
            course,
            video_id,
            title,
            duration,
            published_at,
            media_url,
        } => {
            let store = open(&course)?;
            if duration == 0 {
                bail!(CoreError::Config("duration must be at least 1 second".into()));
            }
            if !contour_core::store::is_valid_id(&video_id) {
                bail!(CoreError::Config(format!("invalid video id {video_id:?}")));
            }
            let mut catalog = store.load_catalog()?;
            if catalog.contains(&video_id) {
                bail!(CoreError::Config(format!("video {video_id} already exists")));
            }
            let video = VideoMeta {
                video_id,
                title,
                duration_s: duration,
                published_at: published_at.unwrap_or(store.config().course_start),
                course_id: course.course.clone(),
                media_url,
                seed_annotation: None,
            };
            catalog.insert(video.clone());
            store.save_catalog(&catalog)?;
            print_json(&video)
        }
        Command::Ingest { course, file } => {
            let store = open(&course)?;
            let reader = BufReader::new(File::open(&file).with_context(|| format!("opening {}", file.display()))?);
            let mut batch = Vec::new();
            for line in reader.lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                // An unparseable line is rejected as malformed with the rest of the batch.
                batch.push(serde_json::from_str(&line).unwrap_or(Value::Null));
            }
            let catalog = store.load_catalog()?;
            let mut log = store.open_log()?;
            let calendar = store.config().rules().calendar;
            let outcome = log.append_json(batch, &catalog, Some(&calendar))?;
            print_json(&outcome)
        }
        Command::Serve {
            port,
            data_dir,
            timezone,
            course_start,
            static_dir,
            bind,
        } => {
            let mut config = ServiceConfig::new(data_dir);
            config.static_dir = static_dir;
            config.course_start = course_start;
            config.timezone = timezone.as_deref().map(CourseCalendar::parse_timezone).transpose()?;
            let state = Arc::new(AppState::load(config, Arc::new(SystemClock))?);
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(contour_service::serve(state, (bind, port).into(), async {
                let _ = tokio::signal::ctrl_c().await;
                tracing::info!("shutting down");
            }))?;
            Ok(())
        }
        Command::Recompute { course, as_of } => {
            let store = open(&course)?;
            let as_of = as_of.unwrap_or_else(|| today(&store));
            let (_, report) = store.recompute_and_publish(&store.load_catalog()?, &store.read_events()?, as_of)?;
            print_json(&report)
        }
        Command::Report { course, as_of } => {
            let store = open(&course)?;
            let rules = store.config().rules();
            let mut events = store.read_events()?;
            if let Some(d) = as_of {
                let horizon = rules.calendar.midnight(d);
                events.retain(|e| e.wall_time < horizon);
            }
            print_json(&usage_summary(&events, &store.load_catalog()?, &rules)?)
        }
        Command::Evaluate {
            course,
            annotations,
            threshold,
            min_len,
            min_overlap,
            as_of,
            csv,
            svg_dir,
        } => {
            let store = open(&course)?;
            let rules = store.config().rules();
            if let Some(t) = threshold.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
                bail!(CoreError::Config(format!("threshold {t} must be in (0, 1]")));
            }
            let annotations = read_annotations(
                File::open(&annotations).with_context(|| format!("opening {}", annotations.display()))?,
            )?;
            let as_of = as_of.unwrap_or_else(|| today(&store));
            let catalog = store.load_catalog()?;
            let events = store.read_events()?;
            let timelines = recompute_all(&catalog, &events, rules.calendar.midnight(as_of), &rules, as_of)?;
            let base = PlateauParams {
                threshold_frac: threshold[0],
                min_len_s: min_len,
                min_overlap_s: min_overlap,
            };
            let first = evaluate_timelines(&timelines, &annotations, base);
            if let Some(path) = csv {
                write_report_csv(create(&path)?, &first)?;
            }
            if let Some(dir) = svg_dir {
                std::fs::create_dir_all(&dir)?;
                for row in &first.rows {
                    let t = timelines.iter().find(|t| t.video_id == row.video_id).expect("evaluated timeline");
                    let svg = render_svg(
                        t,
                        &SvgOptions {
                            annotation: Some(row.annotation),
                            matched: Some(row.matched),
                            title: catalog.get(&row.video_id).map(|v| v.title.clone()),
                            ..SvgOptions::default()
                        },
                    );
                    std::fs::write(dir.join(format!("{}.svg", row.video_id)), svg)?;
                }
            }
            print_json(&json!({
                "as_of": as_of,
                "min_len_s": min_len,
                "min_overlap_s": min_overlap,
                "sweep": threshold_sweep(&timelines, &annotations, &threshold, base),
                "excluded": first.excluded,
            }))
        }
        Command::Simulate {
            course,
            profiles,
            seed,
            days,
            out,
        } => {
            let store = open(&course)?;
            let cohort = CohortSpec::load(&profiles)?;
            let events = simulate_cohort(&cohort, &store.load_catalog()?, &store.config().rules(), days, seed)?;
            match out {
                Some(path) => {
                    write_log(create(&path)?, &events)?;
                    print_json(&json!({ "events": events.len(), "students": cohort.student_count(), "out": path }))
                }
                None => Ok(write_log(std::io::stdout().lock(), &events)?),
            }
        }
        Command::Export {
            course,
            video,
            format,
            as_of,
            out,
        } => {
            let store = open(&course)?;
            let catalog = store.load_catalog()?;
            let meta = catalog.get(&video).ok_or_else(|| CliError::UnknownVideo(video.clone()))?;
            let timeline = export_timeline(&store, meta, as_of)?;
            let mut w: Box<dyn Write> = match &out {
                Some(path) => Box::new(create(path)?),
                None => Box::new(std::io::stdout().lock()),
            };
            match format {
                Format::Csv => snapshot::write_csv(&mut w, &timeline)?,
                Format::Svg => {
                    let svg = render_svg(
                        &timeline,
                        &SvgOptions {
                            annotation: meta.seed_annotation,
                            title: Some(meta.title.clone()),
                            ..SvgOptions::default()
                        },
                    );
                    w.write_all(svg.as_bytes())?;
                    w.flush()?;
                }
            }
            Ok(())
        }
    }
}

/// The published snapshot, a fresh in-memory recompute when `as_of` is
/// given, or zeros for a video that was never published.
fn export_timeline(store: &CourseStore, meta: &VideoMeta, as_of: Option<NaiveDate>) -> Result<BinScoreTimeline> {
    let rules = store.config().rules();
    if let Some(d) = as_of {
        let events: Vec<InteractionEvent> = store.read_events()?;
        return Ok(recompute_timeline(meta, &events, rules.calendar.midnight(d), &rules, d)?);
    }
    match store.read_snapshot(&meta.video_id)? {
        Some(t) if t.duration_s() == meta.duration_s => Ok(t),
        _ => {
            let d = today(store);
            Ok(BinScoreTimeline::cold(
                meta.video_id.clone(),
                meta.duration_s,
                d,
                rules.calendar.midnight(d),
            ))
        }
    }
}

fn open(args: &CourseArgs) -> Result<CourseStore> {
    if !args.data_dir.is_dir() {
        bail!(CliError::NoDataDir(args.data_dir.clone()));
    }
    if !args.data_dir.join(&args.course).join("course.toml").is_file() {
        bail!(CliError::UnknownCourse {
            course: args.course.clone(),
            dir: args.data_dir.clone(),
        });
    }
    Ok(CourseStore::open(&args.data_dir, &args.course)?)
}

fn today(store: &CourseStore) -> NaiveDate {
    store.config().rules().calendar.local_date(Utc::now())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}
