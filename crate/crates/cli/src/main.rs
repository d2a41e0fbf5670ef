//! `contour`: operator tool for course data directories.
//!
//! Every failure ends with one JSON line on stderr,
//! `{"error": <kind>, "message": <text>}`, and a nonzero exit status
//! (2 for usage errors, 1 otherwise).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "contour", version, about = "Playback-weighted usage timelines for lecture videos")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CourseArgs {
    /// Directory holding one subdirectory per course
    #[arg(long, env = "CONTOUR_DATA_DIR", default_value = "data")]
    data_dir: PathBuf,
    /// Course id
    #[arg(long)]
    course: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create a course directory
    Init {
        #[command(flatten)]
        course: CourseArgs,
        /// Exactly 8 characters, shared with students
        #[arg(long)]
        join_code: String,
        #[arg(long)]
        instructor_code: Option<String>,
        #[arg(long)]
        course_start: NaiveDate,
        /// IANA zone name used for day boundaries
        #[arg(long, default_value = "UTC")]
        timezone: String,
        #[arg(long, default_value = "")]
        title: String,
        /// TOML file overriding scoring weights
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Register a video in the catalog
    AddVideo {
        #[command(flatten)]
        course: CourseArgs,
        #[arg(long)]
        video_id: String,
        #[arg(long)]
        title: String,
        #[arg(long)]
        duration: u32,
        /// Defaults to the course start
        #[arg(long)]
        published_at: Option<NaiveDate>,
        #[arg(long)]
        media_url: Option<String>,
    },
    /// Append an NDJSON event file to the course log
    Ingest {
        #[command(flatten)]
        course: CourseArgs,
        file: PathBuf,
    },
    /// Run the HTTP service
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "CONTOUR_DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        /// Overrides every course's timezone for this run
        #[arg(long)]
        timezone: Option<String>,
        /// Overrides every course's start date for this run
        #[arg(long)]
        course_start: Option<NaiveDate>,
        /// Built UI bundle to serve at /
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: std::net::IpAddr,
    },
    /// Recompute and publish every timeline as of the start of a date
    Recompute {
        #[command(flatten)]
        course: CourseArgs,
        /// Defaults to today in the course timezone
        #[arg(long)]
        as_of: Option<NaiveDate>,
    },
    /// Course usage summary
    Report {
        #[command(flatten)]
        course: CourseArgs,
        /// Only events before the start of this date
        #[arg(long)]
        as_of: Option<NaiveDate>,
    },
    /// Compare plateaus with annotated important parts
    Evaluate {
        #[command(flatten)]
        course: CourseArgs,
        /// CSV with header video_id,start_s,end_s
        #[arg(long)]
        annotations: PathBuf,
        /// Plateau threshold as a fraction of the maximum; repeat for a sweep
        #[arg(long, default_values_t = [0.9])]
        threshold: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        min_len: u32,
        #[arg(long, default_value_t = 1)]
        min_overlap: u32,
        /// Defaults to today in the course timezone
        #[arg(long)]
        as_of: Option<NaiveDate>,
        /// Per-video rows for the first threshold
        #[arg(long)]
        csv: Option<PathBuf>,
        /// One SVG per evaluated video, for the first threshold
        #[arg(long)]
        svg_dir: Option<PathBuf>,
    },
    /// Generate a synthetic event log for the course catalog
    Simulate {
        #[command(flatten)]
        course: CourseArgs,
        /// Behavior profile TOML
        #[arg(long)]
        profiles: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 14)]
        days: u32,
        /// NDJSON output; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export one video's timeline
    Export {
        #[command(flatten)]
        course: CourseArgs,
        #[arg(long)]
        video: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Recompute in memory as of this date instead of reading the published snapshot
        #[arg(long)]
        as_of: Option<NaiveDate>,
        /// Output file; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Svg,
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            eprint!("{text}");
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", error_line("usage", first.trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(commands::error_kind(&e), &format!("{e:#}")));
            ExitCode::FAILURE
        }
    }
}
