use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, Utc};
use contour_core::store::is_valid_id;
use contour_core::{ImportantPartAnnotation, VideoMeta};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::auth::{pseudonym, Claims, Role};
use crate::course::CourseHandle;
use crate::error::ApiError;
use crate::{AppState, MAX_BATCH};

type AppResult<T> = Result<T, ApiError>;

pub fn routes() -> Router<Arc<AppState>> {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/courses/{course}/login", post(login))
        .route("/api/courses/{course}/events", post(post_events))
        .route("/api/courses/{course}/videos", get(list_videos).post(add_video))
        .route("/api/courses/{course}/videos/{video}/timeline", get(get_timeline))
        .route("/api/courses/{course}/recompute", post(recompute))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

fn course<'a>(state: &'a AppState, id: &str) -> AppResult<&'a Arc<CourseHandle>> {
    state
        .course(id)
        .ok_or_else(|| ApiError::not_found(format!("unknown course {id}")))
}

fn authorize<'a>(state: &'a AppState, headers: &HeaderMap, course_id: &str) -> AppResult<(&'a Arc<CourseHandle>, Claims)> {
    let handle = course(state, course_id)?;
    let token = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .ok_or_else(ApiError::unauthorized)?;
    let claims = state
        .tokens
        .check(token.trim(), course_id, state.clock.now())
        .ok_or_else(ApiError::unauthorized)?;
    Ok((handle, claims))
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> AppResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> AppResult<T> + Send + 'static) -> AppResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

#[derive(Deserialize)]
struct LoginRequest {
    email: String,
    code: String,
}

#[derive(Serialize)]
struct LoginResponse {
    token: String,
    student_id: String,
    role: Role,
    expires_at: String,
}

async fn login(
    State(state): State<Arc<AppState>>,
    Path(course_id): Path<String>,
    body: Bytes,
) -> AppResult<Json<LoginResponse>> {
    let handle = course(&state, &course_id)?;
    let req: LoginRequest = parse_json(&body)?;
    if req.email.trim().is_empty() || !req.email.contains('@') {
        return Err(ApiError::bad_request("a valid email is required"));
    }
    let cfg = handle.store().config();
    let role = if req.code == cfg.join_code {
        Role::Student
    } else if cfg.instructor_code.as_deref() == Some(req.code.as_str()) {
        Role::Instructor
    } else {
        return Err(ApiError::new(StatusCode::UNAUTHORIZED, "bad_code", "wrong course code"));
    };
    let (token, claims) = state
        .tokens
        .issue(&course_id, pseudonym(&course_id, &req.email), role, state.clock.now());
    Ok(Json(LoginResponse {
        token,
        student_id: claims.student_id,
        role,
        expires_at: contour_core::timefmt::format_millis(&claims.expires_at),
    }))
}

/// Accepts a JSON array of events or `{"events": [...]}`. The token's
/// student id replaces whatever the client sent.
async fn post_events(
    State(state): State<Arc<AppState>>,
    Path(course_id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> AppResult<impl IntoResponse> {
    let (handle, claims) = authorize(&state, &headers, &course_id)?;
    let batch = match parse_json::<Value>(&body)? {
        Value::Array(items) => items,
        Value::Object(mut obj) => match obj.remove("events") {
            Some(Value::Array(items)) => items,
            _ => return Err(ApiError::bad_request("expected an array of events")),
        },
        _ => return Err(ApiError::bad_request("expected an array of events")),
    };
    if batch.len() > MAX_BATCH {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "batch_too_large",
            format!("at most {MAX_BATCH} events per batch"),
        ));
    }
    let batch: Vec<Value> = batch
        .into_iter()
        .map(|mut v| {
            if let Some(obj) = v.as_object_mut() {
                obj.insert("student_id".into(), Value::String(claims.student_id.clone()));
            }
            v
        })
        .collect();
    let handle = handle.clone();
    let outcome = blocking(move || handle.append(batch)).await?;
    Ok((StatusCode::ACCEPTED, Json(outcome)))
}

async fn list_videos(
    State(state): State<Arc<AppState>>,
    Path(course_id): Path<String>,
    headers: HeaderMap,
) -> AppResult<Json<Vec<VideoMeta>>> {
    let (handle, _) = authorize(&state, &headers, &course_id)?;
    Ok(Json(handle.catalog().iter().cloned().collect()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewVideo {
    #[serde(default)]
    video_id: Option<String>,
    title: String,
    #[serde(default)]
    duration_s: Option<u32>,
    #[serde(default)]
    media_url: Option<String>,
    #[serde(default)]
    published_at: Option<NaiveDate>,
    #[serde(default)]
    seed_annotation: Option<ImportantPartAnnotation>,
}

async fn add_video(
    State(state): State<Arc<AppState>>,
    Path(course_id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> AppResult<impl IntoResponse> {
    let (handle, claims) = authorize(&state, &headers, &course_id)?;
    if claims.role != Role::Instructor {
        return Err(ApiError::forbidden("only instructors can register videos"));
    }
    let req: NewVideo = parse_json(&body)?;
    let duration_s = match req.duration_s {
        Some(d) if d >= 1 => d,
        Some(_) => return Err(ApiError::bad_request("duration_s must be at least 1")),
        None => return Err(ApiError::bad_request("duration_s is required")),
    };
    if let Some(a) = req.seed_annotation {
        if !(a.start_s < a.end_s && a.end_s <= duration_s) {
            return Err(ApiError::bad_request("seed_annotation must satisfy start_s < end_s <= duration_s"));
        }
    }
    let now = state.clock.now();
    let video_id = match req.video_id {
        Some(id) if is_valid_id(&id) => id,
        Some(id) => return Err(ApiError::bad_request(format!("invalid video_id {id:?}"))),
        None => String::new(),
    };
    let video = VideoMeta {
        video_id,
        title: req.title,
        duration_s,
        published_at: req
            .published_at
            .unwrap_or_else(|| handle.rules().calendar.local_date(now)),
        course_id: course_id.clone(),
        media_url: req.media_url,
        seed_annotation: req.seed_annotation,
    };
    let h = handle.clone();
    let video = blocking(move || h.register(video, now)).await?;
    Ok((StatusCode::CREATED, Json(video)))
}

#[derive(Serialize)]
struct TimelineResponse {
    video_id: String,
    duration_s: u32,
    computed_at: NaiveDate,
    event_horizon: String,
    normalized: Vec<f64>,
}

async fn get_timeline(
    State(state): State<Arc<AppState>>,
    Path((course_id, video_id)): Path<(String, String)>,
    headers: HeaderMap,
) -> AppResult<Json<TimelineResponse>> {
    let (handle, _) = authorize(&state, &headers, &course_id)?;
    let t = handle
        .timeline(&video_id)
        .ok_or_else(|| ApiError::not_found(format!("unknown video {video_id}")))?;
    Ok(Json(TimelineResponse {
        video_id: t.video_id.clone(),
        duration_s: t.duration_s(),
        computed_at: t.computed_at,
        event_horizon: contour_core::timefmt::format_millis(&t.event_horizon),
        normalized: t.normalized.clone(),
    }))
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RecomputeRequest {
    #[serde(default)]
    as_of: Option<NaiveDate>,
}

/// Manual trigger of the nightly publish. Defaults to today's local date.
async fn recompute(
    State(state): State<Arc<AppState>>,
    Path(course_id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> AppResult<impl IntoResponse> {
    let (handle, claims) = authorize(&state, &headers, &course_id)?;
    if claims.role != Role::Instructor {
        return Err(ApiError::forbidden("only instructors can trigger a recompute"));
    }
    let req: RecomputeRequest = if body.iter().all(u8::is_ascii_whitespace) {
        RecomputeRequest::default()
    } else {
        parse_json(&body)?
    };
    let now: DateTime<Utc> = state.clock.now();
    let as_of = req
        .as_of
        .unwrap_or_else(|| handle.rules().calendar.local_date(now));
    let h = handle.clone();
    let report = blocking(move || h.recompute(as_of).map_err(ApiError::internal)).await?;
    Ok(Json(report))
}
