//! HTTP+JSON API.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/participants` | create or replace a participant |
//! | GET | `/participants/{id}` | |
//! | POST | `/routes` | submit a route record; returns `{"id": "project:route"}` |
//! | GET | `/routes/{id}` | |
//! | POST | `/routes/{id}/analysis?k=&hour=` | run and store an analysis |
//! | GET | `/routes/{id}/analysis` | |
//! | POST | `/routes/{id}/package` | issue the next package version |
//! | GET | `/packages/{id}?format=structured\|hypertext` | |
//! | POST | `/feedback` | |
//! | GET | `/projects/{id}/effectiveness` | |
//! | GET | `/projects/{id}/report?format=json\|csv` | |
//! | PUT | `/network` | replace the street network |
//! | PUT | `/rasters/{hour}` | replace the raster for an hour |
//!
//! Errors are `{"error": {"kind", "message"}}` with status 404 for unknown
//! ids, 409 for workflow-order conflicts and 422 for invalid payloads.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock, RwLockReadGuard, RwLockWriteGuard};

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use cleanroute_core::package::{render_package, RenderFormat};
use serde::Serialize;
use serde_json::json;

use crate::model::{FeedbackRecord, Participant, PlatformError, RouteRecord};
use crate::report::{build_report, ReportFormat};
use crate::service::Platform;

pub type SharedPlatform = Arc<RwLock<Platform>>;

impl IntoResponse for PlatformError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.to_json())).into_response()
    }
}

type ApiResult<T> = Result<T, PlatformError>;
type Params = Result<Query<BTreeMap<String, String>>, QueryRejection>;

fn read(state: &SharedPlatform) -> RwLockReadGuard<'_, Platform> {
    state.read().unwrap_or_else(|e| e.into_inner())
}

fn write(state: &SharedPlatform) -> RwLockWriteGuard<'_, Platform> {
    state.write().unwrap_or_else(|e| e.into_inner())
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| PlatformError::Invalid(e.body_text()))
}

fn params(q: Params) -> ApiResult<BTreeMap<String, String>> {
    q.map(|Query(m)| m)
        .map_err(|e| PlatformError::Invalid(e.body_text()))
}

fn param<T: std::str::FromStr>(q: &BTreeMap<String, String>, name: &str) -> ApiResult<Option<T>> {
    q.get(name)
        .map(|v| {
            v.parse().map_err(|_| {
                PlatformError::Invalid(format!("query parameter {name}={v:?} is not valid"))
            })
        })
        .transpose()
}

fn created<T: Serialize>(v: T) -> Response {
    (StatusCode::CREATED, Json(v)).into_response()
}

async fn create_participant(
    State(s): State<SharedPlatform>,
    payload: Result<Json<Participant>, JsonRejection>,
) -> ApiResult<Response> {
    let p = body(payload)?;
    let id = p.id.clone();
    write(&s).create_participant(p)?;
    Ok(created(json!({ "id": id })))
}

async fn get_participant(
    State(s): State<SharedPlatform>,
    Path(id): Path<String>,
) -> ApiResult<Json<Participant>> {
    Ok(Json(read(&s).participant(&id)?.clone()))
}

async fn submit_route(
    State(s): State<SharedPlatform>,
    payload: Result<Json<RouteRecord>, JsonRejection>,
) -> ApiResult<Response> {
    let id = write(&s).submit_route(body(payload)?)?;
    Ok(created(json!({ "id": id })))
}

async fn get_route(
    State(s): State<SharedPlatform>,
    Path(id): Path<String>,
) -> ApiResult<Json<RouteRecord>> {
    Ok(Json(read(&s).route(&id)?.clone()))
}

async fn run_analysis(
    State(s): State<SharedPlatform>,
    Path(id): Path<String>,
    q: Params,
) -> ApiResult<Response> {
    let q = params(q)?;
    let job = read(&s).prepare_analysis(&id, param(&q, "k")?, param(&q, "hour")?)?;
    // The search runs on snapshots, without holding the lock.
    let (job, result) = tokio::task::spawn_blocking(move || {
        let r = job.run();
        (job, r)
    })
    .await
    .map_err(|e| PlatformError::Storage(format!("analysis task failed: {e}")))?;
    let mut p = write(&s);
    let analysis = p.commit_analysis(&job, result?)?;
    Ok(Json(analysis).into_response())
}

async fn get_analysis(
    State(s): State<SharedPlatform>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    Ok(Json(read(&s).analysis(&id)?).into_response())
}

async fn issue_package(
    State(s): State<SharedPlatform>,
    Path(id): Path<String>,
) -> ApiResult<Response> {
    let mut p = write(&s);
    Ok(created(p.issue_package(&id)?))
}

async fn get_package(
    State(s): State<SharedPlatform>,
    Path(id): Path<String>,
    q: Params,
) -> ApiResult<Response> {
    let q = params(q)?;
    let format = match q.get("format") {
        Some(f) => f
            .parse::<RenderFormat>()
            .map_err(|e| PlatformError::Invalid(e.to_string()))?,
        None => RenderFormat::Structured,
    };
    let p = read(&s);
    let stored = p.package(&id)?;
    let bytes = render_package(&stored.package, format)
        .map_err(|e| PlatformError::Domain(e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, format.content_type())], bytes).into_response())
}

async fn submit_feedback(
    State(s): State<SharedPlatform>,
    payload: Result<Json<FeedbackRecord>, JsonRejection>,
) -> ApiResult<Response> {
    let rec = body(payload)?;
    let id = rec.participant_id.clone();
    write(&s).submit_feedback(rec)?;
    Ok(created(json!({ "participant_id": id })))
}

async fn effectiveness(
    State(s): State<SharedPlatform>,
    Path(project): Path<String>,
) -> ApiResult<Response> {
    Ok(Json(read(&s).effectiveness(Some(&project))).into_response())
}

async fn report(
    State(s): State<SharedPlatform>,
    Path(project): Path<String>,
    q: Params,
) -> ApiResult<Response> {
    let q = params(q)?;
    let format = param::<String>(&q, "format")?
        .map(|f| f.parse::<ReportFormat>())
        .transpose()?
        .unwrap_or(ReportFormat::Json);
    let bytes = build_report(&read(&s), Some(&project)).render(format);
    let ctype = match format {
        ReportFormat::Json => "application/json",
        ReportFormat::Csv => "text/csv; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, ctype)], bytes).into_response())
}

async fn put_network(State(s): State<SharedPlatform>, bytes: Bytes) -> ApiResult<Response> {
    let report = write(&s).ingest_network(&bytes)?;
    Ok(Json(report).into_response())
}

async fn put_raster(
    State(s): State<SharedPlatform>,
    Path(hour): Path<String>,
    bytes: Bytes,
) -> ApiResult<Response> {
    let hour: u8 = hour
        .parse()
        .map_err(|_| PlatformError::Invalid(format!("hour {hour:?} is not an integer 0-23")))?;
    write(&s).ingest_raster(hour, &bytes)?;
    Ok(Json(json!({ "hour": hour })).into_response())
}

async fn fallback() -> PlatformError {
    PlatformError::NotFound("no such endpoint".into())
}

pub fn router(state: SharedPlatform) -> Router {
    Router::new()
        .route("/participants", post(create_participant))
        .route("/participants/{id}", get(get_participant))
        .route("/routes", post(submit_route))
        .route("/routes/{id}", get(get_route))
        .route(
            "/routes/{id}/analysis",
            post(run_analysis).get(get_analysis),
        )
        .route("/routes/{id}/package", post(issue_package))
        .route("/packages/{id}", get(get_package))
        .route("/feedback", post(submit_feedback))
        .route("/projects/{id}/effectiveness", get(effectiveness))
        .route("/projects/{id}/report", get(report))
        .route("/network", put(put_network))
        .route("/rasters/{hour}", put(put_raster))
        .fallback(fallback)
        .with_state(state)
}

/// Serves the API until the process is stopped.
pub async fn serve(state: SharedPlatform, addr: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state)).await
}
