//! HTTP JSON API over the engine.
//!
//! | method | path | |
//! |---|---|---|
//! | `POST` | `/datasets` | upload CSV (raw body or multipart) |
//! | `GET` | `/datasets/{id}` | column summaries |
//! | `DELETE` | `/datasets/{id}` | drop a dataset |
//! | `GET` | `/datasets/{id}/columns` | values, bucket labels, current fractions |
//! | `POST` | `/datasets/{id}/whatif` | comparison report for one scenario |
//! | `POST` | `/datasets/{id}/margins` | marginal curve and optimal fraction |
//! | `POST` | `/datasets/{id}/recommendations` | start a sweep job |
//! | `POST` | `/datasets/{id}/backtest` | backtest report (`"async": true` for a job) |
//! | `GET` | `/jobs/{id}` | job status and result |
//! | `GET` | `/jobs/{id}/events?from=N` | progress events as NDJSON |
//!
//! Errors are `{"code": ..., "message": ...}` with a 4xx/5xx status.

mod error;
pub mod registry;

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::BytesRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use whim_core::engine::SweepPlan;
use whim_core::Dataset;

pub use error::{ApiError, ErrorBody};
use registry::{Job, JobState, Registry};

use crate::analysis::{self, column_summaries, BacktestRequest, ColumnSummary, MarginsRequest, RecommendRequest, WhatIfRequest};
use crate::config::Settings;
use crate::error::WhimError;
use crate::io::read_csv;
use crate::sweep::run_plan;

#[derive(Clone)]
pub struct AppState {
    pub registry: Arc<Registry>,
    pub settings: Arc<Settings>,
    pub pool: Arc<rayon::ThreadPool>,
}

impl AppState {
    pub fn new(settings: Settings) -> Result<Self, WhimError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.service.workers.max(1))
            .thread_name(|i| format!("whim-worker-{i}"))
            .build()
            .map_err(|e| WhimError::Config(e.to_string()))?;
        Ok(Self {
            registry: Arc::new(Registry::default()),
            settings: Arc::new(settings),
            pool: Arc::new(pool),
        })
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.settings.service.max_body_bytes;
    Router::new()
        .route("/healthz", get(|| async { Json(serde_json::json!({"status": "ok"})) }))
        .route("/datasets", post(upload))
        .route("/datasets/{id}", get(dataset_info).delete(delete_dataset))
        .route("/datasets/{id}/columns", get(columns))
        .route("/datasets/{id}/whatif", post(whatif))
        .route("/datasets/{id}/margins", post(margins))
        .route("/datasets/{id}/recommendations", post(recommendations))
        .route("/datasets/{id}/backtest", post(backtest))
        .route("/jobs/{id}", get(job_status))
        .route("/jobs/{id}/events", get(job_events))
        .fallback(|| async { ApiError::not_found("not_found", "no such route") })
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

/// Binds and serves until Ctrl-C.
pub async fn serve(settings: Settings) -> Result<(), WhimError> {
    let bind = settings.service.bind.clone();
    let state = AppState::new(settings)?;
    let listener = tokio::net::TcpListener::bind(&bind).await.map_err(|e| WhimError::io(bind.as_str(), e))?;
    let local = listener.local_addr().map_err(|e| WhimError::io(bind.as_str(), e))?;
    eprintln!("whim listening on http://{local}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| WhimError::io(bind.as_str(), e))
}

type ApiResult<T> = Result<T, ApiError>;

fn body_error(rejection: BytesRejection) -> ApiError {
    let status = rejection.status();
    let code = if status == StatusCode::PAYLOAD_TOO_LARGE { "payload_too_large" } else { "bad_body" };
    ApiError::new(status, code, rejection.body_text())
}

/// Parses a JSON body; an empty body reads as `{}`.
fn parse_json<T: DeserializeOwned>(body: Result<Bytes, BytesRejection>) -> ApiResult<T> {
    let bytes = body.map_err(body_error)?;
    let slice: &[u8] = if bytes.iter().all(u8::is_ascii_whitespace) { b"{}" } else { &bytes };
    serde_json::from_slice(slice).map_err(|e| ApiError::bad_request("invalid_json", e.to_string()))
}

fn dataset(state: &AppState, id: &str) -> ApiResult<Arc<Dataset>> {
    state
        .registry
        .dataset(id)
        .ok_or_else(|| ApiError::not_found("unknown_dataset", format!("no dataset `{id}`")))
}

/// Runs CPU-bound work off the async runtime, on the worker pool.
async fn blocking<T, F>(state: &AppState, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce() -> Result<T, WhimError> + Send + 'static,
{
    let pool = state.pool.clone();
    tokio::task::spawn_blocking(move || pool.install(f))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetCreated {
    pub dataset_id: String,
    pub n_rows: usize,
    pub columns: Vec<ColumnSummary>,
}

async fn upload(State(state): State<AppState>, req: Request) -> ApiResult<Response> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let bytes = if is_multipart {
        let mut mp = Multipart::from_request(req, &state)
            .await
            .map_err(|e| ApiError::new(e.status(), "bad_multipart", e.body_text()))?;
        let field = mp
            .next_field()
            .await
            .map_err(|e| ApiError::new(e.status(), "bad_multipart", e.body_text()))?
            .ok_or_else(|| ApiError::bad_request("bad_multipart", "multipart body has no file field"))?;
        field.bytes().await.map_err(|e| ApiError::new(e.status(), "bad_multipart", e.body_text()))?
    } else {
        Bytes::from_request(req, &state).await.map_err(body_error)?
    };

    let settings = state.settings.clone();
    let ds = blocking(&state, move || read_csv(bytes.as_ref(), &settings.ingest, settings.service.max_rows)).await?;
    let created = DatasetCreated {
        n_rows: ds.n_rows(),
        columns: column_summaries(&ds),
        dataset_id: state.registry.insert_dataset(ds),
    };
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn dataset_info(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<DatasetCreated>> {
    let ds = dataset(&state, &id)?;
    Ok(Json(DatasetCreated {
        dataset_id: id,
        n_rows: ds.n_rows(),
        columns: column_summaries(&ds),
    }))
}

async fn delete_dataset(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    if state.registry.remove_dataset(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found("unknown_dataset", format!("no dataset `{id}`")))
    }
}

async fn columns(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let ds = dataset(&state, &id)?;
    let settings = state.settings.clone();
    let details = blocking(&state, move || analysis::column_details(&ds, &settings)).await?;
    Ok(Json(serde_json::json!({ "dataset_id": id, "columns": details })).into_response())
}

async fn whatif(State(state): State<AppState>, Path(id): Path<String>, body: Result<Bytes, BytesRejection>) -> ApiResult<Response> {
    let ds = dataset(&state, &id)?;
    let req: WhatIfRequest = parse_json(body)?;
    let settings = state.settings.clone();
    let r = blocking(&state, move || analysis::whatif(&ds, &req, &settings)).await?;
    Ok(Json(r).into_response())
}

async fn margins(State(state): State<AppState>, Path(id): Path<String>, body: Result<Bytes, BytesRejection>) -> ApiResult<Response> {
    let ds = dataset(&state, &id)?;
    let req: MarginsRequest = parse_json(body)?;
    let settings = state.settings.clone();
    let r = blocking(&state, move || analysis::margins(&ds, &req, &settings)).await?;
    Ok(Json(r).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JobCreated {
    pub job_id: String,
}

fn spawn_job<F>(state: &AppState, job: Arc<Job>, work: F)
where
    F: FnOnce(&Job) -> Result<serde_json::Value, WhimError> + Send + 'static,
{
    let pool = state.pool.clone();
    tokio::task::spawn_blocking(move || {
        let run = std::panic::AssertUnwindSafe(|| pool.install(|| work(&job)));
        let outcome = match std::panic::catch_unwind(run) {
            Ok(Ok(result)) => JobState::Done { result },
            Ok(Err(e)) => JobState::Failed {
                code: e.code().into(),
                message: e.to_string(),
            },
            Err(_) => JobState::Failed {
                code: "internal".into(),
                message: "job panicked".into(),
            },
        };
        job.finish(outcome);
    });
}

fn accepted(job: &Job) -> Response {
    (StatusCode::ACCEPTED, Json(JobCreated { job_id: job.id.clone() })).into_response()
}

async fn recommendations(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Bytes, BytesRejection>,
) -> ApiResult<Response> {
    let ds = dataset(&state, &id)?;
    let req: RecommendRequest = parse_json(body)?;
    // Validate before creating the job so bad requests fail fast.
    let cfg = analysis::recommend_config(&req, &state.settings)?;
    let plan = SweepPlan::new(&ds, &cfg).map_err(ApiError::from)?;
    let job = state.registry.create_job("recommendations");
    let response = accepted(&job);
    spawn_job(&state, job, move |job| {
        job.start(plan.len());
        let report = run_plan(&ds, &plan, &|e| job.record(e));
        Ok(serde_json::to_value(report)?)
    });
    Ok(response)
}

async fn backtest(State(state): State<AppState>, Path(id): Path<String>, body: Result<Bytes, BytesRejection>) -> ApiResult<Response> {
    let ds = dataset(&state, &id)?;
    let req: BacktestRequest = parse_json(body)?;
    let settings = state.settings.clone();
    if req.run_async {
        let job = state.registry.create_job("backtest");
        let response = accepted(&job);
        spawn_job(&state, job, move |job| {
            job.start(1);
            Ok(serde_json::to_value(analysis::run_backtest(&ds, &req, &settings)?)?)
        });
        return Ok(response);
    }
    let r = blocking(&state, move || analysis::run_backtest(&ds, &req, &settings)).await?;
    Ok(Json(r).into_response())
}

#[derive(Debug, Serialize)]
struct JobView {
    job_id: String,
    kind: &'static str,
    #[serde(flatten)]
    state: JobState,
}

fn job(state: &AppState, id: &str) -> ApiResult<Arc<Job>> {
    state
        .registry
        .job(id)
        .ok_or_else(|| ApiError::not_found("unknown_job", format!("no job `{id}`")))
}

async fn job_status(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let job = job(&state, &id)?;
    Ok(Json(JobView {
        job_id: job.id.clone(),
        kind: job.kind,
        state: job.state(),
    })
    .into_response())
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    #[serde(default)]
    from: usize,
}

async fn job_events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> ApiResult<Response> {
    let job = job(&state, &id)?;
    let mut body = String::new();
    for e in job.events_from(q.from) {
        body.push_str(&serde_json::to_string(&e).map_err(WhimError::from)?);
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}
