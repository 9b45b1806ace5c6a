//! HTTP front for the analysis engine.
//!
//! The service holds one immutable corpus snapshot behind an `Arc`. Every
//! request clones the `Arc` once and works on that snapshot until it
//! finishes; a reload builds a complete new snapshot off to the side and
//! swaps the pointer. Reloads are serialized, so snapshot ids advance by one
//! per successful reload.
//!
//! Endpoints:
//!
//! - `GET /kpis`
//! - `GET /elements`
//! - `POST /analysis`
//! - `POST /analysis/compare`
//! - `GET /sequence/{id}?margin=<ms>`
//! - `POST /admin/reload`

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use ivisflow::analysis::{
    run_analysis, run_compare, sequence_detail, AnalysisRequest, CompareRequest,
};
use ivisflow::error::{AnalysisError, LoadError, LookupError};
use ivisflow::glance::DEFAULT_TIMELINE_MARGIN_MS;
use ivisflow::ingest::{corpus_kpis, load_dir, Corpus, DashboardKpis, LoadReport, SnapshotCounter};
use ivisflow::model::{ConceptEntry, Millis, SequenceId};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub concept_db: Option<PathBuf>,
}

/// One loaded corpus with everything derived from it at load time.
#[derive(Debug)]
pub struct Snapshot {
    pub corpus: Corpus,
    pub kpis: DashboardKpis,
    pub report: LoadReport,
}

impl Snapshot {
    pub fn id(&self) -> u64 {
        self.corpus.snapshot_id
    }
}

pub struct AppState {
    config: ServiceConfig,
    current: RwLock<Option<Arc<Snapshot>>>,
    reload_lock: tokio::sync::Mutex<()>,
    counter: SnapshotCounter,
}

#[derive(Debug, Error)]
pub enum ReloadError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("loader task failed: {0}")]
    Join(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReloadSummary {
    pub snapshot_id: u64,
    pub trip_count: usize,
    pub excluded_trips: usize,
    pub bad_lines: usize,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(AppState {
            config,
            current: RwLock::new(None),
            reload_lock: tokio::sync::Mutex::new(()),
            counter: SnapshotCounter::new(),
        })
    }

    /// The snapshot new requests should use, if one has been loaded.
    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.current.read().expect("snapshot lock poisoned").clone()
    }

    /// Loads a fresh snapshot and swaps it in. On failure the served snapshot
    /// stays as it was.
    pub async fn reload(self: &Arc<Self>) -> Result<ReloadSummary, ReloadError> {
        let _writer = self.reload_lock.lock().await;
        let state = Arc::clone(self);
        let loaded = tokio::task::spawn_blocking(move || {
            load_dir(
                &state.config.data_dir,
                state.config.concept_db.as_deref(),
                &state.counter,
            )
        })
        .await
        .map_err(|e| ReloadError::Join(e.to_string()))??;

        let snapshot = Snapshot {
            kpis: corpus_kpis(&loaded.corpus),
            corpus: loaded.corpus,
            report: loaded.report,
        };
        let summary = ReloadSummary {
            snapshot_id: snapshot.id(),
            trip_count: snapshot.kpis.trip_count,
            excluded_trips: snapshot.report.excluded.len(),
            bad_lines: snapshot.report.bad_lines.len(),
        };
        for ex in &snapshot.report.excluded {
            tracing::warn!(trip = %ex.trip_id, violations = ?ex.violations, "trip excluded");
        }
        *self.current.write().expect("snapshot lock poisoned") = Some(Arc::new(snapshot));
        tracing::info!(snapshot_id = summary.snapshot_id, trips = summary.trip_count, "snapshot loaded");
        Ok(summary)
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

/// Error response: status plus a `{"error", "message"}` body.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            kind,
            message: message.into(),
        }
    }

    fn not_ready() -> Self {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "not_ready", "no snapshot loaded yet")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.kind,
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        let kind = match e {
            AnalysisError::InvalidRequest(_) => "invalid_request",
            AnalysisError::UnknownElement(_) => "unknown_element",
            AnalysisError::UnknownFlow(_) => "unknown_flow",
            AnalysisError::Flow(_) => "incomplete_metrics",
        };
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, kind, e.to_string())
    }
}

impl From<LookupError> for ApiError {
    fn from(e: LookupError) -> Self {
        match e {
            LookupError::Unknown(_) => ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string()),
            LookupError::Stale { .. } => ApiError::new(StatusCode::GONE, "stale_snapshot", e.to_string()),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", e.body_text())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn current(state: &AppState) -> Result<Arc<Snapshot>, ApiError> {
    state.snapshot().ok_or_else(ApiError::not_ready)
}

/// Runs CPU-bound work off the async executor.
async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ApiError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    })?
}

#[derive(Debug, Serialize, Deserialize)]
pub struct KpisResponse {
    pub snapshot_id: u64,
    #[serde(flatten)]
    pub kpis: DashboardKpis,
}

async fn kpis(State(state): State<Arc<AppState>>) -> ApiResult<KpisResponse> {
    let snap = current(&state)?;
    Ok(Json(KpisResponse {
        snapshot_id: snap.id(),
        kpis: snap.kpis.clone(),
    }))
}

async fn elements(State(state): State<Arc<AppState>>) -> ApiResult<Vec<ConceptEntry>> {
    let snap = current(&state)?;
    // BTreeMap keeps them sorted by element_id
    Ok(Json(snap.corpus.concept.values().cloned().collect()))
}

async fn analysis(
    State(state): State<Arc<AppState>>,
    body: Result<Json<AnalysisRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let snap = current(&state)?;
    let resp = blocking(move || run_analysis(&snap.corpus, &req).map_err(ApiError::from)).await?;
    Ok(Json(resp).into_response())
}

async fn compare(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CompareRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let snap = current(&state)?;
    let resp = blocking(move || run_compare(&snap.corpus, &req).map_err(ApiError::from)).await?;
    Ok(Json(resp).into_response())
}

#[derive(Debug, Deserialize)]
struct SequenceQuery {
    margin: Option<Millis>,
}

async fn sequence(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<SequenceQuery>,
) -> Result<Response, ApiError> {
    let id: SequenceId = id
        .parse()
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("unknown sequence {id}")))?;
    let margin = q.margin.unwrap_or(DEFAULT_TIMELINE_MARGIN_MS);
    if margin < 0 {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", "margin must be ≥ 0"));
    }
    let snap = current(&state)?;
    let detail = sequence_detail(&snap.corpus, &id, margin)?;
    Ok(Json(detail).into_response())
}

async fn reload(State(state): State<Arc<AppState>>) -> ApiResult<ReloadSummary> {
    state.reload().await.map(Json).map_err(|e| {
        tracing::error!(error = %e, "reload failed, keeping previous snapshot");
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "reload_failed", e.to_string())
    })
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/kpis", get(kpis))
        .route("/elements", get(elements))
        .route("/analysis", post(analysis))
        .route("/analysis/compare", post(compare))
        .route("/sequence/{id}", get(sequence))
        .route("/admin/reload", post(reload))
        .with_state(state)
}
