//! JSON-over-HTTP API for a defectdep store.
//!
//! Every response body is an envelope: `{"ok": true, "data": ...}` or
//! `{"ok": false, "error": {"code": ..., "message": ...}}`. The store sits
//! behind a read/write lock, so writes are serialized and reads see a
//! consistent snapshot.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use defectdep_core::graph::DependencyCounts;
use defectdep_core::priority::{PriorityConfig, PriorityError, PriorityOverrides};
use defectdep_core::store::{DefectReport, DefectStatus, ModelStore, StoreError};
use defectdep_core::workflow::{
    evaluate, rank_version, recompute_all, resolve_version, MetricView, RankingView,
    RecomputeOptions, WorkflowError,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::RwLock;

pub type SharedStore = Arc<RwLock<ModelStore>>;

pub fn shared(store: ModelStore) -> SharedStore {
    Arc::new(RwLock::new(store))
}

/// An error response.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub details: Option<Value>,
}

impl ApiError {
    pub fn usage(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "BadRequest".into(),
            message: message.into(),
            details: None,
        }
    }

    fn new(code: &str, message: String) -> Self {
        let status = match code {
            "NotFound" => StatusCode::NOT_FOUND,
            "DuplicateVersion" | "DuplicateDefect" => StatusCode::CONFLICT,
            "InvalidId" => StatusCode::BAD_REQUEST,
            "Io" | "CorruptStore" => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError {
            status,
            code: code.to_string(),
            message,
            details: None,
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let mut error = ApiError::new(e.code(), e.to_string());
        if let StoreError::InvalidModel(report) = &e {
            error.details = serde_json::to_value(&report.findings).ok();
        }
        error
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        match e {
            WorkflowError::Store(inner) => inner.into(),
            other => ApiError::new(other.code(), other.to_string()),
        }
    }
}

impl From<PriorityError> for ApiError {
    fn from(e: PriorityError) -> Self {
        ApiError::new(e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::usage(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::usage(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({"code": self.code, "message": self.message});
        if let Some(details) = self.details {
            error["details"] = details;
        }
        (self.status, Json(json!({"ok": false, "error": error}))).into_response()
    }
}

struct Reply<T>(StatusCode, T);

impl<T: Serialize> IntoResponse for Reply<T> {
    fn into_response(self) -> Response {
        (self.0, Json(json!({"ok": true, "data": self.1}))).into_response()
    }
}

fn ok<T>(data: T) -> Reply<T> {
    Reply(StatusCode::OK, data)
}

type ApiResult<T> = Result<Reply<T>, ApiError>;

pub fn router(store: SharedStore) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/versions", get(list_versions))
        .route("/api/models", post(put_model))
        .route("/api/models/{version}/counts", get(model_counts))
        .route("/api/defects", get(list_defects).post(put_defect))
        .route("/api/defects/{id}/metric", get(defect_metric))
        .route("/api/recompute", post(recompute))
        .route("/api/rank", post(rank))
        .route("/api/config/priority", get(get_config).put(put_config))
        .with_state(store)
}

/// Opens the store at `root` and serves the API on `addr` until the process
/// stops.
pub async fn serve(root: &Path, addr: SocketAddr) -> std::io::Result<()> {
    let store = ModelStore::open(root).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(shared(store))).await
}

async fn health(State(store): State<SharedStore>) -> ApiResult<Value> {
    let store = store.read().await;
    Ok(ok(json!({
        "status": "ok",
        "versions": store.list_versions().len(),
        "defects": store.list_defects(None).len(),
    })))
}

async fn list_versions(State(store): State<SharedStore>) -> ApiResult<Value> {
    let store = store.read().await;
    Ok(ok(json!(store.list_versions())))
}

#[derive(Deserialize)]
struct VersionQuery {
    version: Option<String>,
}

async fn put_model(
    State(store): State<SharedStore>,
    query: Result<Query<VersionQuery>, QueryRejection>,
    body: Bytes,
) -> ApiResult<Value> {
    let Query(query) = query?;
    let version = query
        .version
        .ok_or_else(|| ApiError::usage("missing query parameter `version`"))?;
    let mut store = store.write().await;
    let entry = store.put_model(&body, &version)?;
    Ok(Reply(StatusCode::CREATED, json!(entry)))
}

async fn model_counts(
    State(store): State<SharedStore>,
    UrlPath(version): UrlPath<String>,
) -> ApiResult<DependencyCounts> {
    let store = store.read().await;
    Ok(ok(store.version_entry(&version)?.counts()))
}

#[derive(Deserialize)]
struct StatusQuery {
    status: Option<String>,
}

async fn list_defects(
    State(store): State<SharedStore>,
    query: Result<Query<StatusQuery>, QueryRejection>,
) -> ApiResult<Vec<DefectReport>> {
    let Query(query) = query?;
    let status = query
        .status
        .map(|s| s.parse::<DefectStatus>())
        .transpose()
        .map_err(ApiError::usage)?;
    let store = store.read().await;
    Ok(ok(store.list_defects(status).into_iter().cloned().collect()))
}

async fn put_defect(
    State(store): State<SharedStore>,
    body: Result<Json<DefectReport>, JsonRejection>,
) -> ApiResult<DefectReport> {
    let Json(report) = body?;
    let mut store = store.write().await;
    let stored = store.put_defect(report)?;
    Ok(Reply(StatusCode::CREATED, stored))
}

async fn defect_metric(
    State(store): State<SharedStore>,
    UrlPath(id): UrlPath<String>,
    query: Result<Query<VersionQuery>, QueryRejection>,
) -> ApiResult<MetricView> {
    let Query(query) = query?;
    let store = store.read().await;
    store.get_defect(&id)?;
    let version = resolve_version(&store, query.version.as_deref())?;
    let evaluation = evaluate(&store, &id, &version)?;
    Ok(ok(MetricView::from(&evaluation)))
}

#[derive(Deserialize)]
struct RecomputeQuery {
    version: Option<String>,
    #[serde(default)]
    include_fixed: bool,
}

async fn recompute(
    State(store): State<SharedStore>,
    query: Result<Query<RecomputeQuery>, QueryRejection>,
) -> ApiResult<Value> {
    let Query(query) = query?;
    let mut store = store.write().await;
    let version = resolve_version(&store, query.version.as_deref())?;
    let entries = recompute_all(
        &mut store,
        &version,
        RecomputeOptions {
            include_fixed: query.include_fixed,
        },
    )?;
    Ok(ok(json!({"version": version, "entries": entries})))
}

/// Body of `POST /api/rank`; every field optional. Overrides apply to the
/// stored config for this request only.
#[derive(Deserialize, Default)]
#[serde(default)]
struct RankRequest {
    version: Option<String>,
    #[serde(flatten)]
    overrides: PriorityOverrides,
}

async fn rank(
    State(store): State<SharedStore>,
    query: Result<Query<VersionQuery>, QueryRejection>,
    body: Bytes,
) -> ApiResult<RankingView> {
    let Query(query) = query?;
    let request: RankRequest = if body.iter().all(u8::is_ascii_whitespace) {
        RankRequest::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::usage(e.to_string()))?
    };
    let store = store.read().await;
    let version = resolve_version(&store, query.version.or(request.version).as_deref())?;
    let config = store.priority_config().with_overrides(&request.overrides)?;
    let ranking = rank_version(&store, &version, &config)?;
    Ok(ok(RankingView::from(&ranking)))
}

async fn get_config(State(store): State<SharedStore>) -> ApiResult<PriorityConfig> {
    let store = store.read().await;
    Ok(ok(store.priority_config()))
}

async fn put_config(
    State(store): State<SharedStore>,
    body: Result<Json<PriorityConfig>, JsonRejection>,
) -> ApiResult<PriorityConfig> {
    let Json(config) = body?;
    config.check()?;
    let mut store = store.write().await;
    store.put_priority_config(config.clone())?;
    Ok(ok(config))
}
