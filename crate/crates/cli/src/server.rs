//! HTTP JSON API over enumeration sessions.
//!
//! Datasets and sessions live in memory and are mirrored to `data_dir`:
//! datasets as their canonical JSON, sessions as a small descriptor plus a
//! [`SessionSnapshot`]. On startup everything found there is loaded back,
//! so a session continues where it stopped.
//!
//! Each session sits behind its own async mutex. Stepping runs on the
//! blocking pool while the lock is held, so concurrent `next` calls on one
//! session are serialized and different sessions proceed independently.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use anyhow::Context;
use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use svmenum::enumerator::SessionSnapshot;
use svmenum::metrics::{decision_values, Evaluator};
use svmenum::{Dataset, EnumConfig, EnumSession, KernelSpec, ModelRecord};
use tokio::sync::Mutex;
use tower_http::services::ServeDir;

use crate::cli::{Format, ServeArgs};
use crate::commands::record;
use crate::load::{self, LoadOptions};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} `{id}`"))
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<svmenum::Error> for ApiError {
    fn from(e: svmenum::Error) -> Self {
        use svmenum::Error::*;
        let (status, code) = match &e {
            InvalidKernel(_) | InvalidParameter(_) => (StatusCode::BAD_REQUEST, "invalid_parameter"),
            NotConverged { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "not_converged"),
            HeapOverflow(_) => (StatusCode::INTERNAL_SERVER_ERROR, "heap_overflow"),
            Io { .. } | SnapshotMismatch(_) | OracleIterationCap(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_dataset"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Parameters a session was created with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub dataset_id: String,
    #[serde(default)]
    pub test_dataset_id: Option<String>,
    #[serde(default)]
    pub sensitive: Option<String>,
    pub c: f64,
    #[serde(default)]
    pub kernel: KernelSpec,
}

#[derive(Serialize, Deserialize)]
struct StoredSession {
    spec: SessionSpec,
    selection: Vec<usize>,
    snapshot: SessionSnapshot,
}

struct Session {
    id: String,
    spec: SessionSpec,
    enumeration: EnumSession,
    evaluator: Evaluator,
    records: Vec<ModelRecord>,
    selection: Vec<usize>,
}

impl Session {
    fn advance(&mut self) -> svmenum::Result<Option<ModelRecord>> {
        let Some(model) = self.enumeration.next_model()? else {
            return Ok(None);
        };
        let r = record(&self.evaluator, self.enumeration.emitted(), &model)?;
        self.records.push(r.clone());
        Ok(Some(r))
    }

    fn stored(&self) -> StoredSession {
        StoredSession {
            spec: self.spec.clone(),
            selection: self.selection.clone(),
            snapshot: self.enumeration.snapshot(),
        }
    }

    fn summary(&self) -> Value {
        let stats = self.enumeration.stats();
        json!({
            "session_id": self.id,
            "dataset_id": self.spec.dataset_id,
            "test_dataset_id": self.spec.test_dataset_id,
            "sensitive": self.spec.sensitive,
            "c": self.spec.c,
            "kernel": self.spec.kernel,
            "emitted": self.records.len(),
            "pending": self.enumeration.heap_len(),
            "exhausted": self.enumeration.is_exhausted(),
            "selection": self.selection,
            "stats": {
                "solver_calls": stats.solver_calls,
                "heap_pops": stats.heap_pops,
                "duplicates": stats.duplicates,
                "insertions": stats.insertions,
                "failed_children": stats.failed_children.len(),
                "peak_heap": stats.peak_heap,
            },
        })
    }
}

struct Inner {
    data_dir: PathBuf,
    datasets: RwLock<BTreeMap<String, Arc<Dataset>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

/// Shared service state; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

fn write_atomically(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, contents)?;
    std::fs::rename(tmp, path)
}

fn json_files(dir: &Path) -> anyhow::Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), path.clone()));
            }
        }
    }
    out.sort();
    Ok(out)
}

impl AppState {
    /// Opens `data_dir`, creating it if needed, and reloads its contents.
    pub fn open(data_dir: impl Into<PathBuf>) -> anyhow::Result<Self> {
        let data_dir = data_dir.into();
        for sub in ["datasets", "sessions"] {
            std::fs::create_dir_all(data_dir.join(sub)).with_context(|| format!("creating {}", data_dir.join(sub).display()))?;
        }
        let state = AppState {
            inner: Arc::new(Inner {
                data_dir,
                datasets: RwLock::default(),
                sessions: RwLock::default(),
            }),
        };
        state.reload()?;
        Ok(state)
    }

    fn datasets_dir(&self) -> PathBuf {
        self.inner.data_dir.join("datasets")
    }

    fn sessions_dir(&self) -> PathBuf {
        self.inner.data_dir.join("sessions")
    }

    fn reload(&self) -> anyhow::Result<()> {
        for (id, path) in json_files(&self.datasets_dir())? {
            let text = std::fs::read_to_string(&path)?;
            match Dataset::from_json(&text) {
                Ok(ds) => {
                    self.inner.datasets.write().unwrap().insert(id, Arc::new(ds));
                }
                Err(e) => eprintln!("skipping dataset {}: {e}", path.display()),
            }
        }
        for (id, path) in json_files(&self.sessions_dir())? {
            let text = std::fs::read_to_string(&path)?;
            let restored = serde_json::from_str::<StoredSession>(&text)
                .map_err(svmenum::Error::from)
                .map_err(ApiError::from)
                .and_then(|stored| self.restore_session(id.clone(), stored));
            match restored {
                Ok(session) => {
                    self.inner.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(session)));
                }
                Err(e) => eprintln!("skipping session {}: {}", path.display(), e.message),
            }
        }
        Ok(())
    }

    fn dataset(&self, id: &str) -> ApiResult<Arc<Dataset>> {
        self.inner
            .datasets
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("dataset", id))
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        self.inner
            .sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("session", id))
    }

    fn evaluator(&self, spec: &SessionSpec) -> ApiResult<(Arc<Dataset>, Evaluator)> {
        let train = self.dataset(&spec.dataset_id)?;
        let eval = match &spec.test_dataset_id {
            Some(id) => self.dataset(id)?,
            None => Arc::clone(&train),
        };
        let evaluator = Evaluator::new(Arc::clone(&train), eval, spec.sensitive.as_deref())?;
        Ok((train, evaluator))
    }

    fn restore_session(&self, id: String, stored: StoredSession) -> ApiResult<Session> {
        let (train, evaluator) = self.evaluator(&stored.spec)?;
        let enumeration = EnumSession::restore(train, stored.snapshot)?;
        let emitted = enumeration.emitted();
        let records = emitted
            .iter()
            .map(|m| record(&evaluator, emitted, m))
            .collect::<svmenum::Result<Vec<_>>>()?;
        Ok(Session {
            id,
            spec: stored.spec,
            enumeration,
            evaluator,
            records,
            selection: stored.selection,
        })
    }

    fn persist(&self, session: &Session) -> ApiResult<()> {
        let path = self.sessions_dir().join(format!("{}.json", session.id));
        let text = serde_json::to_string(&session.stored()).map_err(|e| ApiError::internal(e.to_string()))?;
        write_atomically(&path, &text).map_err(|e| ApiError::internal(format!("saving session: {e}")))
    }
}

fn dataset_summary(id: &str, ds: &Dataset) -> Value {
    json!({
        "dataset_id": id,
        "n": ds.n(),
        "d": ds.d(),
        "feature_names": ds.feature_names(),
        "attributes": ds.attributes().iter().map(|a| a.name.as_str()).collect::<Vec<_>>(),
    })
}

#[derive(Debug, Deserialize)]
struct UploadQuery {
    #[serde(default)]
    format: Option<String>,
    label: Option<String>,
    positive: Option<String>,
    /// Comma-separated CSV columns kept out of the features.
    #[serde(default)]
    attributes: Option<String>,
}

async fn create_dataset(
    State(app): State<AppState>,
    query: Result<Query<UploadQuery>, QueryRejection>,
    body: Bytes,
) -> ApiResult<Response> {
    let Query(q) = query?;
    let format: Format = q.format.as_deref().unwrap_or("csv").parse()?;
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::bad_request("body is not UTF-8"))?;
    let options = LoadOptions {
        label: q.label,
        positive: q.positive,
        attributes: q
            .attributes
            .map(|a| a.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
            .unwrap_or_default(),
    };
    let ds = load::parse(text, format, &options)?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    write_atomically(&app.datasets_dir().join(format!("{id}.json")), &ds.to_json())
        .map_err(|e| ApiError::internal(format!("saving dataset: {e}")))?;
    let summary = dataset_summary(&id, &ds);
    app.inner.datasets.write().unwrap().insert(id, Arc::new(ds));
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn list_datasets(State(app): State<AppState>) -> Json<Value> {
    let datasets = app.inner.datasets.read().unwrap();
    let list: Vec<Value> = datasets.iter().map(|(id, ds)| dataset_summary(id, ds)).collect();
    Json(json!({ "datasets": list }))
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<SessionSpec>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(spec) = body?;
    let (train, evaluator) = app.evaluator(&spec)?;
    let config = EnumConfig::new(spec.c, spec.kernel);
    let enumeration = tokio::task::spawn_blocking(move || EnumSession::new(train, config))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session {
        id: id.clone(),
        spec,
        enumeration,
        evaluator,
        records: Vec::new(),
        selection: Vec::new(),
    };
    app.persist(&session)?;
    let summary = session.summary();
    app.inner.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

async fn get_session(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let guard = session.lock().await;
    Ok(Json(guard.summary()))
}

/// The record serialized exactly as a CLI output line.
fn record_response(record: &ModelRecord) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], record.to_json_line()).into_response()
}

async fn next_model(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let session = app.session(&id)?;
    let guard = session.lock_owned().await;
    let worker = app.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let mut guard = guard;
        let before = guard.records.len();
        let result = guard.advance();
        if guard.records.len() != before {
            worker.persist(&guard)?;
        }
        result.map_err(ApiError::from)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(match outcome {
        Some(record) => record_response(&record),
        None => StatusCode::NO_CONTENT.into_response(),
    })
}

async fn list_models(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let session = app.session(&id)?;
    let guard = session.lock().await;
    let mut body = String::from("{\"models\":[");
    for (k, r) in guard.records.iter().enumerate() {
        if k > 0 {
            body.push(',');
        }
        body.push_str(&r.to_json_line());
    }
    body.push_str("]}");
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn model_detail(State(app): State<AppState>, UrlPath((id, rank)): UrlPath<(String, String)>) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let guard = session.lock().await;
    let rank: usize = rank
        .parse()
        .map_err(|_| ApiError::bad_request(format!("rank must be a positive integer, got `{rank}`")))?;
    let record = rank
        .checked_sub(1)
        .and_then(|k| guard.records.get(k))
        .ok_or_else(|| ApiError::not_found("emitted rank", &rank.to_string()))?;
    let train = guard.enumeration.dataset();
    let eval = guard.evaluator.eval_set();
    let values = decision_values(&record.model, train, eval)?;
    let predictions: Vec<f64> = values.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect();
    let mut body = serde_json::to_value(record).map_err(|e| ApiError::internal(e.to_string()))?;
    let extra = json!({
        "alpha": record.model.dense_alpha(),
        "evaluated_on": if guard.spec.test_dataset_id.is_some() { "test" } else { "train" },
        "decision_values": values,
        "predictions": predictions,
        "labels": eval.labels(),
    });
    if let (Value::Object(body), Value::Object(extra)) = (&mut body, extra) {
        body.extend(extra);
    }
    Ok(Json(body))
}

#[derive(Debug, Deserialize)]
struct SelectionBody {
    ranks: Vec<usize>,
}

async fn set_selection(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<SelectionBody>, JsonRejection>,
) -> ApiResult<Json<Value>> {
    let Json(body) = body?;
    let session = app.session(&id)?;
    let mut guard = session.lock().await;
    let emitted = guard.records.len();
    if let Some(bad) = body.ranks.iter().find(|&&r| r == 0 || r > emitted) {
        return Err(ApiError::bad_request(format!("rank {bad} has not been emitted (1..={emitted})")));
    }
    let mut ranks = body.ranks;
    ranks.sort_unstable();
    ranks.dedup();
    guard.selection = ranks;
    app.persist(&guard)?;
    Ok(Json(json!({ "ranks": guard.selection })))
}

async fn get_selection(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let session = app.session(&id)?;
    let guard = session.lock().await;
    Ok(Json(json!({ "ranks": guard.selection })))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

/// API routes, plus static assets from `static_dir` for every other path.
pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/datasets", get(list_datasets).post(create_dataset))
        .route("/api/sessions", axum::routing::post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/next", get(next_model).post(next_model))
        .route("/api/sessions/{id}/models", get(list_models))
        .route("/api/sessions/{id}/models/{rank}", get(model_detail))
        .route("/api/sessions/{id}/selection", get(get_selection).post(set_selection))
        .route("/api/{*rest}", axum::routing::any(not_found))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

pub async fn serve(args: ServeArgs) -> anyhow::Result<()> {
    if let Some(dir) = &args.static_dir {
        anyhow::ensure!(dir.is_dir(), "static directory {} does not exist", dir.display());
    }
    let state = AppState::open(&args.data_dir)?;
    let app = router(state, args.static_dir.as_deref());
    let addr = SocketAddr::new(args.bind, args.port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .context("server failed")
}
