//! Local annotation service: hands out questions, records answers and
//! reports live agreement.

mod store;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use thiserror::Error;
use tower_http::services::ServeDir;

pub use store::{
    Ack, AnnotationStore, RelationStats, Stats, StoreOptions, DEFAULT_COMPACT_EVERY, DEFAULT_SERVE_TIMEOUT_MS,
    QUESTIONS_FILE, RESPONSES_FILE,
};

pub const DATA_DIR_ENV: &str = "SENSCOMMON_DATA_DIR";
pub const MAX_BATCH: usize = 100;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot open {0}: {1}")]
    Open(PathBuf, std::io::Error),
    #[error(transparent)]
    Jsonl(#[from] senscommon::jsonl::JsonlError),
    #[error(transparent)]
    Annotation(#[from] senscommon::annotation::AnnotationError),
    #[error("duplicate question id {0}")]
    DuplicateQuestion(String),
    #[error("unknown question {0}")]
    UnknownQuestion(String),
    #[error("invalid choice {choice:?}; allowed: {}", allowed.join(", "))]
    InvalidChoice { choice: String, allowed: Vec<String> },
    #[error("missing worker id")]
    MissingWorker,
    #[error("store lock poisoned")]
    Poisoned,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, body) = match &self {
            ServiceError::UnknownQuestion(_) => (StatusCode::NOT_FOUND, json!({ "error": self.to_string() })),
            ServiceError::InvalidChoice { allowed, .. } => (
                StatusCode::BAD_REQUEST,
                json!({ "error": self.to_string(), "allowed": allowed }),
            ),
            ServiceError::MissingWorker => (StatusCode::BAD_REQUEST, json!({ "error": self.to_string() })),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": self.to_string() })),
        };
        (status, Json(body)).into_response()
    }
}

pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

/// Milliseconds since the Unix epoch.
pub fn system_clock() -> Clock {
    Arc::new(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    })
}

#[derive(Clone)]
pub struct AppState {
    store: Arc<RwLock<AnnotationStore>>,
    clock: Clock,
}

impl AppState {
    pub fn new(store: AnnotationStore, clock: Clock) -> Self {
        AppState {
            store: Arc::new(RwLock::new(store)),
            clock,
        }
    }

    pub fn stats(&self) -> Result<Stats, ServiceError> {
        self.store.read().map_err(|_| ServiceError::Poisoned)?.stats()
    }

    pub fn export_csv(&self) -> Result<String, ServiceError> {
        self.store.read().map_err(|_| ServiceError::Poisoned)?.export_csv()
    }

    pub fn with_store<T>(&self, f: impl FnOnce(&AnnotationStore) -> T) -> Result<T, ServiceError> {
        let guard = self.store.read().map_err(|_| ServiceError::Poisoned)?;
        Ok(f(&guard))
    }
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    worker: Option<String>,
    n: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct AnswerBody {
    question_id: String,
    worker_id: String,
    choice: String,
}

async fn next_questions(State(app): State<AppState>, Query(q): Query<NextQuery>) -> Result<Response, ServiceError> {
    let worker = q
        .worker
        .filter(|w| !w.trim().is_empty())
        .ok_or(ServiceError::MissingWorker)?;
    let n = q.n.unwrap_or(1).min(MAX_BATCH);
    let now = (app.clock)();
    let batch = app
        .store
        .write()
        .map_err(|_| ServiceError::Poisoned)?
        .next_batch(&worker, n, now);
    Ok(Json(json!({ "worker": worker, "questions": batch })).into_response())
}

async fn submit_answer(State(app): State<AppState>, Json(body): Json<AnswerBody>) -> Result<Json<Ack>, ServiceError> {
    let now = (app.clock)();
    let ack = app.store.write().map_err(|_| ServiceError::Poisoned)?.submit(
        &body.question_id,
        &body.worker_id,
        &body.choice,
        now,
    )?;
    Ok(Json(ack))
}

async fn stats(State(app): State<AppState>) -> Result<Json<Stats>, ServiceError> {
    Ok(Json(app.stats()?))
}

async fn export(State(app): State<AppState>) -> Result<Response, ServiceError> {
    let csv = app.export_csv()?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

/// API routes, plus static files from `static_dir` at `/` when given.
pub fn router(app: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/questions/next", get(next_questions))
        .route("/api/answers", post(submit_answer))
        .route("/api/stats", get(stats))
        .route("/api/export", get(export))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(app: AppState, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(app, static_dir.as_deref()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
