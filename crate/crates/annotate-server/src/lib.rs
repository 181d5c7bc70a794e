//! HTTP API for annotation sessions.
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | GET | `/sessions` | | `[SessionStatus]` |
//! | POST | `/sessions` | `SessionSpec` | `SessionStatus` (201) |
//! | GET | `/sessions/:id/status` | | `SessionStatus` |
//! | GET | `/sessions/:id/next` | `?annotator=` | `NextTask` |
//! | POST | `/labels` | `LabelRequest` | `Ack` (201) |
//! | GET | `/sessions/:id/agreement` | | `AgreementReport` |
//! | GET | `/sessions/:id/export.csv` | | `text/csv` |
//!
//! Errors come back as `{"error": <code>, "message": <text>}`. Codes are the
//! snake_case variant names of [`AnnotateError`], e.g. `already_labeled`.
//!
//! Payloads are built only from session data. Model-assigned cluster labels
//! never enter a session, so no response can carry them.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use adaudit_core::annotate::{AnnotateError, SessionSpec, SessionStatus, SessionStore, TaskView};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::{ServeDir, ServeFile};

#[derive(Clone)]
pub struct AppState {
    store: Arc<Mutex<SessionStore>>,
}

impl AppState {
    pub fn new(store: SessionStore) -> Self {
        Self {
            store: Arc::new(Mutex::new(store)),
        }
    }

    /// Runs `f` against the store on the blocking pool; label submission
    /// fsyncs while holding the lock.
    async fn with_store<T, F>(&self, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut SessionStore) -> Result<T, AnnotateError> + Send + 'static,
    {
        let store = self.store.clone();
        tokio::task::spawn_blocking(move || {
            let mut guard = store.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
            f(&mut guard)
        })
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(ApiError::Annotate)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error(transparent)]
    Annotate(#[from] AnnotateError),
    #[error("{0}")]
    Internal(String),
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

fn error_code(e: &AnnotateError) -> (StatusCode, &'static str) {
    use AnnotateError::*;
    match e {
        UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
        UnknownTask(_) => (StatusCode::NOT_FOUND, "unknown_task"),
        UnknownAnnotator { .. } => (StatusCode::FORBIDDEN, "unknown_annotator"),
        AlreadyLabeled { .. } => (StatusCode::CONFLICT, "already_labeled"),
        DuplicateSession(_) => (StatusCode::CONFLICT, "duplicate_session"),
        Incomplete { .. } => (StatusCode::CONFLICT, "incomplete"),
        LabelNotInChoiceSet { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "label_not_in_choice_set"),
        InvalidSessionId(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_session_id"),
        NoAnnotators => (StatusCode::UNPROCESSABLE_ENTITY, "no_annotators"),
        EmptyChoiceSet => (StatusCode::UNPROCESSABLE_ENTITY, "empty_choice_set"),
        KappaUndefined(_) => (StatusCode::UNPROCESSABLE_ENTITY, "kappa_undefined"),
        WrongKind { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "wrong_kind"),
        MissingHiddenLabel(_) => (StatusCode::UNPROCESSABLE_ENTITY, "missing_hidden_label"),
        Corrupt(_) | Io(_) | Json(_) | Csv(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            ApiError::Annotate(e) => error_code(e),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status.is_server_error() {
            log::error!("{self}");
        }
        let body = ErrorBody {
            error: code.to_string(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

#[derive(Debug, Deserialize)]
pub struct NextQuery {
    pub annotator: String,
}

/// The annotator's next task, or `task: null` once they are finished.
#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct NextTask {
    pub session_id: String,
    pub annotator: String,
    pub done: usize,
    pub total: usize,
    pub task: Option<TaskView>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRequest {
    pub session_id: String,
    pub annotator: String,
    pub task_id: String,
    pub label: String,
}

async fn list_sessions(State(state): State<AppState>) -> Result<Json<Vec<SessionStatus>>, ApiError> {
    let all = state
        .with_store(|s| s.session_ids().iter().map(|id| s.status(id)).collect())
        .await?;
    Ok(Json(all))
}

async fn create_session(
    State(state): State<AppState>,
    Json(spec): Json<SessionSpec>,
) -> Result<(StatusCode, Json<SessionStatus>), ApiError> {
    let status = state.with_store(move |s| s.create_session(spec)).await?;
    Ok((StatusCode::CREATED, Json(status)))
}

async fn status(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionStatus>, ApiError> {
    Ok(Json(state.with_store(move |s| s.status(&id)).await?))
}

async fn next(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<NextQuery>,
) -> Result<Json<NextTask>, ApiError> {
    let out = state
        .with_store(move |s| {
            let task = s.next_task(&id, &q.annotator)?;
            let total = s.tasks(&id)?.len();
            let done = task.as_ref().map_or(total, |t| t.progress.done);
            Ok(NextTask {
                session_id: id,
                annotator: q.annotator,
                done,
                total,
                task,
            })
        })
        .await?;
    Ok(Json(out))
}

async fn submit(
    State(state): State<AppState>,
    Json(req): Json<LabelRequest>,
) -> Result<impl IntoResponse, ApiError> {
    let ack = state
        .with_store(move |s| s.submit_label(&req.session_id, &req.annotator, &req.task_id, &req.label))
        .await?;
    Ok((StatusCode::CREATED, Json(ack)))
}

async fn agreement(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(state.with_store(move |s| s.agreement(&id)).await?))
}

async fn export(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<impl IntoResponse, ApiError> {
    let csv = state.with_store(move |s| s.export_csv(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv))
}

/// API routes, plus the static UI bundle at `/` when `ui_dir` is given.
pub fn router(state: AppState, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}/status", get(status))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/agreement", get(agreement))
        .route("/sessions/{id}/export.csv", get(export))
        .route("/labels", post(submit))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(dir.join("index.html")))),
        None => api,
    }
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub store_root: PathBuf,
    pub bind: String,
    pub ui_dir: Option<PathBuf>,
}

/// Opens the store and serves until the process is stopped.
pub async fn serve(opts: ServeOptions) -> anyhow::Result<()> {
    let store = SessionStore::open(&opts.store_root)?;
    log::info!(
        "serving {} session(s) from {}",
        store.session_ids().len(),
        opts.store_root.display()
    );
    let app = router(AppState::new(store), opts.ui_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(&opts.bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await?;
    Ok(())
}
