// SPDX-License-Identifier: Apache-2.0

//! HTTP session service: one process model per session, changed by chat
//! messages and reverted by undo.
//!
//! | method | path                      | body                      |
//! |--------|---------------------------|---------------------------|
//! | POST   | `/sessions`               | `{model}`                 |
//! | GET    | `/sessions/{id}`          |                           |
//! | POST   | `/sessions/{id}/messages` | `{text, mode?, backend?}` |
//! | POST   | `/sessions/{id}/undo`     |                           |
//!
//! Models travel as canonical DSL text, graphs as graph documents. Errors are
//! `{"error": code, "detail": text}`.

mod follow_up;
mod store;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use cpmr_core::pipeline::{Approach, Backend, Expected, Pipeline, PipelineTrace, Wording};
use cpmr_core::{export_graph, parse_dsl, DslError, GraphDoc, PatternId};
use serde::{Deserialize, Serialize};
use serde_json::json;

pub use store::{HistoryEntry, Session, SessionStore, Snapshot};

pub const DEFAULT_BACKEND: &str = "mock";

#[derive(Clone)]
pub struct AppState {
    store: Arc<SessionStore>,
    backends: Arc<BTreeMap<String, Arc<dyn Backend>>>,
}

impl AppState {
    pub fn new(store: SessionStore) -> Self {
        AppState { store: Arc::new(store), backends: Arc::new(BTreeMap::new()) }
    }

    /// Registers a backend under `name`, the value clients pass as `backend`.
    pub fn with_backend(mut self, name: impl Into<String>, backend: Arc<dyn Backend>) -> Self {
        Arc::make_mut(&mut self.backends).insert(name.into(), backend);
        self
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    detail: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, detail: impl Into<String>) -> Self {
        ApiError { status, code, detail: detail.into() }
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("no session '{id}'"))
    }

    fn io(e: std::io::Error) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "PersistenceError", e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.code, "detail": self.detail}))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Deserialize)]
struct CreateRequest {
    model: String,
}

#[derive(Serialize)]
struct CreateResponse {
    id: String,
    model: String,
    graph: GraphDoc,
}

#[derive(Serialize)]
struct SessionView {
    id: String,
    model: String,
    graph: GraphDoc,
    history: Vec<HistoryEntry>,
}

#[derive(Deserialize)]
struct MessageRequest {
    text: String,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default)]
    backend: Option<String>,
}

#[derive(Debug, Serialize)]
struct TraceSummary {
    approach: Approach,
    flags: String,
    identified: Option<PatternId>,
    meaning: Option<String>,
    error: Option<String>,
}

impl From<&PipelineTrace> for TraceSummary {
    fn from(t: &PipelineTrace) -> Self {
        TraceSummary {
            approach: t.approach,
            flags: t.flags(),
            identified: t.identified,
            meaning: t.meaning.as_ref().map(|m| m.to_text()),
            error: t.error.clone(),
        }
    }
}

#[derive(Serialize)]
struct MessageResponse {
    applied: bool,
    undone: bool,
    model: String,
    graph: GraphDoc,
    trace: Option<TraceSummary>,
    follow_up: Option<String>,
    history_len: usize,
}

#[derive(Serialize)]
struct UndoResponse {
    model: String,
    graph: GraphDoc,
    history_len: usize,
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/undo", post(undo))
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

/// In-memory or directory-backed store, as selected by `--persist`.
pub fn open_store(persist: Option<PathBuf>) -> std::io::Result<SessionStore> {
    match persist {
        Some(dir) => SessionStore::persistent(dir),
        None => Ok(SessionStore::in_memory()),
    }
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<CreateResponse>)> {
    let Json(body) = body?;
    let model = parse_dsl(&body.model).map_err(|e| match &e {
        DslError::Syntax { .. } => ApiError::new(StatusCode::BAD_REQUEST, "SyntaxError", e.to_string()),
        DslError::Invalid(diagnostics) => {
            let code = diagnostics.first().map(|d| d.code.as_str()).unwrap_or("InvalidModel");
            ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
        }
    })?;
    let id = state.store.create(model).map_err(ApiError::io)?;
    let session = state.store.get(&id).expect("just created");
    let session = session.lock().await;
    let current = session.current();
    Ok((
        StatusCode::CREATED,
        Json(CreateResponse { id, model: current.dsl.clone(), graph: export_graph(&current.model) }),
    ))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let session = state.store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let session = session.lock().await;
    let current = session.current();
    Ok(Json(SessionView {
        id: session.id.clone(),
        model: current.dsl.clone(),
        graph: export_graph(&current.model),
        history: session.summaries(),
    }))
}

async fn undo(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<UndoResponse>> {
    let session = state.store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let mut session = session.lock().await;
    let current = session
        .undo()
        .map_err(ApiError::io)?
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "NothingToUndo", "the session holds only its initial model"))?;
    let (model, graph) = (current.dsl.clone(), export_graph(&current.model));
    Ok(Json(UndoResponse { model, graph, history_len: session.len() }))
}

/// Requests such as "undo" or "reverse the action from the previous step".
fn is_undo_request(text: &str) -> bool {
    let t = text.trim().to_lowercase();
    let t = t.trim_end_matches(['.', '!']);
    t == "undo"
        || t.starts_with("undo ")
        || ["reverse the", "revert the", "undo the"]
            .iter()
            .any(|p| t.starts_with(p) && ["action", "change", "step", "last"].iter().any(|w| t.contains(w)))
}

async fn post_message(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<MessageRequest>, JsonRejection>,
) -> ApiResult<Json<MessageResponse>> {
    let Json(body) = body?;
    let session = state.store.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let wording = Wording::new(&body.text)
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", "message text must not be empty"))?;
    let approach: Approach = match &body.mode {
        Some(mode) => mode.parse().map_err(|e: String| ApiError::new(StatusCode::BAD_REQUEST, "BadRequest", e))?,
        None => Approach::Cpmr,
    };
    let backend_name = body.backend.as_deref().unwrap_or(DEFAULT_BACKEND);
    let backend = state.backends.get(backend_name).cloned().ok_or_else(|| {
        let known: Vec<&str> = state.backends.keys().map(String::as_str).collect();
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "UnknownBackend",
            format!("backend '{backend_name}' is not configured (available: {})", known.join(", ")),
        )
    })?;

    // Held across the backend call: messages to one session run in order.
    let mut session = session.lock().await;

    if is_undo_request(wording.as_str()) {
        let undone = session.undo().map_err(ApiError::io)?.is_some();
        let current = session.current();
        return Ok(Json(MessageResponse {
            applied: false,
            undone,
            model: current.dsl.clone(),
            graph: export_graph(&current.model),
            trace: None,
            follow_up: (!undone).then(|| "There is no earlier version of the model to go back to.".to_string()),
            history_len: session.len(),
        }));
    }

    let model = session.current().model.clone();
    let run_wording = wording.clone();
    let trace = tokio::task::spawn_blocking(move || {
        Pipeline::new(backend.as_ref()).run(approach, &model, &run_wording, &Expected::default())
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
    .map_err(|f| ApiError::new(StatusCode::BAD_GATEWAY, "BackendUnavailable", f.error.to_string()))?;

    let follow_up = follow_up_for(&trace);
    let applied = match (&follow_up, &trace.aao) {
        (None, Some(aao)) => {
            session
                .push(Snapshot::new(aao.clone(), Some(wording.as_str().to_string()), Some(trace.flags())))
                .map_err(ApiError::io)?;
            true
        }
        _ => false,
    };
    let current = session.current();
    Ok(Json(MessageResponse {
        applied,
        undone: false,
        model: current.dsl.clone(),
        graph: export_graph(&current.model),
        trace: Some(TraceSummary::from(&trace)),
        follow_up,
        history_len: session.len(),
    }))
}

/// `None` when the run produced a model to keep.
fn follow_up_for(trace: &PipelineTrace) -> Option<String> {
    if trace.approach == Approach::Cpmr {
        if !trace.step_1a {
            return Some(follow_up::not_identified());
        }
        if trace.step_2 == Some(false) {
            return Some(follow_up::not_derived(trace.identified.expect("identified before derive")));
        }
    }
    match &trace.aao {
        Some(_) => None,
        None => Some(follow_up::not_applied(trace.error.as_deref().unwrap_or("no model was produced"))),
    }
}
