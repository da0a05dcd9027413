use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use cpmr_core::pipeline::{Backend, BackendError, MockBackend, StageRequest};
use cpmr_core::{export_graph, parse_dsl};
use cpmr_service::{router, AppState, SessionStore};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

const MODEL: &str = "process \"Order\"\n  task \"A\"\n  task \"B\"\n  task \"D\"\n";

struct Down;

impl Backend for Down {
    fn name(&self) -> &str {
        "down"
    }

    fn complete(&self, _: &StageRequest) -> Result<String, BackendError> {
        Err(BackendError::Unavailable("connection refused".into()))
    }
}

fn app() -> Router {
    router(
        AppState::new(SessionStore::in_memory())
            .with_backend("mock", Arc::new(MockBackend::new()))
            .with_backend("down", Arc::new(Down)),
    )
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let request = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let request = match body {
        Some(b) => request.body(Body::from(b.to_string())).unwrap(),
        None => request.body(Body::empty()).unwrap(),
    };
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

async fn create(app: &Router) -> String {
    let (status, body) = call(app, "POST", "/sessions", Some(json!({"model": MODEL}))).await;
    assert_eq!(status, StatusCode::CREATED);
    body["id"].as_str().unwrap().to_string()
}

async fn say(app: &Router, id: &str, text: &str) -> (StatusCode, Value) {
    call(app, "POST", &format!("/sessions/{id}/messages"), Some(json!({"text": text, "mode": "cpmr", "backend": "mock"})))
        .await
}

#[tokio::test]
async fn create_rejects_bad_models() {
    let app = app();
    let (status, body) = call(&app, "POST", "/sessions", Some(json!({"model": "process \"P\"\n  tsk \"A\"\n"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "SyntaxError");
    let dup = "process \"P\"\n  task \"A\"\n  task \"A\"\n";
    let (status, body) = call(&app, "POST", "/sessions", Some(json!({"model": dup}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "DuplicateLabel");
    let (status, body) = call(&app, "POST", "/sessions", Some(json!({"dsl": MODEL}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "BadRequest");
}

#[tokio::test]
async fn fresh_session_view() {
    let app = app();
    let id = create(&app).await;
    let (status, body) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["model"], MODEL);
    assert_eq!(body["history"].as_array().unwrap().len(), 1);
    let graph = export_graph(&parse_dsl(MODEL).unwrap());
    assert_eq!(body["graph"]["nodes"].as_array().unwrap().len(), graph.nodes.len());
    assert_eq!(graph.nodes.len(), 5);
}

#[tokio::test]
async fn message_applies_change_and_undo_restores() {
    let app = app();
    let id = create(&app).await;
    let (status, body) = say(&app, &id, "Add task C after task B").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["applied"], true);
    assert!(body["follow_up"].is_null());
    assert_eq!(body["trace"]["flags"], "(T,·,T,·)");
    assert_eq!(body["model"], "process \"Order\"\n  task \"A\"\n  task \"B\"\n  task \"C\"\n  task \"D\"\n");
    assert_eq!(body["graph"]["nodes"].as_array().unwrap().len(), 6);

    let (_, view) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["history"].as_array().unwrap().len(), 2);
    assert_eq!(view["history"][1]["request"], "Add task C after task B");

    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["model"], MODEL);
    let (status, body) = call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "NothingToUndo");
}

#[tokio::test]
async fn two_changes_two_undos() {
    let app = app();
    let id = create(&app).await;
    assert_eq!(say(&app, &id, "Delete task B").await.1["applied"], true);
    assert_eq!(say(&app, &id, "Rename task A to 'Start'").await.1["applied"], true);
    let (_, view) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["history"].as_array().unwrap().len(), 3);
    call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    let (_, body) = call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(body["model"], MODEL);
}

#[tokio::test]
async fn incomplete_request_gets_follow_up_and_keeps_model() {
    let app = app();
    let id = create(&app).await;
    let (status, body) = say(&app, &id, "Removing a task").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["applied"], false);
    assert_eq!(body["model"], MODEL);
    assert_eq!(body["trace"]["flags"], "(T,·,F,·)");
    assert!(body["follow_up"].as_str().unwrap().contains("which task"), "{}", body["follow_up"]);

    let (_, body) = say(&app, &id, "Make it better somehow").await;
    assert_eq!(body["applied"], false);
    assert_eq!(body["trace"]["flags"], "(F,·,·,·)");
    assert!(body["follow_up"].as_str().unwrap().contains("which kind of change"));

    let (_, body) = say(&app, &id, "Delete task Z").await;
    assert_eq!(body["applied"], false);
    assert!(body["follow_up"].as_str().unwrap().contains("could not be applied"));

    let (_, view) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["history"].as_array().unwrap().len(), 1);
    assert_eq!(view["model"], MODEL);
}

#[tokio::test]
async fn undo_by_message() {
    let app = app();
    let id = create(&app).await;
    say(&app, &id, "Delete task B").await;
    let (_, body) = say(&app, &id, "Reverse the action from the previous step").await;
    assert_eq!(body["undone"], true);
    assert_eq!(body["model"], MODEL);
    let (_, body) = say(&app, &id, "undo").await;
    assert_eq!(body["undone"], false);
    assert!(body["follow_up"].is_string());
}

#[tokio::test]
async fn baseline_mode() {
    let app = app();
    let id = create(&app).await;
    let (status, body) = call(
        &app,
        "POST",
        &format!("/sessions/{id}/messages"),
        Some(json!({"text": "Swap task A and task B", "mode": "baseline"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["applied"], true);
    assert_eq!(body["trace"]["approach"], "baseline");
    assert_eq!(body["model"], "process \"Order\"\n  task \"B\"\n  task \"A\"\n  task \"D\"\n");
}

#[tokio::test]
async fn errors() {
    let app = app();
    let (status, body) = say(&app, "nope", "Delete task B").await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "NotFound");
    let (status, _) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", "/sessions/nope/undo", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let id = create(&app).await;
    let uri = format!("/sessions/{id}/messages");
    let (status, body) = call(&app, "POST", &uri, Some(json!({"text": "Delete task B", "backend": "down"}))).await;
    assert_eq!(status, StatusCode::BAD_GATEWAY);
    assert_eq!(body["error"], "BackendUnavailable");
    let (status, body) = call(&app, "POST", &uri, Some(json!({"text": "Delete task B", "backend": "gpt"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "UnknownBackend");
    let (status, _) = call(&app, "POST", &uri, Some(json!({"text": "Delete task B", "mode": "fast"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(&app, "POST", &uri, Some(json!({"text": "  "}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, view) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["history"].as_array().unwrap().len(), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_messages_are_serialized_per_session() {
    let app = app();
    let id = create(&app).await;
    let labels: Vec<String> = (0..12).map(|i| format!("N{i}")).collect();
    let tasks: Vec<_> = labels
        .iter()
        .map(|l| {
            let (app, id, text) = (app.clone(), id.clone(), format!("Add task {l} after task A"));
            tokio::spawn(async move { say(&app, &id, &text).await })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap().1["applied"], true);
    }
    let (_, view) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["history"].as_array().unwrap().len(), 13);
    let model = parse_dsl(view["model"].as_str().unwrap()).unwrap();
    assert_eq!(model.body.len(), 15);
}
