use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use ribbonchain::service::{router, AppState, BusyPolicy, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn create(app: &Router, body: Value) -> String {
    let (status, v) = call(app, "POST", "/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

fn app_with(config: ServiceConfig) -> (AppState, Router) {
    let state = AppState::new(config);
    (state.clone(), router(state))
}

#[tokio::test]
async fn create_and_measure_random_y() {
    let (_, app) = app_with(ServiceConfig::default());
    let (status, v) = call(&app, "POST", "/sessions", Some(json!({"n": 5}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["diagram"]["components"][0]["ribbons"].as_array().unwrap().len(), 4);
    let id = v["id"].as_str().unwrap();

    let body = json!({"qubit": 3, "basis": "Y", "outcome": "random", "seed": 11});
    let (status, r) = call(&app, "POST", &format!("/sessions/{id}/measure"), Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{r}");
    let rule = r["step"]["rule"].as_str().unwrap();
    assert!(rule.starts_with("Y_Bulk"), "{rule}");
    assert!((r["step"]["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert!(r["step"]["fidelity"].as_f64().unwrap() > 1.0 - 1e-9);
    let expected = if r["step"]["outcome"] == "+" { "S" } else { "S†" };
    assert_eq!(r["byproducts"]["2"], expected);
    assert_eq!(r["byproducts"]["4"], expected);
    assert!(r["schmidt"].is_array());
}

#[tokio::test]
async fn dry_run_does_not_mutate() {
    let (_, app) = app_with(ServiceConfig::default());
    let id = create(&app, json!({"n": 5})).await;
    let (_, before) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    let body = json!({"qubit": 3, "basis": "X", "dry_run": true});
    let (status, r) = call(&app, "POST", &format!("/sessions/{id}/measure"), Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    let previews = r["previews"].as_array().unwrap();
    assert_eq!(previews.len(), 2);
    assert_eq!(previews[0]["outcome"], "+");
    assert_eq!(previews[1]["outcome"], "-");
    assert!(previews.iter().all(|p| p["possible"] == true));
    let (_, after) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(before, after);
}

#[tokio::test]
async fn undo_restores_initial_diagram() {
    let (_, app) = app_with(ServiceConfig::default());
    let id = create(&app, json!({"n": 4})).await;
    let (_, initial) = call(&app, "GET", &format!("/sessions/{id}/diagram"), None).await;
    let body = json!({"qubit": 2, "basis": "Z", "outcome": "-"});
    call(&app, "POST", &format!("/sessions/{id}/measure"), Some(body)).await;
    let (_, measured) = call(&app, "GET", &format!("/sessions/{id}/diagram"), None).await;
    assert_ne!(initial, measured);
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, restored) = call(&app, "GET", &format!("/sessions/{id}/diagram"), None).await;
    assert_eq!(initial, restored);

    let (status, e) = call(&app, "POST", &format!("/sessions/{id}/undo"), None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(e["code"], "nothing_to_undo");
}

#[tokio::test]
async fn structured_errors() {
    let (_, app) = app_with(ServiceConfig::default());
    let (status, e) = call(&app, "GET", "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(e["code"], "unknown_session");

    let id = create(&app, json!({"n": 5})).await;
    let uri = format!("/sessions/{id}/measure");
    call(&app, "POST", &uri, Some(json!({"qubit": 3, "basis": "X", "outcome": "+"}))).await;
    let (status, e) = call(&app, "POST", &uri, Some(json!({"qubit": 2, "basis": "Z", "outcome": "+"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(e["code"], "unsupported_composition");
    assert_eq!(e["step"], 2);

    let (status, e) = call(&app, "POST", &uri, Some(json!({"qubit": 3, "basis": "Z", "outcome": "+"}))).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::BAD_REQUEST, Some("inactive_ring")));
    let (status, e) = call(&app, "POST", &uri, Some(json!({"qubit": 1, "basis": "W"}))).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_request")));
    let (status, e) = call(&app, "POST", "/sessions", Some(json!({"n": 0}))).await;
    assert_eq!((status, e["code"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_argument")));

    let (status, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = call(&app, "DELETE", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn large_chain_runs_without_oracle() {
    let (_, app) = app_with(ServiceConfig::default());
    let (status, v) = call(&app, "POST", "/sessions", Some(json!({"n": 64}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(v["oracle"], false);
    let id = v["id"].as_str().unwrap();
    let body = json!({"qubit": 10, "basis": "Y", "outcome": "+"});
    let (status, r) = call(&app, "POST", &format!("/sessions/{id}/measure"), Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["step"]["fidelity"], Value::Null);
    assert_eq!(r["schmidt"], Value::Null);
}

#[tokio::test]
async fn busy_sessions_are_rejected_when_configured() {
    let (state, app) = app_with(ServiceConfig { busy_policy: BusyPolicy::Reject, ..ServiceConfig::default() });
    let id = create(&app, json!({"n": 3})).await;
    let guard = state.hold_session(&id).await.unwrap();
    let body = json!({"qubit": 1, "basis": "Z", "outcome": "+"});
    let (status, e) = call(&app, "POST", &format!("/sessions/{id}/measure"), Some(body.clone())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(e["code"], "busy");
    drop(guard);
    let (status, _) = call(&app, "POST", &format!("/sessions/{id}/measure"), Some(body)).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn queued_mutations_wait_their_turn() {
    let (state, app) = app_with(ServiceConfig::default());
    let id = create(&app, json!({"n": 3})).await;
    let guard = state.hold_session(&id).await.unwrap();
    let pending = {
        let app = app.clone();
        let uri = format!("/sessions/{id}/measure");
        tokio::spawn(async move { call(&app, "POST", &uri, Some(json!({"qubit": 1, "basis": "Z", "outcome": "+"}))).await })
    };
    tokio::time::sleep(Duration::from_millis(50)).await;
    assert!(!pending.is_finished());
    drop(guard);
    let (status, _) = pending.await.unwrap();
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn idle_sessions_expire() {
    let (state, app) = app_with(ServiceConfig { idle_timeout: Duration::from_secs(60), ..ServiceConfig::default() });
    let id = create(&app, json!({"n": 3})).await;
    assert_eq!(state.expire_idle(Instant::now()), 0);
    assert_eq!(state.expire_idle(Instant::now() + Duration::from_secs(120)), 1);
    let (status, _) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn snapshots_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig { snapshot_path: Some(dir.path().join("sessions.json")), ..ServiceConfig::default() };
    let (state, app) = app_with(config.clone());
    let id = create(&app, json!({"n": 4, "seed": 5})).await;
    let body = json!({"qubit": 1, "basis": "Y", "outcome": "random"});
    call(&app, "POST", &format!("/sessions/{id}/measure"), Some(body)).await;
    let (_, before) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(state.save_snapshot().await.unwrap(), Some(1));

    let (restored, app2) = app_with(config);
    assert_eq!(restored.load_snapshot().await.unwrap(), 1);
    let (status, after) = call(&app2, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);

    // the restored generator continues the same stream
    let next = json!({"qubit": 4, "basis": "Z", "outcome": "random"});
    let (_, a) = call(&app, "POST", &format!("/sessions/{id}/measure"), Some(next.clone())).await;
    let (_, b) = call(&app2, "POST", &format!("/sessions/{id}/measure"), Some(next)).await;
    assert_eq!(a, b);
}
