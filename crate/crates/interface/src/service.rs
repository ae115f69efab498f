//! HTTP/JSON session service.
//!
//! Routes:
//!
//! | method | path                     |                                   |
//! |--------|--------------------------|-----------------------------------|
//! | POST   | `/sessions`              | create from `{"n": ..}`           |
//! | GET    | `/sessions/{id}`         | full session view                 |
//! | POST   | `/sessions/{id}/measure` | measure, or preview with dry_run  |
//! | POST   | `/sessions/{id}/undo`    | pop one step                      |
//! | GET    | `/sessions/{id}/diagram` | ribbon diagram                    |
//! | DELETE | `/sessions/{id}`         | drop the session                  |

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock as StdRwLock};
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ribbonchain_core::{PauliBasis, QubitId};
use serde::{Deserialize, Serialize};
use tokio::sync::{OwnedRwLockWriteGuard, RwLock};

use crate::script::OutcomeChoice;
use crate::session::{Session, SessionError, SessionOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BusyPolicy {
    /// Wait for the in-flight mutation to finish.
    #[default]
    Queue,
    /// Answer 409 with code `busy`.
    Reject,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub idle_timeout: Duration,
    pub busy_policy: BusyPolicy,
    pub snapshot_path: Option<PathBuf>,
    /// Defaults for new sessions; `n`, `seed`, `hybrid` and `oracle` may be
    /// overridden per request.
    pub session_defaults: SessionOptions,
    pub max_chain: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            idle_timeout: Duration::from_secs(30 * 60),
            busy_policy: BusyPolicy::Queue,
            snapshot_path: None,
            session_defaults: SessionOptions::default(),
            max_chain: 4096,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError { status, code: code.to_string(), message: message.into(), step: None }
    }

    fn unknown_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id:?}"))
    }

    fn busy() -> Self {
        ApiError::new(StatusCode::CONFLICT, "busy", "another mutation is in flight for this session")
    }

    fn session(e: SessionError, step: Option<usize>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, code: e.code().to_string(), message: e.to_string(), step }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

struct Slot {
    session: Arc<RwLock<Session>>,
    last_access: Mutex<Instant>,
}

impl Slot {
    fn new(session: Session) -> Arc<Slot> {
        Arc::new(Slot { session: Arc::new(RwLock::new(session)), last_access: Mutex::new(Instant::now()) })
    }

    fn touch(&self) {
        *self.last_access.lock().expect("clock lock") = Instant::now();
    }

    fn idle_for(&self, now: Instant) -> Duration {
        now.saturating_duration_since(*self.last_access.lock().expect("clock lock"))
    }
}

struct Inner {
    config: ServiceConfig,
    sessions: StdRwLock<HashMap<String, Arc<Slot>>>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        AppState { inner: Arc::new(Inner { config, sessions: StdRwLock::new(HashMap::new()) }) }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.read().expect("session map").len()
    }

    fn insert(&self, session: Session) {
        let id = session.id.clone();
        self.inner.sessions.write().expect("session map").insert(id, Slot::new(session));
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        let slot = self.inner.sessions.read().expect("session map").get(id).cloned();
        let slot = slot.ok_or_else(|| ApiError::unknown_session(id))?;
        if slot.idle_for(Instant::now()) > self.inner.config.idle_timeout {
            self.inner.sessions.write().expect("session map").remove(id);
            return Err(ApiError::unknown_session(id));
        }
        slot.touch();
        Ok(slot)
    }

    async fn write(&self, id: &str) -> Result<OwnedRwLockWriteGuard<Session>, ApiError> {
        let slot = self.slot(id)?;
        match self.inner.config.busy_policy {
            BusyPolicy::Queue => Ok(slot.session.clone().write_owned().await),
            BusyPolicy::Reject => slot.session.clone().try_write_owned().map_err(|_| ApiError::busy()),
        }
    }

    /// Exclusive access to a session, as a mutating request would take it.
    pub async fn hold_session(&self, id: &str) -> Option<OwnedRwLockWriteGuard<Session>> {
        let slot = self.inner.sessions.read().expect("session map").get(id).cloned()?;
        Some(slot.session.clone().write_owned().await)
    }

    /// Drops sessions idle for longer than the configured timeout and
    /// returns how many were removed. Sessions with a request in flight stay.
    pub fn expire_idle(&self, now: Instant) -> usize {
        let timeout = self.inner.config.idle_timeout;
        let mut map = self.inner.sessions.write().expect("session map");
        let before = map.len();
        map.retain(|_, slot| slot.idle_for(now) <= timeout || slot.session.try_write().is_err());
        before - map.len()
    }

    pub async fn snapshot(&self) -> Vec<Session> {
        let slots: Vec<Arc<Slot>> = self.inner.sessions.read().expect("session map").values().cloned().collect();
        let mut out = Vec::with_capacity(slots.len());
        for slot in slots {
            out.push(slot.session.read().await.clone());
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        out
    }

    pub async fn save_snapshot(&self) -> std::io::Result<Option<usize>> {
        let Some(path) = self.inner.config.snapshot_path.clone() else { return Ok(None) };
        let sessions = self.snapshot().await;
        let json = serde_json::to_vec(&sessions).map_err(std::io::Error::other)?;
        tokio::fs::write(&path, json).await?;
        Ok(Some(sessions.len()))
    }

    /// Restores sessions from the snapshot file, if configured and present.
    pub async fn load_snapshot(&self) -> std::io::Result<usize> {
        let Some(path) = self.inner.config.snapshot_path.clone() else { return Ok(0) };
        let bytes = match tokio::fs::read(&path).await {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(e),
        };
        let sessions: Vec<Session> = serde_json::from_slice(&bytes).map_err(std::io::Error::other)?;
        let count = sessions.len();
        for s in sessions {
            self.insert(s);
        }
        Ok(count)
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub n: usize,
    pub seed: Option<u64>,
    pub hybrid: Option<bool>,
    pub oracle: Option<bool>,
}

#[derive(Debug, Deserialize)]
pub struct MeasureRequest {
    pub qubit: u32,
    pub basis: PauliBasis,
    #[serde(default = "random_outcome")]
    pub outcome: OutcomeChoice,
    #[serde(default)]
    pub dry_run: bool,
    pub seed: Option<u64>,
}

fn random_outcome() -> OutcomeChoice {
    OutcomeChoice::Random
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/measure", post(measure))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/diagram", get(diagram))
        .with_state(state)
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<impl IntoResponse, ApiError> {
    let Json(req) = body?;
    if req.n > state.config().max_chain {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "size_limit",
            format!("chain of {} exceeds the service limit of {}", req.n, state.config().max_chain),
        ));
    }
    let defaults = state.config().session_defaults;
    let options = SessionOptions {
        seed: req.seed.unwrap_or(defaults.seed),
        hybrid: req.hybrid.unwrap_or(defaults.hybrid),
        oracle: req.oracle.unwrap_or(defaults.oracle),
        ..defaults
    };
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session::new(id, req.n, options).map_err(|e| ApiError::session(e, None))?;
    let view = session.view();
    state.insert(session);
    tracing::debug!(id = %view.id, n = view.n, "session created");
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let session = slot.session.read().await;
    Ok(Json(session.view()).into_response())
}

async fn diagram(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let session = slot.session.read().await;
    Ok(Json(session.diagram()).into_response())
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    let removed = state.inner.sessions.write().expect("session map").remove(&id);
    removed.map(|_| StatusCode::NO_CONTENT).ok_or_else(|| ApiError::unknown_session(&id))
}

async fn measure(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<MeasureRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let q = QubitId(req.qubit);
    if req.dry_run {
        let slot = state.slot(&id)?;
        let session = slot.session.read().await;
        let previews = session.dry_run(q, req.basis).map_err(|e| ApiError::session(e, None))?;
        return Ok(Json(serde_json::json!({ "dry_run": true, "previews": previews })).into_response());
    }
    let mut session = state.write(&id).await?;
    let step = session.state().history.len() + 1;
    let result = session.measure(q, req.basis, req.outcome, req.seed).map_err(|e| ApiError::session(e, Some(step)))?;
    Ok(Json(result).into_response())
}

async fn undo(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let mut session = state.write(&id).await?;
    session.undo().map_err(|e| ApiError::session(e, None))?;
    Ok(Json(session.view()).into_response())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        if let Err(e) = tokio::signal::ctrl_c().await {
            tracing::warn!("cannot listen for Ctrl-C: {e}");
            std::future::pending::<()>().await;
        }
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(e) => {
                tracing::warn!("cannot listen for SIGTERM: {e}");
                std::future::pending::<()>().await;
            }
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = terminate => {}
    }
}

/// Runs the service until Ctrl-C or SIGTERM, then writes the snapshot file if one is
/// configured.
pub async fn serve(addr: SocketAddr, config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::new(config);
    let restored = state.load_snapshot().await?;
    if restored > 0 {
        tracing::info!(restored, "sessions restored from snapshot");
    }
    let sweeper = {
        let state = state.clone();
        let period = (state.config().idle_timeout / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                let expired = state.expire_idle(Instant::now());
                if expired > 0 {
                    tracing::info!(expired, "idle sessions expired");
                }
            }
        })
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state.clone())).with_graceful_shutdown(shutdown_signal()).await?;
    sweeper.abort();
    if let Some(saved) = state.save_snapshot().await? {
        tracing::info!(saved, "sessions written to snapshot");
    }
    Ok(())
}
