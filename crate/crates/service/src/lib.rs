//! HTTP front end for the proof kernel: stateful proof sessions over a
//! JSON API. Every route is served both at the root and under `/v1`.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | GET | `/health` | | `{"status":"ok"}` |
//! | GET | `/automata` | | `{"automata":[AutomatonDef]}` |
//! | POST | `/sessions` | `{system,left,right,s1,s2}` | 201 `SessionView` |
//! | GET | `/sessions/{id}` | | `SessionView` |
//! | GET | `/sessions/{id}/goals/{gid}/rules` | | `{"goal":gid,"rules":[RuleSchema]}` |
//! | POST | `/sessions/{id}/goals/{gid}/apply` | `{rule, match?, invariant_set?}` | `{"new_goals":[GoalView],"session":SessionView}` |
//! | POST | `/sessions/{id}/undo` | | `SessionView` |
//! | GET | `/sessions/{id}/script` | | canonical proof script, `text/plain` |
//!
//! Errors are `{"error":{"code":..,"message":..}}`.

pub mod session;

use std::collections::HashMap;
use std::io;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fairsim::proofkernel::{ErrorCode, KernelError};
use fairsim::textio::serialize_script;
use fairsim::{Automaton, AutomatonDef, SimKind};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::net::TcpListener;

pub use session::{ApplyRequest, GoalId, GoalView, Session, SessionError, SessionView, Status};

/// Loaded automata and live sessions.
#[derive(Debug, Default)]
pub struct AppState {
    automata: Vec<Automaton>,
    sessions: RwLock<HashMap<String, Arc<RwLock<Session>>>>,
    counter: AtomicU64,
}

impl AppState {
    pub fn new(automata: Vec<Automaton>) -> Self {
        Self {
            automata,
            ..Self::default()
        }
    }

    pub fn automata(&self) -> &[Automaton] {
        &self.automata
    }

    fn automaton(&self, name: &str) -> Result<&Automaton, ApiError> {
        self.automata.iter().find(|a| a.name() == name).ok_or_else(|| {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "UNKNOWN_AUTOMATON",
                format!("no automaton named `{name}`"),
            )
        })
    }

    fn session(&self, id: &str) -> Result<Arc<RwLock<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::NOT_FOUND,
                    "UNKNOWN_SESSION",
                    format!("no session `{id}`"),
                )
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_string(),
            message: message.into(),
        }
    }
}

impl From<KernelError> for ApiError {
    fn from(e: KernelError) -> Self {
        let status = match e.code {
            ErrorCode::UnknownState => StatusCode::NOT_FOUND,
            ErrorCode::UnsupportedSystem => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.code.as_str(), e.message)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let msg = e.to_string();
        match e {
            SessionError::Kernel(k) => k.into(),
            SessionError::UnknownGoal(_) => Self::new(StatusCode::NOT_FOUND, "UNKNOWN_GOAL", msg),
            SessionError::StaleGoal(_) => Self::new(StatusCode::CONFLICT, "STALE_GOAL", msg),
            SessionError::NothingToUndo => Self::new(StatusCode::CONFLICT, "NOTHING_TO_UNDO", msg),
            SessionError::Incomplete(_) => Self::new(StatusCode::CONFLICT, "INCOMPLETE_PROOF", msg),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub system: String,
    pub left: String,
    pub right: String,
    pub s1: String,
    pub s2: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApplyResponse {
    pub new_goals: Vec<GoalView>,
    pub session: SessionView,
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", e.to_string()))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn list_automata(State(st): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let defs: Vec<AutomatonDef> = st.automata.iter().map(Automaton::to_def).collect();
    Json(json!({ "automata": defs }))
}

async fn create_session(
    State(st): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let system: SimKind = req
        .system
        .parse()
        .map_err(|e: fairsim::simulations::UnknownKind| {
            ApiError::new(StatusCode::BAD_REQUEST, "UNKNOWN_SYSTEM", e.to_string())
        })?;
    let a = st.automaton(&req.left)?;
    let b = st.automaton(&req.right)?;
    let id = format!("s{}", st.counter.fetch_add(1, Ordering::Relaxed) + 1);
    let session = Session::new(id.clone(), system, a, b, &req.s1, &req.s2)?;
    let view = session.view();
    st.sessions
        .write()
        .expect("session table poisoned")
        .insert(id, Arc::new(RwLock::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let s = st.session(&id)?;
    let view = s.read().expect("session poisoned").view();
    Ok(Json(view))
}

async fn goal_rules(
    State(st): State<Arc<AppState>>,
    Path((id, gid)): Path<(String, GoalId)>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let s = st.session(&id)?;
    let rules = s.read().expect("session poisoned").rules(gid)?;
    Ok(Json(json!({ "goal": gid, "rules": rules })))
}

async fn apply(
    State(st): State<Arc<AppState>>,
    Path((id, gid)): Path<(String, GoalId)>,
    body: Bytes,
) -> Result<Json<ApplyResponse>, ApiError> {
    let req: ApplyRequest = parse_body(&body)?;
    let s = st.session(&id)?;
    let mut s = s.write().expect("session poisoned");
    let ids = s.apply(gid, &req)?;
    Ok(Json(ApplyResponse {
        new_goals: ids.iter().filter_map(|&g| s.goal_view(g)).collect(),
        session: s.view(),
    }))
}

async fn undo(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionView>, ApiError> {
    let s = st.session(&id)?;
    let mut s = s.write().expect("session poisoned");
    s.undo()?;
    Ok(Json(s.view()))
}

async fn script(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let s = st.session(&id)?;
    let p = s.read().expect("session poisoned").script()?;
    Ok((
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        serialize_script(&p),
    )
        .into_response())
}

fn routes() -> Router<Arc<AppState>> {
    Router::new()
        .route("/health", get(health))
        .route("/automata", get(list_automata))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/goals/{gid}/rules", get(goal_rules))
        .route("/sessions/{id}/goals/{gid}/apply", post(apply))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/script", get(script))
}

pub fn router(state: Arc<AppState>) -> Router {
    routes().nest("/v1", routes()).with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener, state: Arc<AppState>) -> io::Result<()> {
    axum::serve(listener, router(state)).await
}
