//! Local HTTP service driving staircase sessions.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use stereo_core::geometry::{build_level_table, DEFAULT_LEVELS};
use stereo_core::renderer::render;
use stereo_core::{Acuity, DisplayProfile, LevelTable, Orientation, StaircaseState, StereogramSpec};
use tokio::sync::Mutex;
use uuid::Uuid;

use crate::presets::{DEFAULT_HEIGHT_PX, DEFAULT_WIDTH_PX};
use crate::session::{SessionRecord, SessionStore};
use crate::{png, HarnessError};

pub const DEFAULT_PORT: u16 = 8787;

struct Session {
    id: Uuid,
    created_at: DateTime<Utc>,
    profile: DisplayProfile,
    state: StaircaseState,
    /// Encoded stimulus for the trial index it was rendered for.
    stimulus: Option<(usize, Bytes)>,
}

impl Session {
    fn record(&self) -> SessionRecord {
        SessionRecord::from_state(self.id, self.created_at, self.profile, &self.state)
    }
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<Uuid, Arc<Mutex<Session>>>>,
    store: Option<SessionStore>,
}

impl AppState {
    pub fn new(store: Option<SessionStore>) -> Self {
        Self { sessions: RwLock::default(), store }
    }

    /// Restores every session in the store by replaying its trials.
    pub fn restore(store: SessionStore) -> Result<Self, HarnessError> {
        let mut sessions = HashMap::new();
        for (id, record) in store.load()? {
            let state = record.replay()?;
            let session =
                Session { id, created_at: record.created_at, profile: record.profile, state, stimulus: None };
            sessions.insert(id, Arc::new(Mutex::new(session)));
        }
        Ok(Self { sessions: RwLock::new(sessions), store: Some(store) })
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let id = Uuid::parse_str(id).map_err(|_| ApiError::not_found())?;
        self.sessions.read().expect("session map poisoned").get(&id).cloned().ok_or_else(ApiError::not_found)
    }

    fn persist(&self, record: &SessionRecord) -> Result<(), ApiError> {
        match &self.store {
            Some(store) => store.append(record).map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e)),
            None => Ok(()),
        }
    }
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl ToString) -> Self {
        Self { status, message: message.to_string() }
    }

    fn not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown session")
    }

    fn finished() -> Self {
        Self::new(StatusCode::CONFLICT, "session already finished")
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    ppi: f64,
    distance_m: f64,
    seed: Option<u64>,
    width_px: Option<u32>,
    height_px: Option<u32>,
    n_levels: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: Uuid,
    pub level_table: LevelTable,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResponseBody {
    orientation: Orientation,
    elapsed_ms: Option<u64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResponseResult {
    pub correct: bool,
    pub finished: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<Acuity>,
}

async fn create_session(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let bad = |e: stereo_core::Error| ApiError::new(StatusCode::BAD_REQUEST, e);
    let profile = DisplayProfile::new(
        req.ppi,
        req.width_px.unwrap_or(DEFAULT_WIDTH_PX),
        req.height_px.unwrap_or(DEFAULT_HEIGHT_PX),
    )
    .map_err(bad)?;
    let table = build_level_table(&profile, req.distance_m, req.n_levels.unwrap_or(DEFAULT_LEVELS)).map_err(bad)?;
    // Fail now rather than at the first stimulus if the screen is too small.
    let first = StereogramSpec::new(profile, req.distance_m, *table.coarsest().expect("non-empty"), Orientation::Up, 0);
    first.layout().map_err(bad)?;
    let state = StaircaseState::new(table.clone(), req.seed.unwrap_or_else(rand::random)).map_err(bad)?;
    let session = Session { id: Uuid::new_v4(), created_at: Utc::now(), profile, state, stimulus: None };
    app.persist(&session.record())?;
    let created = CreatedSession { session_id: session.id, level_table: table };
    app.sessions.write().expect("session map poisoned").insert(session.id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn stimulus(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let session = app.get(&id)?;
    let mut s = session.lock().await;
    let plan = s.state.pending().ok_or_else(ApiError::finished)?;
    let trial = s.state.trials().len();
    let level = *s.state.current_level();
    let png = match &s.stimulus {
        Some((cached, bytes)) if *cached == trial => bytes.clone(),
        _ => {
            let spec = StereogramSpec::new(s.profile, s.state.table().distance_m, level, plan.orientation, plan.stimulus_seed);
            let bytes = tokio::task::spawn_blocking(move || render(&spec).map_err(HarnessError::from).and_then(|img| png::encode(&img)))
                .await
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))?
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e))?;
            let bytes = Bytes::from(bytes);
            s.stimulus = Some((trial, bytes.clone()));
            bytes
        }
    };
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("image/png"));
    headers.insert(header::CACHE_CONTROL, HeaderValue::from_static("no-store"));
    headers.insert("x-trial-index", HeaderValue::from(trial));
    headers.insert("x-level-index", HeaderValue::from(level.index));
    headers.insert("x-arcsec", HeaderValue::from_str(&level.arcsec.to_string()).expect("ascii number"));
    Ok((headers, png).into_response())
}

async fn respond(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ResponseResult>, ApiError> {
    let session = app.get(&id)?;
    let req: ResponseBody = parse_body(&body)?;
    // One in-flight response per session; a second concurrent one is refused.
    let mut s = session
        .try_lock()
        .map_err(|_| ApiError::new(StatusCode::CONFLICT, "another response for this session is in flight"))?;
    if s.state.is_finished() {
        return Err(ApiError::finished());
    }
    let correct = s
        .state
        .step_timed(req.orientation, req.elapsed_ms.unwrap_or(0))
        .map_err(|e| ApiError::new(StatusCode::CONFLICT, e))?;
    s.stimulus = None;
    let record = s.record();
    app.persist(&record)?;
    Ok(Json(ResponseResult { correct, finished: record.is_finished(), outcome: record.outcome }))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionRecord>, ApiError> {
    let session = app.get(&id)?;
    let s = session.lock().await;
    Ok(Json(s.record().public_view()))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/stimulus", get(stimulus))
        .route("/sessions/{id}/response", post(respond))
        .with_state(app)
}

/// Serves until the process receives Ctrl-C.
pub async fn serve(addr: SocketAddr, app: AppState) -> Result<(), HarnessError> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| HarnessError::io(addr.to_string(), e))?;
    eprintln!("listening on http://{}", listener.local_addr().map_err(|e| HarnessError::io(addr.to_string(), e))?);
    axum::serve(listener, router(Arc::new(app)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| HarnessError::io(addr.to_string(), e))
}
