//! JSON-over-HTTP interface to the session workflow.
//!
//! | Method | Path                    | Purpose                                  |
//! |--------|-------------------------|------------------------------------------|
//! | POST   | `/sessions`             | start an anonymous session               |
//! | GET    | `/sessions/{id}/step`   | current step descriptor                  |
//! | POST   | `/sessions/{id}/events` | submit one event, returns the next step  |
//! | GET    | `/admin/export`         | analysis CSV (`x-admin-secret` required) |

pub mod config;
mod error;
mod server;
pub mod step;

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tailoredsec_core::session::{AllocationPolicy, Condition, SessionEvent, SessionId};
use tailoredsec_core::store::{ExportFilter, SessionStore};

pub use config::{ApiConfig, ConfigError};
pub use error::{ApiError, ErrorCode};
pub use server::{bind, open_store, serve, ServeError, Server};
pub use step::{describe, StepDescriptor};

pub const ADMIN_SECRET_HEADER: &str = "x-admin-secret";

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
    pub policy: Arc<AllocationPolicy>,
    pub admin_secret: Option<Arc<str>>,
}

impl AppState {
    pub fn new(store: Arc<SessionStore>, policy: AllocationPolicy, admin_secret: Option<String>) -> Self {
        Self {
            store,
            policy: Arc::new(policy),
            admin_secret: admin_secret.map(Arc::from),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/step", get(get_step))
        .route("/sessions/{id}/events", post(post_event))
        .route("/admin/export", get(admin_export))
        .with_state(state)
}

#[derive(Debug, Serialize)]
pub struct Created {
    pub session_id: String,
    pub state: &'static str,
    pub condition_visible: bool,
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(ErrorCode::Internal, format!("worker failed: {e}")))
}

async fn create_session(State(app): State<AppState>) -> Result<Response, ApiError> {
    let store = app.store.clone();
    let policy = app.policy.clone();
    let record = blocking(move || store.create(&policy, chrono::Utc::now()))
        .await?
        .map_err(|e| ApiError::from_store(e, None))?;
    let body = Created {
        session_id: record.session_id.to_string(),
        state: record.state.name(),
        condition_visible: false,
    };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

fn parse_id(raw: &str) -> Result<SessionId, ApiError> {
    SessionId::parse(raw).ok_or_else(|| ApiError::not_found(raw))
}

async fn get_step(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<StepDescriptor>, ApiError> {
    let id = parse_id(&id)?;
    let record = app.store.get(id).ok_or_else(|| ApiError::not_found(id))?;
    Ok(Json(describe(&record, app.store.bank())))
}

async fn post_event(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<StepDescriptor>, ApiError> {
    let id = parse_id(&id)?;
    let current = app.store.get(id).ok_or_else(|| ApiError::not_found(id))?.state;
    let event: SessionEvent = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(ErrorCode::MalformedPayload, e.to_string()).with_state(current))?;
    let store = app.store.clone();
    let record = blocking(move || store.apply(id, &event))
        .await?
        .map_err(|e| {
            let state = app.store.get(id).map(|r| r.state);
            ApiError::from_store(e, state)
        })?;
    Ok(Json(describe(&record, app.store.bank())))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportQuery {
    pub condition: Option<String>,
    pub state: Option<String>,
}

fn authorized(app: &AppState, headers: &HeaderMap) -> bool {
    let Some(expected) = app.admin_secret.as_deref() else { return false };
    let Some(given) = headers.get(ADMIN_SECRET_HEADER).and_then(|v| v.to_str().ok()) else {
        return false;
    };
    // Compare without short-circuiting on the first differing byte.
    given.len() == expected.len() && given.bytes().zip(expected.bytes()).fold(0u8, |acc, (a, b)| acc | (a ^ b)) == 0
}

async fn admin_export(
    State(app): State<AppState>,
    headers: HeaderMap,
    query: Result<Query<ExportQuery>, QueryRejection>,
) -> Result<Response, ApiError> {
    if !authorized(&app, &headers) {
        return Err(ApiError::new(ErrorCode::Unauthorized, "admin secret required"));
    }
    let Query(query) = query.map_err(|e| ApiError::new(ErrorCode::MalformedPayload, e.body_text()))?;
    let condition = match query.condition.as_deref() {
        None => None,
        Some(c) => Some(
            Condition::parse(c)
                .ok_or_else(|| ApiError::new(ErrorCode::MalformedPayload, format!("unknown condition `{c}`")))?,
        ),
    };
    let filter = ExportFilter {
        condition,
        state: query.state,
    };
    let store = app.store.clone();
    let csv = blocking(move || {
        let mut buf = Vec::new();
        store.export_csv(&filter, &mut buf).map(|_| buf)
    })
    .await?
    .map_err(|e| ApiError::from_store(e, None))?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}
