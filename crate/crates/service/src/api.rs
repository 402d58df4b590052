//! HTTP planning service.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use coaforge_core::ipb::enemy::Observation;
use coaforge_core::ipb::terrain::LayerKind;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::session::{ConfigOverrides, SessionError, SessionHandle, SessionStore, Status};

pub type AppState = Arc<SessionStore>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CreateSession {
    pub scenario: String,
    pub opord: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub status: Status,
    pub esm_version: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Injected {
    pub esm_version: u64,
    pub status: Status,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectCoa {
    pub coa_id: String,
}

pub struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = match &self.0 {
            SessionError::NotFound(_) => StatusCode::NOT_FOUND,
            SessionError::NoReport => StatusCode::CONFLICT,
            SessionError::Pipeline(_) | SessionError::UnknownCoa(_) | SessionError::Invalid(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            SessionError::Io(_) | SessionError::Corrupt(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = match &self.0 {
            SessionError::Pipeline(p) => {
                json!({ "error": self.0.to_string(), "stage": p.stage.as_str() })
            }
            e => json!({ "error": e.to_string() }),
        };
        (code, Json(body)).into_response()
    }
}

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/layers/{kind}", get(get_layer))
        .route("/sessions/{id}/esm", get(get_esm))
        .route("/sessions/{id}/observations", post(post_observation))
        .route("/sessions/{id}/replan", post(post_replan))
        .route("/sessions/{id}/report", get(get_report))
        .route("/sessions/{id}/select", post(post_select))
        .with_state(store)
}

/// Runs `f` on the session under its lock, off the async executor.
async fn with_session<T, F>(store: &AppState, id: String, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut crate::session::Session) -> Result<T, SessionError> + Send + 'static,
{
    let store = store.clone();
    tokio::task::spawn_blocking(move || {
        let handle: SessionHandle = store.get(&id)?;
        let mut s = handle.lock().expect("session lock");
        f(&mut s)
    })
    .await
    .map_err(|e| ApiError(SessionError::Io(e.to_string())))?
    .map_err(ApiError)
}

async fn create_session(
    State(store): State<AppState>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let created = tokio::task::spawn_blocking(move || {
        let handle = store.create(&req.scenario, &req.opord)?;
        let s = handle.lock().expect("session lock");
        Ok::<_, SessionError>(Created {
            id: s.id.clone(),
            status: s.status,
            esm_version: s.esm().version,
        })
    })
    .await
    .map_err(|e| ApiError(SessionError::Io(e.to_string())))??;
    Ok((StatusCode::CREATED, Json(created)))
}

async fn get_session(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let view = with_session(&store, id, |s| Ok(s.view())).await?;
    Ok(Json(view).into_response())
}

async fn get_layer(
    State(store): State<AppState>,
    Path((id, kind)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let text = with_session(&store, id, move |s| {
        let terrain = &s.prepared.terrain;
        if kind == "overlay" {
            return Ok(terrain.export_overlay());
        }
        LayerKind::parse(&kind)
            .map(|k| terrain.export_raster(k))
            .ok_or_else(|| SessionError::NotFound(format!("layer {kind}")))
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

async fn get_esm(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let esm = with_session(&store, id, |s| Ok(s.esm().clone())).await?;
    Ok(Json(esm).into_response())
}

async fn post_observation(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Json(obs): Json<Observation>,
) -> Result<Json<Injected>, ApiError> {
    let out = with_session(&store, id, move |s| {
        let esm_version = s.inject(obs)?;
        Ok(Injected {
            esm_version,
            status: s.status,
        })
    })
    .await?;
    Ok(Json(out))
}

async fn post_replan(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<ConfigOverrides>>,
) -> Result<Response, ApiError> {
    let overrides = body.map(|Json(o)| o).unwrap_or_default();
    let json = with_session(&store, id, move |s| Ok(s.replan(&overrides)?.to_json())).await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], json).into_response())
}

async fn get_report(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Response, ApiError> {
    let json = with_session(&store, id, |s| {
        s.report
            .as_ref()
            .map(|r| r.to_json())
            .ok_or(SessionError::NoReport)
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "application/json")], json).into_response())
}

async fn post_select(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<SelectCoa>,
) -> Result<Response, ApiError> {
    let view = with_session(&store, id, move |s| {
        s.select(&req.coa_id)?;
        Ok(s.view())
    })
    .await?;
    Ok(Json(view).into_response())
}

pub async fn serve(store: SessionStore, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    axum::serve(listener, router(Arc::new(store))).await
}
