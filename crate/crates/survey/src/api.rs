use std::future::Future;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use radsimp_core::survey::{NextItem, ResponseEvent, SubmitError};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Outcome, ServiceState, StudyHandle, SubmitFailure};

/// Error body: `{"error": code, "message": text, "field"?: name, "expected"?: item}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: u16,
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status: status.as_u16(),
            error: error.into(),
            message: message.into(),
            field: None,
            expected: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

impl From<SubmitError> for ApiError {
    fn from(e: SubmitError) -> Self {
        let message = e.to_string();
        match e {
            SubmitError::UnknownRater(_) => ApiError::new(StatusCode::FORBIDDEN, "unknown_rater", message),
            SubmitError::NotOpen(_) => ApiError::new(StatusCode::CONFLICT, "study_not_open", message),
            SubmitError::MissingEventId => {
                let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message);
                err.field = Some("event_id".into());
                err
            }
            SubmitError::EventIdConflict(_) => ApiError::new(StatusCode::CONFLICT, "event_id_conflict", message),
            SubmitError::UnknownItem(_) => ApiError::new(StatusCode::NOT_FOUND, "unknown_item", message),
            SubmitError::AlreadyAnswered(_) => ApiError::new(StatusCode::CONFLICT, "already_answered", message),
            SubmitError::OutOfSequence { expected, .. } => {
                let mut err = ApiError::new(StatusCode::CONFLICT, "out_of_sequence", message);
                err.expected = Some(expected);
                err
            }
            SubmitError::InvalidAnswer(a) => {
                let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_answer", message);
                err.field = Some(a.field);
                err
            }
            SubmitError::BadSequenceNumber { .. } => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
            }
        }
    }
}

/// POST body. `rater` is the rater's capability token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    pub rater: String,
    pub event_id: String,
    pub item_id: String,
    pub answers: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submitted_at: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubmitResponse {
    Accepted { seq: u64 },
    Duplicate { seq: u64 },
}

#[derive(Deserialize)]
struct RaterQuery {
    rater: Option<String>,
}

fn handle(state: &ServiceState, id: &str) -> Result<Arc<StudyHandle>, ApiError> {
    state
        .study(id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_study", format!("no study {id:?}")))
}

fn rater_id(study: &StudyHandle, token: Option<&str>) -> Result<String, ApiError> {
    let token = token.ok_or_else(|| {
        ApiError::new(StatusCode::UNAUTHORIZED, "missing_token", "rater token is required")
    })?;
    study
        .study()
        .rater_for_token(token)
        .map(str::to_string)
        .ok_or_else(|| ApiError::new(StatusCode::FORBIDDEN, "unknown_rater", "rater token not recognised"))
}

async fn health() -> Json<Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn next_item(
    State(state): State<ServiceState>,
    Path(id): Path<String>,
    Query(q): Query<RaterQuery>,
) -> Result<Json<NextItem>, ApiError> {
    let study = handle(&state, &id)?;
    let rater = rater_id(&study, q.rater.as_deref())?;
    Ok(Json(study.next_item(&rater)?))
}

async fn submit(
    State(state): State<ServiceState>,
    Path(id): Path<String>,
    body: Result<Json<SubmitRequest>, axum::extract::rejection::JsonRejection>,
) -> Result<(StatusCode, Json<SubmitResponse>), ApiError> {
    let Json(req) = body.map_err(|e| {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", e.body_text())
    })?;
    let study = handle(&state, &id)?;
    let rater = rater_id(&study, Some(&req.rater))?;
    let event = ResponseEvent {
        event_id: req.event_id,
        rater_id: rater,
        item_id: req.item_id,
        answers: req.answers,
        submitted_at: req.submitted_at,
    };
    let outcome = tokio::task::spawn_blocking(move || study.submit(event))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    match outcome {
        Ok(Outcome::Accepted { seq }) => Ok((StatusCode::CREATED, Json(SubmitResponse::Accepted { seq }))),
        Ok(Outcome::Duplicate { seq }) => Ok((StatusCode::OK, Json(SubmitResponse::Duplicate { seq }))),
        Err(SubmitFailure::Rejected(e)) => Err(e.into()),
        Err(SubmitFailure::Log(e)) => {
            ::log::error!("{e}");
            Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", "could not persist the response"))
        }
    }
}

async fn export(
    State(state): State<ServiceState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let expected = state.admin_token().ok_or_else(|| {
        ApiError::new(StatusCode::FORBIDDEN, "export_disabled", "no admin token is configured")
    })?;
    let given = headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    if given != Some(expected) {
        return Err(ApiError::new(StatusCode::UNAUTHORIZED, "bad_admin_token", "admin token required"));
    }
    let study = handle(&state, &id)?;
    let body = study.export().to_jsonl();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

pub fn router(state: ServiceState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/studies/{id}/next", get(next_item))
        .route("/api/studies/{id}/responses", post(submit))
        .route("/api/studies/{id}/export", get(export))
        .with_state(state)
}

/// Serves until `shutdown` resolves. Every acknowledged response is already
/// synced to its log, so stopping needs no extra flush.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: ServiceState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}
