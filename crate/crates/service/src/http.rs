use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::study::{CreateSession, PostEvent, StudyService, SubmitDecision, SubmitRating};
use crate::ServiceError;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let body = ErrorBody {
            error: self.code().into(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type Shared = State<Arc<StudyService>>;
type Reply<T> = Result<Json<T>, ServiceError>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

#[derive(Debug, Deserialize)]
struct EvidenceQuery {
    hypothesis: String,
}

async fn create_session(
    State(s): Shared,
    payload: Option<Json<CreateSession>>,
) -> Result<(StatusCode, Json<crate::SessionInfo>), ServiceError> {
    let request = payload.map(|Json(r)| r).unwrap_or_default();
    Ok((StatusCode::CREATED, Json(s.create_session(request)?)))
}

async fn get_session(State(s): Shared, Path(id): Path<String>) -> Reply<crate::SessionInfo> {
    Ok(Json(s.session(&id)?))
}

async fn get_task(State(s): Shared, Path((id, n)): Path<(String, usize)>) -> Reply<crate::TaskPayload> {
    Ok(Json(s.get_task(&id, n)?))
}

async fn get_evidence(
    State(s): Shared,
    Path((id, n)): Path<(String, usize)>,
    query: Result<Query<EvidenceQuery>, QueryRejection>,
) -> Reply<woe_core::HypothesisReport> {
    let Query(q) = query.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    Ok(Json(s.get_evidence(&id, n, &q.hypothesis)?))
}

async fn post_decision(
    State(s): Shared,
    Path(id): Path<String>,
    payload: Result<Json<SubmitDecision>, JsonRejection>,
) -> Result<(StatusCode, Json<crate::DecisionRecord>), ServiceError> {
    Ok((StatusCode::CREATED, Json(s.submit_decision(&id, body(payload)?)?)))
}

async fn post_event(
    State(s): Shared,
    Path(id): Path<String>,
    payload: Result<Json<PostEvent>, JsonRejection>,
) -> Result<(StatusCode, Json<crate::InteractionEvent>), ServiceError> {
    Ok((StatusCode::CREATED, Json(s.post_event(&id, body(payload)?)?)))
}

async fn post_rating(
    State(s): Shared,
    Path(id): Path<String>,
    payload: Result<Json<SubmitRating>, JsonRejection>,
) -> Result<(StatusCode, Json<crate::BipolarRating>), ServiceError> {
    Ok((StatusCode::CREATED, Json(s.submit_rating(&id, body(payload)?)?)))
}

async fn export(State(s): Shared, Path(id): Path<String>) -> Reply<crate::ExportDocument> {
    Ok(Json(s.export(&id)?))
}

async fn not_found() -> ServiceError {
    ServiceError::BadRequest("no such endpoint".into())
}

pub fn router(service: Arc<StudyService>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/tasks/{n}", get(get_task))
        .route("/sessions/{id}/tasks/{n}/evidence", get(get_evidence))
        .route("/sessions/{id}/decisions", post(post_decision))
        .route("/sessions/{id}/events", post(post_event))
        .route("/sessions/{id}/ratings", post(post_rating))
        .route("/sessions/{id}/export", get(export))
        .fallback(not_found)
        .with_state(service)
}

pub async fn serve(service: Arc<StudyService>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    axum::serve(listener, router(service)).await
}
