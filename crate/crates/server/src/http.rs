//! JSON-over-HTTP API for the matching workflow.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::{HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{AllowOrigin, CorsLayer};
use vsim_core::index::Metadata;
use vsim_core::DocStatus;

use crate::service::{NewText, Service, ServiceError, SimilarQuery};
use crate::suggestions::{DecisionKind, SuggestionState};
use crate::webhook::{Notifier, SuggestionRef, WebhookPayload};

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<Service>,
    pub notifier: Option<Arc<Notifier>>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    reason: Option<&'static str>,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, code: "BadRequest", message: message.into(), reason: None }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let reason = match &e {
            ServiceError::Unvectorizable(cause) => Some(cause.reason()),
            _ => None,
        };
        ApiError {
            status: StatusCode::from_u16(e.http_status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR),
            code: e.code(),
            message: e.to_string(),
            reason,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({ "code": self.code, "message": self.message });
        if let Some(reason) = self.reason {
            error["reason"] = json!(reason);
        }
        (self.status, Json(json!({ "error": error }))).into_response()
    }
}

/// `Json` whose rejections use the API error envelope.
pub struct JsonBody<T>(pub T);

impl<S, T> FromRequest<S> for JsonBody<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(value)) => Ok(JsonBody(value)),
            Err(rejection) => Err(ApiError::bad_request(rejection.body_text())),
        }
    }
}

fn parse_status(s: &str) -> Result<DocStatus, ApiError> {
    s.parse().map_err(ApiError::bad_request)
}

#[derive(Deserialize)]
struct SubmitBody {
    id: String,
    text: String,
    status: String,
    #[serde(default)]
    metadata: Metadata,
}

#[derive(Serialize)]
struct SubmitResponse {
    id: String,
    suggestions: Vec<SuggestionRef>,
}

async fn submit_text(
    State(app): State<AppState>,
    JsonBody(body): JsonBody<SubmitBody>,
) -> Result<(StatusCode, Json<SubmitResponse>), ApiError> {
    let status = parse_status(&body.status)?;
    let new = NewText { id: body.id, text: body.text, status, metadata: body.metadata };
    let submission = app.service.submit_text(new)?;
    if let (Some(notifier), false) = (&app.notifier, submission.suggestions.is_empty()) {
        let payload = WebhookPayload::suggestions_created(&submission.item.id, &submission.suggestions);
        let notifier = Arc::clone(notifier);
        tokio::spawn(async move {
            notifier.deliver(&payload).await;
        });
    }
    let response = SubmitResponse {
        id: submission.item.id,
        suggestions: submission.suggestions.iter().map(SuggestionRef::from).collect(),
    };
    Ok((StatusCode::CREATED, Json(response)))
}

async fn get_text(State(app): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    match app.service.get_text(&id) {
        Some(item) => Ok(Json(item).into_response()),
        None => Err(ServiceError::NotFound { kind: "item", id }.into()),
    }
}

async fn delete_text(State(app): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    app.service.delete_text(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
struct PatchBody {
    status: String,
}

async fn patch_text(
    State(app): State<AppState>,
    Path(id): Path<String>,
    JsonBody(body): JsonBody<PatchBody>,
) -> Result<Response, ApiError> {
    let status = parse_status(&body.status)?;
    Ok(Json(app.service.update_status(&id, status)?).into_response())
}

#[derive(Deserialize)]
struct SimilarBody {
    text: String,
    k: Option<usize>,
    threshold: Option<f64>,
    status: Option<String>,
}

async fn similar(
    State(app): State<AppState>,
    JsonBody(body): JsonBody<SimilarBody>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let status = body.status.as_deref().map(parse_status).transpose()?;
    let hits = app.service.query_similar(&body.text, SimilarQuery { k: body.k, threshold: body.threshold, status })?;
    Ok(Json(json!({ "hits": hits })))
}

async fn list_suggestions(
    State(app): State<AppState>,
    Query(params): Query<HashMap<String, String>>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let state = match params.get("state").map(String::as_str) {
        None | Some("") => None,
        Some(s) => Some(s.parse::<SuggestionState>().map_err(ApiError::bad_request)?),
    };
    let source_id = params.get("source_id").map(String::as_str).filter(|s| !s.is_empty());
    Ok(Json(json!({ "suggestions": app.service.list_suggestions(state, source_id) })))
}

#[derive(Deserialize)]
struct DecisionBody {
    decision: String,
}

async fn decide(
    State(app): State<AppState>,
    Path(id): Path<String>,
    JsonBody(body): JsonBody<DecisionBody>,
) -> Result<Response, ApiError> {
    let decision = match body.decision.as_str() {
        "confirm" => DecisionKind::Confirm,
        "dismiss" => DecisionKind::Dismiss,
        other => {
            return Err(ApiError::bad_request(format!("unknown decision `{other}` (expected confirm or dismiss)")))
        }
    };
    Ok(Json(app.service.decide_suggestion(&id, decision)?).into_response())
}

async fn healthz(State(app): State<AppState>) -> Json<serde_json::Value> {
    let stats = app.service.stats();
    Json(json!({ "status": "ok", "dim": stats.index.dim, "documents": stats.index.document_count }))
}

async fn stats(State(app): State<AppState>) -> Json<serde_json::Value> {
    Json(serde_json::to_value(app.service.stats()).expect("stats serialize"))
}

async fn not_found() -> ApiError {
    ApiError { status: StatusCode::NOT_FOUND, code: "NotFound", message: "no such endpoint".into(), reason: None }
}

fn cors(ui_origin: &str) -> CorsLayer {
    let origin = match ui_origin {
        "*" => AllowOrigin::any(),
        origin => match HeaderValue::from_str(origin) {
            Ok(value) => AllowOrigin::exact(value),
            Err(_) => {
                tracing::warn!(origin, "invalid UI origin, CORS disabled");
                AllowOrigin::list([])
            }
        },
    };
    CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::POST, Method::PATCH, Method::DELETE])
        .allow_headers([axum::http::header::CONTENT_TYPE])
}

pub fn router(app: AppState, ui_origin: &str) -> Router {
    Router::new()
        .route("/texts", post(submit_text))
        .route("/texts/{id}", get(get_text).delete(delete_text).patch(patch_text))
        .route("/similar", post(similar))
        .route("/suggestions", get(list_suggestions))
        .route("/suggestions/{id}/decision", post(decide))
        .route("/healthz", get(healthz))
        .route("/stats", get(stats))
        .fallback(not_found)
        .layer(cors(ui_origin))
        .with_state(app)
}
