//! A provider-protocol server backed by the built-in models, for running the
//! story service against a separate provider process and for conformance
//! tests of the remote client.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use taletailor::generation::wire::{
    check_batch, CompleteRequest, CompleteResponse, EmbedRequest, EmbedResponse, ErrorBody, LogitsRequest,
    LogitsResponse, COMPLETE_PATH, EMBED_PATH, LOGITS_PATH,
};
use taletailor::generation::{CompletionRequest, Embedder, Generator, LogitSource, ProviderError};

use crate::engine::BuiltinProvider;

/// Upper bound on candidates per completion request.
pub const MAX_CANDIDATES: usize = 64;
/// Upper bound on texts per embedding request.
pub const MAX_BATCH: usize = 4096;

struct ProtocolError(StatusCode, ErrorBody);

impl ProtocolError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self(
            status,
            ErrorBody {
                code: code.into(),
                message: message.into(),
            },
        )
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }
}

impl IntoResponse for ProtocolError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<ProviderError> for ProtocolError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::InvalidConfig(m) => Self::bad_request(m),
            ProviderError::Generation(m) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "generation_failed", m),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
        }
    }
}

impl From<JsonRejection> for ProtocolError {
    fn from(r: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_json", r.body_text())
    }
}

impl From<tokio::task::JoinError> for ProtocolError {
    fn from(e: tokio::task::JoinError) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    }
}

type Shared = Arc<BuiltinProvider>;

pub fn router(provider: Shared) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route(COMPLETE_PATH, post(complete))
        .route(LOGITS_PATH, post(logits))
        .route(EMBED_PATH, post(embed))
        .with_state(provider)
}

async fn complete(
    State(p): State<Shared>,
    body: Result<Json<CompleteRequest>, JsonRejection>,
) -> Result<Json<CompleteResponse>, ProtocolError> {
    let Json(req) = body?;
    if req.n == 0 || req.n > MAX_CANDIDATES {
        return Err(ProtocolError::bad_request(format!(
            "n must be between 1 and {MAX_CANDIDATES}"
        )));
    }
    let req: CompletionRequest = req.into();
    let resp = tokio::task::spawn_blocking(move || p.finetuned.complete(&req)).await??;
    Ok(Json(CompleteResponse {
        candidates: resp.candidates,
    }))
}

async fn logits(
    State(p): State<Shared>,
    body: Result<Json<LogitsRequest>, JsonRejection>,
) -> Result<Json<LogitsResponse>, ProtocolError> {
    let Json(req) = body?;
    let model = match req.model.as_deref() {
        None | Some("finetuned") => p.finetuned.clone(),
        Some("preset") => p.preset.clone(),
        Some(other) => return Err(ProtocolError::bad_request(format!("unknown model {other:?}"))),
    };
    if req.tokens.is_empty() {
        return Err(ProtocolError::bad_request("tokens must not be empty"));
    }
    let logits = tokio::task::spawn_blocking(move || model.logits(&req.tokens)).await??;
    Ok(Json(LogitsResponse {
        distributions: logits.distributions.into_iter().map(Vec::from).collect(),
        vocabulary: logits.vocabulary,
    }))
}

async fn embed(
    State(p): State<Shared>,
    body: Result<Json<EmbedRequest>, JsonRejection>,
) -> Result<Json<EmbedResponse>, ProtocolError> {
    let Json(req) = body?;
    if req.texts.is_empty() || req.texts.len() > MAX_BATCH {
        return Err(ProtocolError::bad_request(format!(
            "texts must hold between 1 and {MAX_BATCH} entries"
        )));
    }
    let dim = p.embedder.dim();
    let vectors = tokio::task::spawn_blocking(move || p.embedder.embed(&req.texts)).await??;
    check_batch(&vectors, Some(dim))
        .map_err(|e| ProtocolError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    Ok(Json(EmbedResponse { vectors, dim }))
}
