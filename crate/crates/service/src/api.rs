//! The story HTTP API.
//!
//! ```text
//! POST  /stories                        {title?, blocks?: [{text}]}
//! GET   /stories/{id}
//! PATCH /stories/{id}/blocks            {version, title?, edits: [edit]}
//! POST  /stories/{id}/autocomplete      {mode: fast|hq, cursor?, seed?}
//! POST  /stories/{id}/images/suggest    {query, k?, cursor?, theme?}
//! POST  /stories/{id}/accept            {ref, version?}
//! POST  /stories/{id}/dismiss           {ref}
//! POST  /stories/{id}/publish           {feedback, version?}
//! GET   /stories/{id}/analytics
//! GET   /share/{token}
//! GET   /health
//! ```
//!
//! Suggestions are never written into a story by the endpoints that produce
//! them; only `accept` turns one into a block. Errors are
//! `{code, message, field?, fields?}` with stable codes.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};
use taletailor::generation::{derive_seed, fnv1a64, GeneratorConfig, ProviderError};
use taletailor::metrics::MetricVector;
use taletailor::rerank::{RerankConfig, RerankError, Reranker};
use taletailor::retrieval::IndexError;
use taletailor::story::{Block, FeedbackForm, Provenance, StoryAnalytics, StoryDocument, StoryStatus};

use crate::engine::Engine;
use crate::store::{Store, StoreError, StoredStory, SuggestionCounts};

/// Seconds a client should wait before retrying after the provider failed.
pub const RETRY_AFTER_SECS: u64 = 5;
pub const DEFAULT_IMAGE_K: usize = 3;
const MAX_IMAGE_K: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
    retry_after: Option<u64>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_owned(),
                message: message.into(),
                field: None,
                fields: Vec::new(),
            },
            retry_after: None,
        }
    }

    fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        let mut e = Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_field", message);
        e.body.field = Some(field.into());
        e
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} {id:?} not found"))
    }

    fn published(id: &str) -> Self {
        Self::new(
            StatusCode::CONFLICT,
            "published",
            format!("story {id:?} is published and can no longer change"),
        )
    }

    pub fn status(&self) -> StatusCode {
        self.status
    }

    pub fn code(&self) -> &str {
        &self.body.code
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut resp = (self.status, Json(self.body)).into_response();
        if let Some(s) = self.retry_after {
            resp.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(s));
        }
        resp
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(id) => Self::not_found("story", &id),
            StoreError::VersionConflict { .. } => Self::new(StatusCode::CONFLICT, "version_conflict", e.to_string()),
            StoreError::Io(_) | StoreError::Corrupt { .. } => {
                log::error!("{e}");
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string())
            }
        }
    }
}

impl From<ProviderError> for ApiError {
    fn from(e: ProviderError) -> Self {
        let unavailable = e.is_transport() || matches!(e, ProviderError::Status { status, .. } if status >= 500);
        if unavailable {
            let mut err = Self::new(StatusCode::SERVICE_UNAVAILABLE, "provider_unavailable", e.to_string());
            err.retry_after = Some(RETRY_AFTER_SECS);
            err
        } else {
            Self::new(StatusCode::BAD_GATEWAY, "provider_error", e.to_string())
        }
    }
}

impl From<RerankError> for ApiError {
    fn from(e: RerankError) -> Self {
        match e {
            RerankError::Provider(p) => p.into(),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "scoring_failed", other.to_string()),
        }
    }
}

/// `Json` whose rejections use the API error body.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Self(v)),
            Err(r) => Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", r.body_text())),
        }
    }
}

#[derive(Debug, Clone)]
enum Suggested {
    Text(String),
    Image {
        image_id: String,
        query: String,
        theme: String,
        attribution: Option<String>,
    },
}

#[derive(Debug, Clone)]
struct Pending {
    story_id: String,
    batch: String,
    insert_at: usize,
    item: Suggested,
}

#[derive(Default)]
struct PendingTable {
    by_ref: HashMap<String, Pending>,
    batches: HashMap<String, Vec<String>>,
}

impl PendingTable {
    fn add(&mut self, story_id: &str, insert_at: usize, items: Vec<Suggested>) -> (String, Vec<String>) {
        let batch = format!("b-{}", uuid::Uuid::new_v4().simple());
        let refs: Vec<String> = items
            .into_iter()
            .map(|item| {
                let r = format!("s-{}", uuid::Uuid::new_v4().simple());
                self.by_ref.insert(
                    r.clone(),
                    Pending {
                        story_id: story_id.to_owned(),
                        batch: batch.clone(),
                        insert_at,
                        item,
                    },
                );
                r
            })
            .collect();
        self.batches.insert(batch.clone(), refs.clone());
        (batch, refs)
    }

    /// Removes the batch that `r` (a suggestion or batch ref) belongs to.
    fn take_batch(&mut self, r: &str) -> Option<Vec<Pending>> {
        let batch = match self.by_ref.get(r) {
            Some(p) => p.batch.clone(),
            None if self.batches.contains_key(r) => r.to_owned(),
            None => return None,
        };
        let refs = self.batches.remove(&batch)?;
        Some(refs.iter().filter_map(|r| self.by_ref.remove(r)).collect())
    }
}

pub struct AppState {
    pub engine: Arc<Engine>,
    pub store: Arc<Store>,
    /// Prefix of image URLs in rendered HTML.
    pub image_base: String,
    /// Prefix of share URLs, e.g. `http://host:port`; empty gives relative
    /// URLs.
    pub public_url: String,
    pending: Mutex<PendingTable>,
    requests: AtomicU64,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, store: Arc<Store>) -> Self {
        Self {
            engine,
            store,
            image_base: "/images/".into(),
            public_url: String::new(),
            pending: Mutex::new(PendingTable::default()),
            requests: AtomicU64::new(0),
        }
    }

    fn pending(&self) -> std::sync::MutexGuard<'_, PendingTable> {
        self.pending.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn story(&self, id: &str) -> Result<StoredStory, ApiError> {
        self.store.get(id).ok_or_else(|| ApiError::not_found("story", id))
    }

    fn draft(&self, id: &str) -> Result<StoredStory, ApiError> {
        let s = self.story(id)?;
        if s.doc.is_published() {
            return Err(ApiError::published(id));
        }
        Ok(s)
    }
}

type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/stories", post(create_story))
        .route("/stories/{id}", get(get_story))
        .route("/stories/{id}/blocks", patch(update_blocks))
        .route("/stories/{id}/autocomplete", post(autocomplete))
        .route("/stories/{id}/images/suggest", post(suggest_images))
        .route("/stories/{id}/accept", post(accept))
        .route("/stories/{id}/dismiss", post(dismiss))
        .route("/stories/{id}/publish", post(publish))
        .route("/stories/{id}/analytics", get(analytics))
        .route("/share/{token}", get(share))
        .with_state(state)
}

async fn health(State(s): State<Shared>) -> Json<serde_json::Value> {
    let index = s.engine.index();
    Json(serde_json::json!({
        "status": "ok",
        "stories": s.store.len(),
        "index_size": index.len(),
        "index_dim": index.dim(),
    }))
}

#[derive(Debug, Default, Deserialize)]
struct NewBlock {
    text: String,
}

#[derive(Debug, Default, Deserialize)]
struct CreateStory {
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    blocks: Vec<NewBlock>,
}

async fn create_story(
    State(s): State<Shared>,
    ApiJson(req): ApiJson<CreateStory>,
) -> Result<(StatusCode, Json<StoryDocument>), ApiError> {
    let id = uuid::Uuid::new_v4().simple().to_string();
    let mut doc = StoryDocument::new(id, req.title.unwrap_or_default(), Utc::now());
    for (i, b) in req.blocks.into_iter().enumerate() {
        if b.text.trim().is_empty() {
            return Err(ApiError::invalid(
                format!("blocks[{i}].text"),
                "text blocks must not be empty",
            ));
        }
        doc.blocks.push(Block::human(b.text));
    }
    let stored = s.store.insert(StoredStory::new(doc))?;
    Ok((StatusCode::CREATED, Json(stored.doc)))
}

async fn get_story(State(s): State<Shared>, Path(id): Path<String>) -> Result<Json<StoryDocument>, ApiError> {
    Ok(Json(s.story(&id)?.doc))
}

/// One edit of `PATCH /stories/{id}/blocks`. Human edits never change a
/// block's provenance; changing machine text marks it edited.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Edit {
    /// A new human text block, appended when `index` is absent.
    Insert {
        index: Option<usize>,
        text: String,
    },
    Edit {
        index: usize,
        text: String,
    },
    Delete {
        index: usize,
    },
    Move {
        from: usize,
        to: usize,
    },
    /// Style preset of an image block.
    Theme {
        index: usize,
        theme: String,
    },
}

fn apply_edit(blocks: &mut Vec<Block>, edit: Edit, i: usize) -> Result<(), ApiError> {
    let len = blocks.len();
    let field = |name: &str| format!("edits[{i}].{name}");
    let check = |index: usize, name: &str, bound: usize| {
        if index < bound {
            Ok(())
        } else {
            Err(ApiError::invalid(
                field(name),
                format!("index {index} out of range for {len} blocks"),
            ))
        }
    };
    let nonempty = |text: &str| {
        if text.trim().is_empty() {
            Err(ApiError::invalid(field("text"), "text blocks must not be empty"))
        } else {
            Ok(())
        }
    };
    match edit {
        Edit::Insert { index, text } => {
            nonempty(&text)?;
            let at = index.unwrap_or(len);
            check(at, "index", len + 1)?;
            blocks.insert(at, Block::human(text));
        }
        Edit::Edit { index, text } => {
            check(index, "index", len)?;
            nonempty(&text)?;
            match &mut blocks[index] {
                Block::Text {
                    content,
                    provenance,
                    edited,
                } => {
                    if *content != text {
                        if *provenance == Provenance::Machine {
                            *edited = true;
                        }
                        *content = text;
                    }
                }
                Block::Image { .. } => return Err(ApiError::invalid(field("index"), "image blocks have no text")),
            }
        }
        Edit::Delete { index } => {
            check(index, "index", len)?;
            blocks.remove(index);
        }
        Edit::Move { from, to } => {
            check(from, "from", len)?;
            check(to, "to", len)?;
            let b = blocks.remove(from);
            blocks.insert(to, b);
        }
        Edit::Theme { index, theme } => {
            check(index, "index", len)?;
            match &mut blocks[index] {
                Block::Image { theme: t, .. } => *t = theme,
                Block::Text { .. } => return Err(ApiError::invalid(field("index"), "only image blocks have a theme")),
            }
        }
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
struct UpdateBlocks {
    version: u64,
    #[serde(default)]
    title: Option<String>,
    #[serde(default)]
    edits: Vec<Edit>,
}

async fn update_blocks(
    State(s): State<Shared>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<UpdateBlocks>,
) -> Result<Json<StoryDocument>, ApiError> {
    let stored = s.store.update(&id, Some(req.version), Utc::now(), |r| {
        if r.doc.is_published() {
            return Err(ApiError::published(&r.doc.id));
        }
        if let Some(t) = req.title {
            r.doc.title = t;
        }
        for (i, e) in req.edits.into_iter().enumerate() {
            apply_edit(&mut r.doc.blocks, e, i)?;
        }
        Ok(())
    })?;
    Ok(Json(stored.doc))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Fast,
    Hq,
}

#[derive(Debug, Deserialize)]
struct AutocompleteRequest {
    mode: Mode,
    /// Block index the suggestion would be inserted at; the context is the
    /// text before it. Defaults to the end of the story.
    #[serde(default)]
    cursor: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

/// Six raw features and the batch-normalized total of an HQ suggestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBreakdown {
    #[serde(flatten)]
    pub raw: MetricVector,
    pub normalized_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSuggestion {
    #[serde(rename = "ref")]
    pub reference: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<ScoreBreakdown>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocompleteResponse {
    pub batch: String,
    pub mode: Mode,
    pub insert_at: usize,
    pub suggestions: Vec<TextSuggestion>,
}

fn cursor_of(doc: &StoryDocument, cursor: Option<usize>) -> Result<usize, ApiError> {
    match cursor {
        None => Ok(doc.blocks.len()),
        Some(c) if c <= doc.blocks.len() => Ok(c),
        Some(c) => Err(ApiError::invalid(
            "cursor",
            format!("cursor {c} is past the {} blocks", doc.blocks.len()),
        )),
    }
}

async fn autocomplete(
    State(s): State<Shared>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<AutocompleteRequest>,
) -> Result<Json<AutocompleteResponse>, ApiError> {
    let story = s.draft(&id)?;
    let insert_at = cursor_of(&story.doc, req.cursor)?;
    let context = story.doc.text_before(insert_at);
    let base = s.engine.rerank.generator.seed;
    let seed = req.seed.unwrap_or_else(|| {
        let n = s.requests.fetch_add(1, Ordering::Relaxed);
        derive_seed(base, &[fnv1a64(id.as_bytes()), story.doc.version, n])
    });
    let engine = s.engine.clone();
    let mode = req.mode;
    // Scoring is CPU-bound and may take a while in HQ mode.
    let results: Vec<(String, Option<ScoreBreakdown>)> = tokio::task::spawn_blocking(move || {
        let config = RerankConfig {
            generator: GeneratorConfig {
                seed,
                ..engine.rerank.generator.clone()
            },
            ..engine.rerank.clone()
        };
        let reranker = Reranker::new(&*engine.generator, &engine.scoring, config)?;
        Ok::<_, RerankError>(match mode {
            Mode::Fast => reranker
                .autocomplete_fast(&context)?
                .into_iter()
                .map(|t| (t, None))
                .collect(),
            Mode::Hq => reranker
                .autocomplete_hq(&context)?
                .into_iter()
                .map(|c| {
                    let score = ScoreBreakdown {
                        raw: c.raw_metrics,
                        normalized_score: c.normalized_score,
                    };
                    (c.text, Some(score))
                })
                .collect(),
        })
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;

    let (batch, refs) = s.pending().add(
        &id,
        insert_at,
        results.iter().map(|(t, _)| Suggested::Text(t.clone())).collect(),
    );
    s.store.annotate(&id, |r| r.suggestions.offered += 1)?;
    let suggestions = refs
        .into_iter()
        .zip(results)
        .map(|(reference, (text, score))| TextSuggestion { reference, text, score })
        .collect();
    Ok(Json(AutocompleteResponse {
        batch,
        mode,
        insert_at,
        suggestions,
    }))
}

#[derive(Debug, Deserialize)]
struct SuggestImagesRequest {
    query: String,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    cursor: Option<usize>,
    #[serde(default)]
    theme: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSuggestion {
    #[serde(rename = "ref")]
    pub reference: String,
    pub image_id: String,
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribution: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSuggestResponse {
    pub batch: String,
    pub query: String,
    pub insert_at: usize,
    pub suggestions: Vec<ImageSuggestion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

async fn suggest_images(
    State(s): State<Shared>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<SuggestImagesRequest>,
) -> Result<Json<ImageSuggestResponse>, ApiError> {
    let story = s.draft(&id)?;
    let insert_at = cursor_of(&story.doc, req.cursor)?;
    let k = req.k.unwrap_or(DEFAULT_IMAGE_K);
    if k == 0 || k > MAX_IMAGE_K {
        return Err(ApiError::invalid("k", format!("k must be between 1 and {MAX_IMAGE_K}")));
    }
    if req.query.trim().is_empty() {
        return Err(ApiError::invalid("query", "query must not be empty"));
    }
    let index = s.engine.index();
    let mut warning = None;
    let hits = if index.is_empty() {
        log::warn!("image suggestion requested but the index is empty");
        warning = Some("empty_index".to_owned());
        Vec::new()
    } else {
        let engine = s.engine.clone();
        let query = req.query.clone();
        let idx = index.clone();
        tokio::task::spawn_blocking(move || idx.retrieve_text(&query, &*engine.embedder, k))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
            .map_err(|e| match e {
                IndexError::Provider(p @ (ProviderError::Generation(_) | ProviderError::InvalidConfig(_))) => {
                    ApiError::invalid("query", p.to_string())
                }
                IndexError::Provider(p) => p.into(),
                other => ApiError::new(StatusCode::BAD_GATEWAY, "embedding_mismatch", other.to_string()),
            })?
            .hits
    };
    let theme = req.theme.unwrap_or_default();
    let items = hits
        .iter()
        .map(|h| Suggested::Image {
            image_id: h.image_id.clone(),
            query: req.query.clone(),
            theme: theme.clone(),
            attribution: index.attribution(&h.image_id).map(str::to_owned),
        })
        .collect();
    let (batch, refs) = s.pending().add(&id, insert_at, items);
    s.store.annotate(&id, |r| r.suggestions.offered += 1)?;
    let suggestions = refs
        .into_iter()
        .zip(hits)
        .map(|(reference, h)| ImageSuggestion {
            reference,
            attribution: index.attribution(&h.image_id).map(str::to_owned),
            image_id: h.image_id,
            score: h.score,
        })
        .collect();
    Ok(Json(ImageSuggestResponse {
        batch,
        query: req.query,
        insert_at,
        suggestions,
        warning,
    }))
}

#[derive(Debug, Deserialize)]
struct AcceptRequest {
    #[serde(rename = "ref")]
    reference: String,
    #[serde(default)]
    version: Option<u64>,
}

async fn accept(
    State(s): State<Shared>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<AcceptRequest>,
) -> Result<Json<StoryDocument>, ApiError> {
    let pending = {
        let table = s.pending();
        table.by_ref.get(&req.reference).cloned()
    };
    let pending = match pending {
        Some(p) if p.story_id == id => p,
        _ => return Err(ApiError::not_found("suggestion", &req.reference)),
    };
    let block = match &pending.item {
        Suggested::Text(t) if t.trim().is_empty() => {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "empty_suggestion",
                "the suggestion is empty",
            ))
        }
        Suggested::Text(t) => Block::machine(t.trim()),
        Suggested::Image {
            image_id,
            query,
            theme,
            attribution,
        } => {
            if !s.engine.index().contains(image_id) {
                return Err(ApiError::not_found("image", image_id));
            }
            Block::Image {
                image_id: image_id.clone(),
                query: query.clone(),
                theme: theme.clone(),
                attribution: attribution.clone(),
            }
        }
    };
    let stored = s.store.update(&id, req.version, Utc::now(), |r| {
        if r.doc.is_published() {
            return Err(ApiError::published(&r.doc.id));
        }
        let at = pending.insert_at.min(r.doc.blocks.len());
        r.doc.blocks.insert(at, block);
        r.suggestions.accepted += 1;
        Ok(())
    })?;
    s.pending().take_batch(&req.reference);
    Ok(Json(stored.doc))
}

#[derive(Debug, Deserialize)]
struct DismissRequest {
    #[serde(rename = "ref")]
    reference: String,
}

async fn dismiss(
    State(s): State<Shared>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<DismissRequest>,
) -> Result<StatusCode, ApiError> {
    s.story(&id)?;
    let belongs = {
        let table = s.pending();
        let batch = table
            .by_ref
            .get(&req.reference)
            .map(|p| p.batch.clone())
            .unwrap_or_else(|| req.reference.clone());
        table
            .batches
            .get(&batch)
            .and_then(|refs| refs.first())
            .and_then(|r| table.by_ref.get(r))
            .map(|p| p.story_id == id)
    };
    if belongs != Some(true) {
        return Err(ApiError::not_found("suggestion", &req.reference));
    }
    s.pending().take_batch(&req.reference);
    s.store.annotate(&id, |r| r.suggestions.dismissed += 1)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Deserialize)]
struct PublishRequest {
    #[serde(default)]
    feedback: serde_json::Value,
    #[serde(default)]
    version: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishResponse {
    pub token: String,
    pub share_url: String,
    pub story: StoryDocument,
}

async fn publish(
    State(s): State<Shared>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<PublishRequest>,
) -> Result<Json<PublishResponse>, ApiError> {
    let form: FeedbackForm = if req.feedback.is_null() {
        FeedbackForm::default()
    } else {
        serde_json::from_value(req.feedback).map_err(|e| {
            let mut err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_feedback", e.to_string());
            err.body.field = Some("feedback".into());
            err
        })?
    };
    let record = form.validate(&id).map_err(|fields| {
        let mut err = ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_feedback",
            format!("missing or invalid feedback: {}", fields.join(", ")),
        );
        err.body.field = fields.first().map(|f| format!("feedback.{f}"));
        err.body.fields = fields.into_iter().map(|f| format!("feedback.{f}")).collect();
        err
    })?;
    let token = uuid::Uuid::new_v4().simple().to_string();
    let image_base = s.image_base.clone();
    let stored = s.store.update(&id, req.version, Utc::now(), |r| {
        if r.doc.is_published() {
            return Err(ApiError::published(&r.doc.id));
        }
        if r.doc.blocks.is_empty() {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "empty_story",
                "a story needs at least one block",
            ));
        }
        r.doc.status = StoryStatus::Published;
        r.html = Some(r.doc.render_html(&image_base));
        r.share_token = Some(token.clone());
        r.feedback = Some(record);
        Ok(())
    })?;
    Ok(Json(PublishResponse {
        share_url: format!("{}/share/{token}", s.public_url.trim_end_matches('/')),
        token,
        story: stored.doc,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticsResponse {
    #[serde(flatten)]
    pub analytics: StoryAnalytics,
    pub suggestions: SuggestionCounts,
}

async fn analytics(State(s): State<Shared>, Path(id): Path<String>) -> Result<Json<AnalyticsResponse>, ApiError> {
    let r = s.story(&id)?;
    Ok(Json(AnalyticsResponse {
        analytics: r.doc.analytics(),
        suggestions: r.suggestions,
    }))
}

async fn share(State(s): State<Shared>, Path(token): Path<String>) -> Result<Response, ApiError> {
    let html = s
        .store
        .by_share_token(&token)
        .and_then(|r| r.html)
        .ok_or_else(|| ApiError::not_found("shared story", &token))?;
    Ok(([(header::CONTENT_TYPE, "text/html; charset=utf-8")], html).into_response())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn machine_edits_keep_provenance() {
        let mut blocks = vec![Block::machine("The fox ran.")];
        apply_edit(
            &mut blocks,
            Edit::Edit {
                index: 0,
                text: "The fox ran home.".into(),
            },
            0,
        )
        .unwrap();
        assert_eq!(
            blocks[0],
            Block::Text {
                content: "The fox ran home.".into(),
                provenance: Provenance::Machine,
                edited: true
            }
        );
    }

    #[test]
    fn unchanged_text_is_not_an_edit() {
        let mut blocks = vec![Block::machine("Same.")];
        apply_edit(
            &mut blocks,
            Edit::Edit {
                index: 0,
                text: "Same.".into(),
            },
            0,
        )
        .unwrap();
        assert_eq!(blocks[0], Block::machine("Same."));
    }

    #[test]
    fn edit_validation() {
        let mut blocks = vec![Block::human("a")];
        let e = apply_edit(&mut blocks, Edit::Delete { index: 3 }, 2).unwrap_err();
        assert_eq!(e.body.field.as_deref(), Some("edits[2].index"));
        assert!(apply_edit(
            &mut blocks,
            Edit::Insert {
                index: None,
                text: " ".into()
            },
            0
        )
        .is_err());
        assert!(apply_edit(
            &mut blocks,
            Edit::Theme {
                index: 0,
                theme: "ink".into()
            },
            0
        )
        .is_err());
        apply_edit(
            &mut blocks,
            Edit::Insert {
                index: Some(0),
                text: "b".into(),
            },
            0,
        )
        .unwrap();
        apply_edit(&mut blocks, Edit::Move { from: 0, to: 1 }, 0).unwrap();
        assert_eq!(blocks, vec![Block::human("a"), Block::human("b")]);
    }

    #[test]
    fn batches_are_taken_whole() {
        let mut t = PendingTable::default();
        let (batch, refs) = t.add("s", 0, vec![Suggested::Text("a".into()), Suggested::Text("b".into())]);
        assert_eq!(t.take_batch(&refs[1]).unwrap().len(), 2);
        assert!(t.take_batch(&refs[0]).is_none());
        assert!(t.take_batch(&batch).is_none());
    }
}
