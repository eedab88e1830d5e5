//! HTTP API: concept palette, label-map ingestion and sketch queries.
//!
//! * `GET /api/concepts` → `[{id, label, color: [r, g, b]}]`
//! * `GET /api/info` → `{n, d, b, count, vocabulary_size}`
//! * `POST /api/ingest` (multipart: a JSON part `{segment_id}` plus one or
//!   more `SLM1` parts) → `{segment_id, count}`
//! * `POST /api/query` `{n, cells, k}` → `{results: [{segment_id, distance, rank}]}`
//!
//! Queries only take the store's read lock. Ingestion writes the record to
//! disk under the read lock too and takes the write lock just to publish
//! the in-memory copy.

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Multipart, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use semsketch_core::encode::encode_grid;
use semsketch_core::palette::palette;
use semsketch_core::{ConceptVocabulary, EmbeddingTable, GridMap, LabelMap, PaletteEntry};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::encode_maps;
use crate::label_map_file::parse_label_map;
use crate::store::VectorStore;

pub struct AppState {
    vocab: ConceptVocabulary,
    table: EmbeddingTable,
    palette: Vec<PaletteEntry>,
    store: RwLock<VectorStore>,
}

impl AppState {
    /// Checks that vocabulary, table and store agree before serving.
    pub fn new(vocab: ConceptVocabulary, table: EmbeddingTable, store: VectorStore) -> Result<Self> {
        let labels: Vec<&str> = vocab.concepts().iter().map(|c| c.label.as_str()).collect();
        if table.labels().iter().map(String::as_str).ne(labels.iter().copied()) {
            return Err(Error::Invalid("embedding table labels do not match the vocabulary".into()));
        }
        if table.d() != store.config().d {
            return Err(Error::Invalid(format!(
                "embedding table has d={} but the store has d={}",
                table.d(),
                store.config().d
            )));
        }
        let palette = palette(&vocab);
        Ok(Self { vocab, table, palette, store: RwLock::new(store) })
    }

    pub fn store_len(&self) -> usize {
        self.store.read().unwrap_or_else(|e| e.into_inner()).len()
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ConceptJson {
    pub id: u16,
    pub label: String,
    pub color: [u8; 3],
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct InfoJson {
    pub n: usize,
    pub d: usize,
    pub b: u32,
    pub count: usize,
    pub vocabulary_size: usize,
}

#[derive(Debug, Serialize, Deserialize, Clone)]
pub struct QueryRequest {
    pub n: usize,
    pub cells: Vec<i64>,
    pub k: i64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Clone)]
pub struct ResultJson {
    pub segment_id: u64,
    pub distance: f64,
    pub rank: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct QueryResponse {
    pub results: Vec<ResultJson>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IngestMeta {
    segment_id: u64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct IngestResponse {
    pub segment_id: u64,
    pub count: usize,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn status(&self) -> StatusCode {
        self.status
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DuplicateSegment(_) => StatusCode::CONFLICT,
            Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/concepts", get(concepts))
        .route("/api/info", get(info))
        .route("/api/ingest", post(ingest))
        .route("/api/query", post(query))
        .with_state(state)
}

async fn concepts(State(state): State<Arc<AppState>>) -> Json<Vec<ConceptJson>> {
    Json(
        state
            .palette
            .iter()
            .map(|p| ConceptJson { id: p.concept_id, label: p.label.clone(), color: p.color })
            .collect(),
    )
}

async fn info(State(state): State<Arc<AppState>>) -> Json<InfoJson> {
    let store = state.store.read().unwrap_or_else(|e| e.into_inner());
    let c = store.config();
    Json(InfoJson { n: c.n, d: c.d, b: c.bits.bits(), count: store.len(), vocabulary_size: state.vocab.len() })
}

/// Validates a sketch request against the store and vocabulary.
pub fn sketch_grid(req: &QueryRequest, n: usize, concepts: usize) -> ApiResult<(GridMap, usize)> {
    if req.n != n {
        return Err(ApiError::bad_request(format!("sketch has n={} but the store has n={n}", req.n)));
    }
    if req.cells.len() != n * n {
        return Err(ApiError::bad_request(format!("expected {} cells, got {}", n * n, req.cells.len())));
    }
    let mut cells = Vec::with_capacity(req.cells.len());
    for &c in &req.cells {
        if c < 0 || c as u64 >= concepts as u64 {
            return Err(ApiError::bad_request(format!("unknown concept id {c}")));
        }
        cells.push(c as u16);
    }
    if req.k < 1 {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("k must be at least 1, got {}", req.k)));
    }
    let grid = GridMap::new(n, cells).map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok((grid, req.k as usize))
}

async fn query(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<QueryResponse>> {
    let req: QueryRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed query: {e}")))?;
    tokio::task::spawn_blocking(move || {
        let store = state.store.read().unwrap_or_else(|e| e.into_inner());
        let (grid, k) = sketch_grid(&req, store.config().n, state.vocab.len())?;
        let vector = encode_grid(&grid, &state.table).map_err(Error::from)?;
        let results = store.knn(&vector, k)?;
        Ok(Json(QueryResponse {
            results: results
                .into_iter()
                .map(|r| ResultJson { segment_id: r.segment_id, distance: r.distance, rank: r.rank })
                .collect(),
        }))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

async fn ingest(State(state): State<Arc<AppState>>, mut multipart: Multipart) -> ApiResult<Json<IngestResponse>> {
    let mut meta: Option<IngestMeta> = None;
    let mut maps: Vec<LabelMap> = Vec::new();
    while let Some(field) =
        multipart.next_field().await.map_err(|e| ApiError::bad_request(format!("malformed multipart body: {e}")))?
    {
        let is_json =
            field.name() == Some("meta") || field.content_type().is_some_and(|t| t.starts_with("application/json"));
        let bytes = field.bytes().await.map_err(|e| ApiError::bad_request(e.to_string()))?;
        if is_json {
            meta = Some(
                serde_json::from_slice(&bytes)
                    .map_err(|e| ApiError::bad_request(format!("malformed ingest metadata: {e}")))?,
            );
        } else {
            maps.push(parse_label_map(&bytes, state.vocab.len()).map_err(|e| ApiError::bad_request(e.to_string()))?);
        }
    }
    let segment_id = meta.ok_or_else(|| ApiError::bad_request("missing JSON part with segment_id"))?.segment_id;
    if maps.is_empty() {
        return Err(ApiError::bad_request("no label maps in request"));
    }

    tokio::task::spawn_blocking(move || {
        let record = {
            let store = state.store.read().unwrap_or_else(|e| e.into_inner());
            if store.contains(segment_id) {
                return Err(Error::DuplicateSegment(segment_id).into());
            }
            let vector = encode_maps(&maps, store.config().n, &state.table)?;
            store.persist(segment_id, &vector)?
        };
        let mut store = state.store.write().unwrap_or_else(|e| e.into_inner());
        store.publish(record);
        Ok(Json(IngestResponse { segment_id, count: store.len() }))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| Error::Io { path: addr.to_string().into(), source })?;
    eprintln!("listening on http://{}", listener.local_addr().map(|a| a.to_string()).unwrap_or_default());
    axum::serve(listener, router(state)).await.map_err(|source| Error::Io { path: addr.to_string().into(), source })
}
