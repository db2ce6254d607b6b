//! HTTP/JSON API over a registry of loaded scenarios.
//!
//! Stores are immutable once registered, so handlers share them through
//! `Arc` without further locking. Every JSON response carries a strong ETag
//! derived from the scenario content hash and the request URI.

use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::Xxh3;

use crate::compare::{diff_kpis, overlay_series, CompareError};
use crate::ingest::{load_scenario, read_cache, read_cache_header, IngestError, ScenarioManifest};
use crate::metrics::{kpi_report, KpiReport};
use crate::query::{self, MapMetric, QueryError, Scope, SeriesVariable};
use crate::report::kpi_json;
use crate::store::ScenarioStore;
use crate::time::{format_timestamp, parse_timestamp};

/// Upper bound on buckets per series request.
pub const MAX_BUCKETS: usize = 10_000;
/// Bucket count when the request does not name one.
pub const DEFAULT_BUCKETS: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, code: code.into(), message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn unknown_scenario(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "unknown_scenario", format!("no scenario registered as {id:?}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        let (status, code) = match e {
            QueryError::UnknownAgent(_) => (StatusCode::NOT_FOUND, "unknown_agent"),
            QueryError::UnknownVariable(_) => (StatusCode::BAD_REQUEST, "unknown_variable"),
            QueryError::UnknownMetric(_) => (StatusCode::BAD_REQUEST, "unknown_metric"),
            QueryError::EmptyWindow => (StatusCode::BAD_REQUEST, "empty_window"),
            QueryError::BadBucketCount { .. } => (StatusCode::BAD_REQUEST, "bad_bucket_count"),
            QueryError::BadBinWidth => (StatusCode::BAD_REQUEST, "bad_bin_width"),
            QueryError::OffGridTimestamp(_) => (StatusCode::BAD_REQUEST, "off_grid_timestamp"),
            QueryError::WindowOutOfRange => (StatusCode::UNPROCESSABLE_ENTITY, "window_out_of_range"),
            QueryError::DateOutOfRange(_) => (StatusCode::UNPROCESSABLE_ENTITY, "date_out_of_range"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<CompareError> for ApiError {
    fn from(e: CompareError) -> Self {
        match e {
            CompareError::Query(q) => q.into(),
            CompareError::WindowMismatch => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "window_mismatch", e.to_string()),
            CompareError::SchemaMismatch { .. } => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "schema_mismatch", e.to_string()),
        }
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        let status = match e {
            IngestError::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            IngestError::MissingFile { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.kind(), e.to_string())
    }
}

struct Entry {
    store: Arc<ScenarioStore>,
    kpis: OnceLock<KpiReport>,
}

impl Entry {
    fn kpis(&self) -> &KpiReport {
        self.kpis.get_or_init(|| kpi_report(&self.store))
    }
}

#[derive(Default)]
struct Slots {
    stores: HashMap<String, Arc<Entry>>,
    /// Ids whose ingestion is in flight.
    pending: HashSet<String>,
}

/// Scenario id → immutable store.
#[derive(Default)]
pub struct Registry {
    slots: RwLock<Slots>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("scenario {0:?} is already registered")]
pub struct Duplicate(pub String);

impl Registry {
    /// Claim `id` for an upcoming insert.
    fn reserve(&self, id: &str) -> Result<(), Duplicate> {
        let mut slots = self.slots.write().expect("registry lock");
        if slots.stores.contains_key(id) || !slots.pending.insert(id.to_string()) {
            return Err(Duplicate(id.to_string()));
        }
        Ok(())
    }

    fn release(&self, id: &str) {
        self.slots.write().expect("registry lock").pending.remove(id);
    }

    fn commit(&self, store: ScenarioStore) {
        let id = store.scenario_id().to_string();
        let mut slots = self.slots.write().expect("registry lock");
        slots.pending.remove(&id);
        slots.stores.insert(id, Arc::new(Entry { store: Arc::new(store), kpis: OnceLock::new() }));
    }

    pub fn insert(&self, store: ScenarioStore) -> Result<(), Duplicate> {
        self.reserve(store.scenario_id())?;
        self.commit(store);
        Ok(())
    }

    fn entry(&self, id: &str) -> Option<Arc<Entry>> {
        self.slots.read().expect("registry lock").stores.get(id).cloned()
    }

    pub fn get(&self, id: &str) -> Option<Arc<ScenarioStore>> {
        self.entry(id).map(|e| e.store.clone())
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.slots.read().expect("registry lock").stores.keys().cloned().collect();
        ids.sort();
        ids
    }
}

pub struct AppState {
    pub registry: Registry,
    /// Reference used when a request names none.
    pub default_ref: Option<String>,
}

impl AppState {
    pub fn new(default_ref: Option<String>) -> Arc<Self> {
        Arc::new(Self { registry: Registry::default(), default_ref })
    }
}

type Shared = Arc<AppState>;
type Params = Result<Query<HashMap<String, String>>, QueryRejection>;

pub fn router(state: Shared, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/scenarios", get(list_scenarios).post(register_scenario))
        .route("/api/scenarios/{id}/kpis", get(kpis))
        .route("/api/scenarios/{id}/series", get(series))
        .route("/api/scenarios/{id}/heatmap", get(heatmap))
        .route("/api/scenarios/{id}/events", get(events))
        .route("/api/scenarios/{id}/charging", get(charging))
        .route("/api/scenarios/{id}/map", get(map))
        .route("/api/scenarios/{id}/agents/{agent_id}", get(agent))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") }),
    }
}

/// Bind and serve until Ctrl-C.
pub async fn serve(state: Shared, addr: SocketAddr, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, ui_dir.as_deref()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn params(p: Params) -> Result<HashMap<String, String>, ApiError> {
    p.map(|Query(m)| m).map_err(|e| ApiError::bad_request(e.body_text()))
}

fn scenario(state: &AppState, id: &str) -> Result<Arc<Entry>, ApiError> {
    state.registry.entry(id).ok_or_else(|| ApiError::unknown_scenario(id))
}

fn reference(state: &AppState, q: &HashMap<String, String>) -> Result<Option<Arc<Entry>>, ApiError> {
    let id = match q.get("ref") {
        Some(r) if r.is_empty() => return Ok(None),
        Some(r) => r.clone(),
        None => match &state.default_ref {
            Some(r) => r.clone(),
            None => return Ok(None),
        },
    };
    scenario(state, &id).map(Some)
}

/// `+` in an offset arrives as a space when the client did not escape it.
fn instant(q: &HashMap<String, String>, key: &str) -> Result<Option<DateTime<Utc>>, ApiError> {
    q.get(key)
        .map(|s| {
            parse_timestamp(&s.replace(' ', "+"))
                .ok_or_else(|| ApiError::bad_request(format!("{key}: expected an ISO-8601 timestamp with offset, got {s:?}")))
        })
        .transpose()
}

fn window(q: &HashMap<String, String>, store: &ScenarioStore) -> Result<(DateTime<Utc>, DateTime<Utc>), ApiError> {
    let from = instant(q, "from")?.unwrap_or_else(|| store.time_index().start());
    let to = instant(q, "to")?.unwrap_or_else(|| store.time_index().end());
    Ok((from, to))
}

fn number(q: &HashMap<String, String>, key: &str) -> Result<Option<usize>, ApiError> {
    q.get(key)
        .map(|s| s.parse::<usize>().map_err(|_| ApiError::bad_request(format!("{key}: expected a positive integer, got {s:?}"))))
        .transpose()
}

fn bucket_count(q: &HashMap<String, String>, from: DateTime<Utc>, to: DateTime<Utc>) -> Result<usize, ApiError> {
    match number(q, "buckets")? {
        Some(b) if b > MAX_BUCKETS => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_bucket_count",
            format!("at most {MAX_BUCKETS} buckets per request"),
        )),
        Some(b) => Ok(b),
        None => Ok(((to - from).num_minutes().max(1) as usize).min(DEFAULT_BUCKETS)),
    }
}

fn required<'a>(q: &'a HashMap<String, String>, key: &str) -> Result<&'a str, ApiError> {
    q.get(key).map(String::as_str).ok_or_else(|| ApiError::bad_request(format!("missing query parameter {key:?}")))
}

/// JSON body with an ETag; `304` when the client already holds it.
fn respond<T: Serialize>(headers: &HeaderMap, uri: &Uri, stores: &[&ScenarioStore], body: &T) -> Response {
    let mut h = Xxh3::new();
    for s in stores {
        h.update(&s.content_hash().to_le_bytes());
    }
    h.update(uri.to_string().as_bytes());
    let etag = format!("\"{:016x}\"", h.digest());
    if headers.get(header::IF_NONE_MATCH).is_some_and(|v| v.as_bytes() == etag.as_bytes()) {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, etag)]).into_response();
    }
    let bytes = serde_json::to_vec(body).expect("response serializes");
    (
        [
            (header::CONTENT_TYPE, HeaderValue::from_static("application/json")),
            (header::ETAG, HeaderValue::from_str(&etag).expect("ascii")),
        ],
        bytes,
    )
        .into_response()
}

#[derive(Serialize)]
struct ScenarioSummary {
    id: String,
    agents: usize,
    start: String,
    end: String,
    timezone: String,
}

async fn list_scenarios(State(state): State<Shared>) -> Json<Vec<ScenarioSummary>> {
    let out = state
        .registry
        .ids()
        .into_iter()
        .filter_map(|id| state.registry.get(&id))
        .map(|s| {
            let tz = s.timezone();
            ScenarioSummary {
                id: s.scenario_id().to_string(),
                agents: s.agents().len(),
                start: format_timestamp(s.time_index().start(), tz),
                end: format_timestamp(s.time_index().end(), tz),
                timezone: tz.name().to_string(),
            }
        })
        .collect();
    Json(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterRequest {
    manifest: Option<PathBuf>,
    cache: Option<PathBuf>,
}

async fn register_scenario(
    State(state): State<Shared>,
    body: Result<Json<RegisterRequest>, JsonRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    enum Source {
        Manifest(ScenarioManifest),
        Cache(PathBuf),
    }
    let (id, source) = match (req.manifest, req.cache) {
        (Some(path), None) => {
            let m = tokio::task::spawn_blocking(move || ScenarioManifest::from_file(&path))
                .await
                .expect("manifest task")?;
            (m.scenario_id.clone(), Source::Manifest(m))
        }
        (None, Some(path)) => {
            let p = path.clone();
            let header = tokio::task::spawn_blocking(move || read_cache_header(&p)).await.expect("header task")?;
            (header.scenario_id, Source::Cache(path))
        }
        _ => return Err(ApiError::bad_request("body must name exactly one of \"manifest\" or \"cache\"")),
    };

    state
        .registry
        .reserve(&id)
        .map_err(|e| ApiError::new(StatusCode::CONFLICT, "duplicate_scenario", e.to_string()))?;
    let loaded = tokio::task::spawn_blocking(move || match source {
        Source::Manifest(m) => load_scenario(&m),
        Source::Cache(p) => read_cache(&p),
    })
    .await
    .expect("ingest task");
    match loaded {
        Ok(store) if store.scenario_id() == id => {
            tracing::info!(id = %id, agents = store.agents().len(), steps = store.time_index().count(), "registered scenario");
            state.registry.commit(store);
            Ok(Json(serde_json::json!({ "id": id })))
        }
        Ok(_) => {
            state.registry.release(&id);
            Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "CorruptCache", "scenario id changed while loading"))
        }
        Err(e) => {
            state.registry.release(&id);
            Err(e.into())
        }
    }
}

async fn kpis(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    q: Params,
    headers: HeaderMap,
    uri: Uri,
) -> Result<Response, ApiError> {
    let q = params(q)?;
    let test = scenario(&state, &id)?;
    let reference = reference(&state, &q)?;
    let test_report = test.kpis();
    let body = match &reference {
        Some(r) => {
            let diffs = diff_kpis(test_report, r.kpis())?;
            kpi_json(test_report, Some((r.store.scenario_id(), &diffs)))
        }
        None => kpi_json(test_report, None),
    };
    let mut stores = vec![test.store.as_ref()];
    stores.extend(reference.as_ref().map(|r| r.store.as_ref()));
    Ok(respond(&headers, &uri, &stores, &body))
}

async fn series(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    q: Params,
    headers: HeaderMap,
    uri: Uri,
) -> Result<Response, ApiError> {
    let q = params(q)?;
    let test = scenario(&state, &id)?;
    let (variable, var_agent) = SeriesVariable::parse_scoped(required(&q, "var")?)?;
    let scope = match (var_agent, q.get("scope")) {
        (Some(a), None) => Scope::Agent(a),
        (Some(a), Some(s)) if *s == a => Scope::Agent(a),
        (Some(_), Some(_)) => return Err(ApiError::bad_request("scope conflicts with the agent named in var")),
        (None, s) => Scope::parse(s.map(String::as_str)),
    };
    let (from, to) = window(&q, &test.store)?;
    let buckets = bucket_count(&q, from, to)?;
    match reference(&state, &q)? {
        Some(r) => {
            let paired = overlay_series(&test.store, &r.store, variable, &scope, from, to, buckets)?;
            Ok(respond(&headers, &uri, &[&test.store, &r.store], &paired))
        }
        None => {
            let s = query::series_window(&test.store, variable, &scope, from, to, buckets)?;
            Ok(respond(&headers, &uri, &[&test.store], &s))
        }
    }
}

async fn heatmap(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    q: Params,
    headers: HeaderMap,
    uri: Uri,
) -> Result<Response, ApiError> {
    let q = params(q)?;
    let test = scenario(&state, &id)?;
    let text = required(&q, "date")?;
    let date = NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map_err(|_| ApiError::bad_request(format!("date: expected YYYY-MM-DD, got {text:?}")))?;
    let bins = number(&q, "bins")?;
    if bins.is_some_and(|b| b > MAX_BUCKETS) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_bucket_count", format!("at most {MAX_BUCKETS} bins")));
    }
    let h = query::heatmap_day(&test.store, date, bins)?;
    Ok(respond(&headers, &uri, &[&test.store], &h))
}

async fn events(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    q: Params,
    headers: HeaderMap,
    uri: Uri,
) -> Result<Response, ApiError> {
    let q = params(q)?;
    let test = scenario(&state, &id)?;
    let (from, to) = window(&q, &test.store)?;
    let bin = number(&q, "bin")?.unwrap_or(60);
    if bin > 0 && (to - from).num_minutes() / bin as i64 > MAX_BUCKETS as i64 {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_bucket_count", format!("at most {MAX_BUCKETS} bins")));
    }
    let b = query::event_bins(&test.store, from, to, bin)?;
    Ok(respond(&headers, &uri, &[&test.store], &b))
}

#[derive(Serialize)]
struct ChargingSnapshot {
    at: String,
    count: usize,
    agents: Vec<query::ChargingAgent>,
}

async fn charging(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    q: Params,
    headers: HeaderMap,
    uri: Uri,
) -> Result<Response, ApiError> {
    let q = params(q)?;
    let test = scenario(&state, &id)?;
    let at = instant(&q, "at")?.ok_or_else(|| ApiError::bad_request("missing query parameter \"at\""))?;
    let agents = query::charging_agents_at(&test.store, at)?;
    let body = ChargingSnapshot { at: format_timestamp(at, test.store.timezone()), count: agents.len(), agents };
    Ok(respond(&headers, &uri, &[&test.store], &body))
}

async fn map(
    State(state): State<Shared>,
    UrlPath(id): UrlPath<String>,
    q: Params,
    headers: HeaderMap,
    uri: Uri,
) -> Result<Response, ApiError> {
    let q = params(q)?;
    let test = scenario(&state, &id)?;
    let metric: MapMetric = required(&q, "metric")?.parse()?;
    let (from, to) = window(&q, &test.store)?;
    let m = query::map_metric(&test.store, metric, from, to)?;
    Ok(respond(&headers, &uri, &[&test.store], &m))
}

async fn agent(
    State(state): State<Shared>,
    UrlPath((id, agent_id)): UrlPath<(String, String)>,
    q: Params,
    headers: HeaderMap,
    uri: Uri,
) -> Result<Response, ApiError> {
    let q = params(q)?;
    let test = scenario(&state, &id)?;
    if test.store.agent_index(&agent_id).is_none() {
        return Err(QueryError::UnknownAgent(agent_id).into());
    }
    let (from, to) = window(&q, &test.store)?;
    let buckets = bucket_count(&q, from, to)?;
    let d = query::agent_detail(&test.store, &agent_id, from, to, buckets)?;
    Ok(respond(&headers, &uri, &[&test.store], &d))
}
