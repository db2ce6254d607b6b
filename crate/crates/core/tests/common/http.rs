//! Fixture, golden files and error contract of the HTTP API, shared with the
//! acceptance suite.

use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use chrono::NaiveDate;
use gridlens::gen::{simulate, GenConfig};
use gridlens::server::{router, AppState};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// Three agents over the spring-forward weekend on a 15 kW transformer.
pub fn fixture_config(seed: u64, id: &str) -> GenConfig {
    GenConfig {
        seed,
        scenario_id: Some(id.into()),
        n_agents: 3,
        start_date: date(2025, 3, 29),
        end_date: date(2025, 4, 1),
        transformer_capacity_kw: 15.0,
        ..GenConfig::default()
    }
}

pub struct Env {
    _dir: tempfile::TempDir,
    pub test_manifest: PathBuf,
    pub ref_manifest: PathBuf,
}

pub fn env() -> Env {
    let dir = tempfile::tempdir().unwrap();
    let write = |seed, id: &str| simulate(&fixture_config(seed, id)).unwrap().write(&dir.path().join(id)).unwrap();
    let test_manifest = write(5, "test");
    let ref_manifest = write(6, "ref");
    Env { _dir: dir, test_manifest, ref_manifest }
}

pub async fn call(app: &Router, req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, Vec<u8>) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let headers = res.headers().clone();
    let body = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, headers, body)
}

pub async fn get(app: &Router, uri: &str) -> (StatusCode, Vec<u8>) {
    let (s, _, b) = call(app, Request::get(uri).body(Body::empty()).unwrap()).await;
    (s, b)
}

pub fn post_json(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri).header(header::CONTENT_TYPE, "application/json").body(Body::from(body.to_string())).unwrap()
}

pub async fn register(app: &Router, manifest: &Path) -> (StatusCode, Value) {
    let (s, _, b) = call(app, post_json("/api/scenarios", serde_json::json!({ "manifest": manifest }))).await;
    (s, serde_json::from_slice(&b).unwrap())
}

pub async fn app_with_both(e: &Env) -> Router {
    let app = router(AppState::new(None), None);
    assert_eq!(register(&app, &e.test_manifest).await.0, StatusCode::OK);
    assert_eq!(register(&app, &e.ref_manifest).await.0, StatusCode::OK);
    app
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn check_golden(name: &str, body: &[u8]) {
    let path = golden_dir().join(name);
    if std::env::var_os("GRIDLENS_UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, body).unwrap();
        return;
    }
    let expected = std::fs::read(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert!(expected == body, "{name} differs from golden:\n{}", String::from_utf8_lossy(body));
}

pub const GOLDEN: [(&str, &str); 11] = [
    ("scenarios.json", "/api/scenarios"),
    ("kpis.json", "/api/scenarios/test/kpis"),
    ("kpis_vs_ref.json", "/api/scenarios/test/kpis?ref=ref"),
    ("series_total_load.json", "/api/scenarios/test/series?var=total_load&buckets=24"),
    (
        "series_soc_agent.json",
        "/api/scenarios/test/series?var=soc:agent_002&from=2025-03-30T00:00:00%2B01:00&to=2025-03-31T00:00:00%2B02:00&buckets=23",
    ),
    ("series_ev_paired.json", "/api/scenarios/test/series?var=ev_load&ref=ref&buckets=12"),
    ("heatmap.json", "/api/scenarios/test/heatmap?date=2025-03-30&bins=24"),
    ("events.json", "/api/scenarios/test/events?bin=360"),
    ("charging.json", "/api/scenarios/test/charging?at=2025-03-30T04:30:00%2B02:00"),
    ("map.json", "/api/scenarios/test/map?metric=ev_energy_kwh"),
    ("agent.json", "/api/scenarios/test/agents/agent_001?buckets=48"),
];

/// Every endpoint answers byte-identically to its golden file.
pub async fn golden_responses(app: &Router) {
    for (name, uri) in GOLDEN {
        let (status, body) = get(app, uri).await;
        assert_eq!(status, StatusCode::OK, "{uri}: {}", String::from_utf8_lossy(&body));
        check_golden(name, &body);
        // Stable bytes across repeated calls.
        assert_eq!(get(app, uri).await.1, body, "{uri}");
    }
}

async fn expect_error(app: &Router, uri: &str, status: StatusCode, code: &str) {
    let (s, body) = get(app, uri).await;
    let v: Value = serde_json::from_slice(&body).unwrap_or_else(|_| panic!("{uri}: {}", String::from_utf8_lossy(&body)));
    assert_eq!((s, v["code"].as_str().unwrap()), (status, code), "{uri}");
    assert!(!v["message"].as_str().unwrap().is_empty());
}

pub async fn error_statuses(app: &Router) {
    let nf = StatusCode::NOT_FOUND;
    let bad = StatusCode::BAD_REQUEST;
    let outside = StatusCode::UNPROCESSABLE_ENTITY;
    expect_error(app, "/api/scenarios/nope/kpis", nf, "unknown_scenario").await;
    expect_error(app, "/api/scenarios/test/kpis?ref=nope", nf, "unknown_scenario").await;
    expect_error(app, "/api/scenarios/test/agents/agent_999", nf, "unknown_agent").await;
    expect_error(app, "/api/scenarios/test/series?var=soc&scope=agent_999", nf, "unknown_agent").await;
    expect_error(app, "/api/scenarios/test/series?var=voltage", bad, "unknown_variable").await;
    expect_error(app, "/api/scenarios/test/series", bad, "bad_request").await;
    expect_error(app, "/api/scenarios/test/series?var=total_load&buckets=10001", bad, "bad_bucket_count").await;
    expect_error(app, "/api/scenarios/test/series?var=total_load&buckets=0", bad, "bad_bucket_count").await;
    expect_error(app, "/api/scenarios/test/series?var=total_load&buckets=ten", bad, "bad_request").await;
    expect_error(app, "/api/scenarios/test/series?var=total_load&from=yesterday", bad, "bad_request").await;
    expect_error(
        app,
        "/api/scenarios/test/series?var=total_load&from=2025-03-29T00:00:30%2B01:00",
        bad,
        "off_grid_timestamp",
    )
    .await;
    expect_error(
        app,
        "/api/scenarios/test/series?var=total_load&from=2025-03-29T01:00:00%2B01:00&to=2025-03-29T00:00:00%2B01:00",
        bad,
        "empty_window",
    )
    .await;
    expect_error(app, "/api/scenarios/test/series?var=total_load&from=2025-03-28T00:00:00%2B01:00", outside, "window_out_of_range")
        .await;
    expect_error(app, "/api/scenarios/test/heatmap?date=2025-05-01", outside, "date_out_of_range").await;
    expect_error(app, "/api/scenarios/test/heatmap?date=30/03/2025", bad, "bad_request").await;
    expect_error(app, "/api/scenarios/test/map?metric=happiness", bad, "unknown_metric").await;
    expect_error(app, "/api/scenarios/test/events?bin=0", bad, "bad_bin_width").await;
    expect_error(app, "/api/scenarios/test/charging", bad, "bad_request").await;
    expect_error(app, "/api/nothing", nf, "not_found").await;
}
