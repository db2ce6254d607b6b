//! Reference-scenario comparison: percentage KPI diffs and paired overlays.

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::metrics::{KpiReport, OverloadCategory};
use crate::query::{series_window, DownsampledSeries, QueryError, Scope, SeriesVariable};
use crate::store::ScenarioStore;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("KPI schema versions differ: test {test}, reference {reference}")]
    SchemaMismatch { test: u32, reference: u32 },
    #[error("reference scenario does not cover the requested window")]
    WindowMismatch,
    #[error(transparent)]
    Query(#[from] QueryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffStatus {
    Defined,
    /// Reference is zero while the test value is not.
    ZeroReference,
    /// Either side is undefined.
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KpiDiff {
    pub kpi: String,
    pub test: Option<f64>,
    #[serde(rename = "ref")]
    pub reference: Option<f64>,
    pub pct_diff: Option<f64>,
    pub status: DiffStatus,
}

/// `100 × (test − ref) / ref`; zero against zero counts as no change.
pub fn pct_diff(test: Option<f64>, reference: Option<f64>) -> (Option<f64>, DiffStatus) {
    match (test, reference) {
        (Some(t), Some(r)) if r != 0.0 => (Some(100.0 * (t - r) / r), DiffStatus::Defined),
        (Some(0.0), Some(_)) => (Some(0.0), DiffStatus::Defined),
        (Some(_), Some(_)) => (None, DiffStatus::ZeroReference),
        _ => (None, DiffStatus::Incomparable),
    }
}

/// Comparable numeric view of a report, in output order. First overload is
/// expressed as hours since the scenario start; class minutes are keyed
/// `overload_class_minutes.<category>`.
pub fn kpi_values(r: &KpiReport) -> Vec<(String, Option<f64>)> {
    let mut out = vec![
        ("overload_duration_hours".to_string(), Some(r.overload_duration_hours)),
        (
            "first_overload".to_string(),
            r.first_overload.value().map(|t| (t - r.scenario_start).num_seconds() as f64 / 3600.0),
        ),
        ("load_factor".to_string(), r.load_factor.value()),
        ("coincidence_factor".to_string(), r.coincidence_factor.value()),
        ("dissatisfaction_count".to_string(), Some(r.dissatisfaction_count as f64)),
        ("avg_charging_cost".to_string(), r.avg_charging_cost.value()),
        ("avg_co2".to_string(), r.avg_co2.value()),
        ("dso_tariff_revenue".to_string(), Some(r.dso_tariff_revenue)),
    ];
    for c in OverloadCategory::ALL {
        out.push((format!("overload_class_minutes.{}", c.as_str()), Some(r.overload_class_minutes.get(c) as f64)));
    }
    out.push(("critical_share".to_string(), r.critical_share.value()));
    out
}

pub fn diff_kpis(test: &KpiReport, reference: &KpiReport) -> Result<Vec<KpiDiff>, CompareError> {
    if test.schema_version != reference.schema_version {
        return Err(CompareError::SchemaMismatch { test: test.schema_version, reference: reference.schema_version });
    }
    Ok(kpi_values(test)
        .into_iter()
        .zip(kpi_values(reference))
        .map(|((kpi, t), (_, r))| {
            let (pct_diff, status) = pct_diff(t, r);
            KpiDiff { kpi, test: t, reference: r, pct_diff, status }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedSeries {
    pub test: DownsampledSeries,
    #[serde(rename = "ref")]
    pub reference: DownsampledSeries,
}

/// The same window and bucket grid over two scenarios.
#[allow(clippy::too_many_arguments)]
pub fn overlay_series(
    test: &ScenarioStore,
    reference: &ScenarioStore,
    variable: SeriesVariable,
    scope: &Scope,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
    buckets: usize,
) -> Result<PairedSeries, CompareError> {
    let test_series = series_window(test, variable, scope, from, to, buckets)?;
    let ref_series = series_window(reference, variable, scope, from, to, buckets).map_err(|e| match e {
        QueryError::WindowOutOfRange | QueryError::OffGridTimestamp(_) => CompareError::WindowMismatch,
        other => CompareError::Query(other),
    })?;
    Ok(PairedSeries { test: test_series, reference: ref_series })
}
