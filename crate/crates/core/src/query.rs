//! Read-only views sized for plotting: downsampled series, daily heatmaps,
//! arrival/departure bins, charging snapshots, per-agent map metrics and the
//! single-agent drill-down bundle.
//!
//! Windows are half-open `[from, to)` and must sit on the minute grid.
//! Instants in results are rendered in the scenario's timezone.

use std::collections::BTreeMap;
use std::ops::Range;
use std::str::FromStr;

use chrono::{DateTime, FixedOffset, NaiveDate, Utc};
use chrono_tz::Tz;
use serde::Serialize;
use thiserror::Error;

use crate::metrics::{detect_dissatisfaction, DEFAULT_DISSATISFACTION_EPSILON};
use crate::store::{AgentMeta, EventKind, ScenarioStore};
use crate::sum::NeumaierSum;
use crate::time::{local_date, local_day_bounds, local_day_minutes, STEP_HOURS};

pub type Stamp = DateTime<FixedOffset>;

fn stamp(t: DateTime<Utc>, tz: Tz) -> Stamp {
    t.with_timezone(&tz).fixed_offset()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("unknown agent {0:?}")]
    UnknownAgent(String),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("window is empty")]
    EmptyWindow,
    #[error("bucket count {requested} must be between 1 and {max}")]
    BadBucketCount { requested: usize, max: usize },
    #[error("bin width must be at least one minute")]
    BadBinWidth,
    #[error("window lies outside the scenario range")]
    WindowOutOfRange,
    #[error("timestamp {0} is not on the minute grid")]
    OffGridTimestamp(String),
    #[error("date {0} is outside the scenario range")]
    DateOutOfRange(NaiveDate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesVariable {
    TotalLoad,
    EvLoad,
    Baseload,
    Soc,
    ChargingEvCount,
    SpotPrice,
    DsoTariff,
    TotalPrice,
    Co2,
    TransformerCapacity,
    LoadRatio,
}

impl SeriesVariable {
    pub const ALL: [SeriesVariable; 11] = [
        SeriesVariable::TotalLoad,
        SeriesVariable::EvLoad,
        SeriesVariable::Baseload,
        SeriesVariable::Soc,
        SeriesVariable::ChargingEvCount,
        SeriesVariable::SpotPrice,
        SeriesVariable::DsoTariff,
        SeriesVariable::TotalPrice,
        SeriesVariable::Co2,
        SeriesVariable::TransformerCapacity,
        SeriesVariable::LoadRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SeriesVariable::TotalLoad => "total_load",
            SeriesVariable::EvLoad => "ev_load",
            SeriesVariable::Baseload => "baseload",
            SeriesVariable::Soc => "soc",
            SeriesVariable::ChargingEvCount => "charging_ev_count",
            SeriesVariable::SpotPrice => "spot_price",
            SeriesVariable::DsoTariff => "dso_tariff",
            SeriesVariable::TotalPrice => "total_price",
            SeriesVariable::Co2 => "co2",
            SeriesVariable::TransformerCapacity => "transformer_capacity",
            SeriesVariable::LoadRatio => "load_ratio",
        }
    }

    /// System-wide variables have one series regardless of scope.
    pub fn is_system(self) -> bool {
        matches!(
            self,
            SeriesVariable::SpotPrice
                | SeriesVariable::DsoTariff
                | SeriesVariable::TotalPrice
                | SeriesVariable::Co2
                | SeriesVariable::TransformerCapacity
                | SeriesVariable::LoadRatio
        )
    }

    /// Parse `name` or `name:agent_id`; the suffix selects agent scope.
    pub fn parse_scoped(text: &str) -> Result<(Self, Option<String>), QueryError> {
        match text.split_once(':') {
            Some((name, agent)) if !agent.is_empty() => Ok((name.parse()?, Some(agent.to_string()))),
            Some(_) => Err(QueryError::UnknownVariable(text.into())),
            None => Ok((text.parse()?, None)),
        }
    }
}

impl FromStr for SeriesVariable {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| QueryError::UnknownVariable(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scope {
    Aggregate,
    Agent(String),
}

impl Scope {
    pub fn parse(text: Option<&str>) -> Scope {
        match text {
            None | Some("") | Some("aggregate") => Scope::Aggregate,
            Some(id) => Scope::Agent(id.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            Scope::Aggregate => "aggregate",
            Scope::Agent(id) => id,
        }
    }
}

/// Resolve `[from, to)` to grid indices.
pub fn resolve_window(store: &ScenarioStore, from: DateTime<Utc>, to: DateTime<Utc>) -> Result<Range<usize>, QueryError> {
    let index = store.time_index();
    for t in [from, to] {
        if !crate::time::is_whole_minute(t) || (t - index.start()).num_seconds() % crate::time::STEP_SECONDS != 0 {
            return Err(QueryError::OffGridTimestamp(t.to_rfc3339()));
        }
    }
    if from >= to {
        return Err(QueryError::EmptyWindow);
    }
    match (index.boundary_of(from), index.boundary_of(to)) {
        (Some(a), Some(b)) => Ok(a..b),
        _ => Err(QueryError::WindowOutOfRange),
    }
}

/// Split `0..n` into `buckets` contiguous, non-empty, in-order ranges.
pub fn bucket_ranges(n: usize, buckets: usize) -> impl Iterator<Item = Range<usize>> {
    (0..buckets).map(move |i| (i * n / buckets)..((i + 1) * n / buckets))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bucket {
    pub t_start: Stamp,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DownsampledSeries {
    pub variable: String,
    pub scope: String,
    pub from: Stamp,
    pub to: Stamp,
    pub buckets: Vec<Bucket>,
}

/// {min, max, mean, count} of `value(t)` for every bucket of `range`.
pub fn downsample(
    store: &ScenarioStore,
    range: Range<usize>,
    buckets: usize,
    value: impl Fn(usize) -> f64,
) -> Result<Vec<Bucket>, QueryError> {
    let n = range.len();
    if buckets == 0 || buckets > n {
        return Err(QueryError::BadBucketCount { requested: buckets, max: n });
    }
    let tz = store.timezone();
    let index = store.time_index();
    Ok(bucket_ranges(n, buckets)
        .map(|b| {
            let mut min = f64::INFINITY;
            let mut max = f64::NEG_INFINITY;
            let mut sum = NeumaierSum::new();
            for t in (range.start + b.start)..(range.start + b.end) {
                let v = value(t);
                min = min.min(v);
                max = max.max(v);
                sum.add(v);
            }
            Bucket {
                t_start: stamp(index.at(range.start + b.start), tz),
                min,
                max,
                mean: sum.total() / b.len() as f64,
                count: b.len(),
            }
        })
        .collect())
}

fn agent_of(store: &ScenarioStore, scope: &Scope) -> Result<Option<usize>, QueryError> {
    match scope {
        Scope::Aggregate => Ok(None),
        Scope::Agent(id) => store.agent_index(id).map(Some).ok_or_else(|| QueryError::UnknownAgent(id.clone())),
    }
}

pub fn series_window(
    store: &ScenarioStore,
    variable: SeriesVariable,
    scope: &Scope,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
    buckets: usize,
) -> Result<DownsampledSeries, QueryError> {
    let agent = agent_of(store, scope)?;
    let range = resolve_window(store, from, to)?;
    let sys = store.system();
    let n_agents = store.agents().len() as f64;
    let buckets = match (variable, agent) {
        (SeriesVariable::TotalLoad, None) => downsample(store, range, buckets, |t| store.total_load()[t]),
        (SeriesVariable::TotalLoad, Some(a)) => {
            let (b, e) = (store.baseload().agent(a), store.ev_load().agent(a));
            downsample(store, range, buckets, |t| b[t] + e[t])
        }
        (SeriesVariable::EvLoad, None) => downsample(store, range, buckets, |t| store.ev_total()[t]),
        (SeriesVariable::EvLoad, Some(a)) => downsample(store, range, buckets, |t| store.ev_load().agent(a)[t]),
        (SeriesVariable::Baseload, None) => downsample(store, range, buckets, |t| store.baseload_total()[t]),
        (SeriesVariable::Baseload, Some(a)) => downsample(store, range, buckets, |t| store.baseload().agent(a)[t]),
        (SeriesVariable::Soc, None) => downsample(store, range, buckets, |t| {
            crate::sum::sum(store.soc().columns().map(|c| c[t])) / n_agents
        }),
        (SeriesVariable::Soc, Some(a)) => downsample(store, range, buckets, |t| store.soc().agent(a)[t]),
        (SeriesVariable::ChargingEvCount, None) => {
            downsample(store, range, buckets, |t| f64::from(store.charging_count()[t]))
        }
        (SeriesVariable::ChargingEvCount, Some(a)) => {
            downsample(store, range, buckets, |t| f64::from(u8::from(store.ev_load().agent(a)[t] > 0.0)))
        }
        (SeriesVariable::SpotPrice, _) => downsample(store, range, buckets, |t| sys.spot_price[t]),
        (SeriesVariable::DsoTariff, _) => downsample(store, range, buckets, |t| sys.dso_tariff[t]),
        (SeriesVariable::TotalPrice, _) => downsample(store, range, buckets, |t| sys.spot_price[t] + sys.dso_tariff[t]),
        (SeriesVariable::Co2, _) => downsample(store, range, buckets, |t| sys.co2_intensity[t]),
        (SeriesVariable::TransformerCapacity, _) => downsample(store, range, buckets, |t| sys.transformer_capacity[t]),
        (SeriesVariable::LoadRatio, _) => {
            downsample(store, range, buckets, |t| store.total_load()[t] / sys.transformer_capacity[t])
        }
    }?;
    let tz = store.timezone();
    Ok(DownsampledSeries {
        variable: variable.as_str().into(),
        scope: scope.as_str().into(),
        from: stamp(from, tz),
        to: stamp(to, tz),
        buckets,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatmapDay {
    pub local_date: NaiveDate,
    /// Minutes in the local day (1380 or 1500 on DST transition days).
    pub day_minutes: i64,
    /// Covered part of the day; narrower than the day at scenario edges.
    pub from: Stamp,
    pub to: Stamp,
    pub column_starts: Vec<Stamp>,
    pub column_minutes: Vec<usize>,
    pub agent_ids: Vec<String>,
    /// Mean EV load in kW; one row per agent, one column per bin.
    pub values: Vec<Vec<f64>>,
}

/// EV charging load per agent over one local day. `column_bins` defaults to
/// one column per minute.
pub fn heatmap_day(store: &ScenarioStore, date: NaiveDate, column_bins: Option<usize>) -> Result<HeatmapDay, QueryError> {
    let tz = store.timezone();
    let index = store.time_index();
    let (day_start, day_end) = local_day_bounds(date, tz);
    let range = index.clamp_range(day_start, day_end);
    if range.is_empty() {
        return Err(QueryError::DateOutOfRange(date));
    }
    let m = range.len();
    let bins = column_bins.unwrap_or(m);
    if bins == 0 || bins > m {
        return Err(QueryError::BadBucketCount { requested: bins, max: m });
    }
    let spans: Vec<Range<usize>> = bucket_ranges(m, bins).map(|b| (range.start + b.start)..(range.start + b.end)).collect();
    let values = store
        .ev_load()
        .columns()
        .map(|col| spans.iter().map(|s| crate::sum::sum(col[s.clone()].iter().copied()) / s.len() as f64).collect())
        .collect();
    Ok(HeatmapDay {
        local_date: date,
        day_minutes: local_day_minutes(date, tz),
        from: stamp(index.at(range.start), tz),
        to: stamp(index.at(range.start) + chrono::Duration::minutes(m as i64), tz),
        column_starts: spans.iter().map(|s| stamp(index.at(s.start), tz)).collect(),
        column_minutes: spans.iter().map(Range::len).collect(),
        agent_ids: store.agents().iter().map(|a| a.agent_id.clone()).collect(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventBin {
    pub t_start: Stamp,
    pub arrival_count: usize,
    pub departure_count: usize,
    pub arrival_agent_ids: Vec<String>,
    pub departure_agent_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventBins {
    pub bin_width_minutes: usize,
    pub from: Stamp,
    pub to: Stamp,
    pub bins: Vec<EventBin>,
}

/// Arrival and departure counts per bin of `bin_minutes`; the last bin is
/// truncated at `to`.
pub fn event_bins(
    store: &ScenarioStore,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
    bin_minutes: usize,
) -> Result<EventBins, QueryError> {
    if bin_minutes == 0 {
        return Err(QueryError::BadBinWidth);
    }
    let range = resolve_window(store, from, to)?;
    let tz = store.timezone();
    let index = store.time_index();
    let mut bins: Vec<EventBin> = (range.start..range.end)
        .step_by(bin_minutes)
        .map(|t| EventBin {
            t_start: stamp(index.at(t), tz),
            arrival_count: 0,
            departure_count: 0,
            arrival_agent_ids: Vec::new(),
            departure_agent_ids: Vec::new(),
        })
        .collect();
    let events = store.events();
    let first = events.partition_point(|e| e.timestamp < from);
    for e in events[first..].iter().take_while(|e| e.timestamp < to) {
        let t = index.index_of(e.timestamp).expect("events are on the grid");
        let bin = &mut bins[(t - range.start) / bin_minutes];
        match e.kind {
            EventKind::Arrival => {
                bin.arrival_count += 1;
                bin.arrival_agent_ids.push(e.agent_id.clone());
            }
            EventKind::Departure => {
                bin.departure_count += 1;
                bin.departure_agent_ids.push(e.agent_id.clone());
            }
        }
    }
    Ok(EventBins { bin_width_minutes: bin_minutes, from: stamp(from, tz), to: stamp(to, tz), bins })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargingAgent {
    pub agent_id: String,
    pub ev_load_kw: f64,
}

/// Agents with strictly positive EV load at grid instant `t`.
pub fn charging_agents_at(store: &ScenarioStore, t: DateTime<Utc>) -> Result<Vec<ChargingAgent>, QueryError> {
    let index = store.time_index();
    let i = match index.index_of(t) {
        Some(i) => i,
        None if crate::time::is_whole_minute(t) => return Err(QueryError::WindowOutOfRange),
        None => return Err(QueryError::OffGridTimestamp(t.to_rfc3339())),
    };
    Ok(store
        .agents()
        .iter()
        .zip(store.ev_load().columns())
        .filter(|(_, col)| col[i] > 0.0)
        .map(|(a, col)| ChargingAgent { agent_id: a.agent_id.clone(), ev_load_kw: col[i] })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MapMetric {
    TotalExpensesDkk,
    EvEnergyKwh,
    DissatisfactionCount,
    PeakLoadKw,
    AvgDailyDistanceKm,
}

impl MapMetric {
    pub const ALL: [MapMetric; 5] = [
        MapMetric::TotalExpensesDkk,
        MapMetric::EvEnergyKwh,
        MapMetric::DissatisfactionCount,
        MapMetric::PeakLoadKw,
        MapMetric::AvgDailyDistanceKm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MapMetric::TotalExpensesDkk => "total_expenses_dkk",
            MapMetric::EvEnergyKwh => "ev_energy_kwh",
            MapMetric::DissatisfactionCount => "dissatisfaction_count",
            MapMetric::PeakLoadKw => "peak_load_kw",
            MapMetric::AvgDailyDistanceKm => "avg_daily_distance_km",
        }
    }
}

impl FromStr for MapMetric {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| QueryError::UnknownMetric(s.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionStats {
    pub sum: f64,
    pub max: f64,
    pub mean: f64,
    pub min: f64,
}

impl SelectionStats {
    /// `None` for an empty selection.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let sum = crate::sum::sum(values.iter().copied());
        Some(Self {
            sum,
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: sum / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentValue {
    pub agent_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapMetricResult {
    pub metric: MapMetric,
    pub from: Stamp,
    pub to: Stamp,
    pub values: Vec<AgentValue>,
    pub stats: SelectionStats,
}

/// One value per agent over `[from, to)`:
///
/// - `total_expenses_dkk`: Σ (baseload + ev_load)·Δt·(spot + tariff)
/// - `ev_energy_kwh`: Σ ev_load·Δt
/// - `dissatisfaction_count`: dissatisfied departures in the window
/// - `peak_load_kw`: max of baseload + ev_load
/// - `avg_daily_distance_km`: Σ arrival trip distance / window length in days
pub fn map_metric(
    store: &ScenarioStore,
    metric: MapMetric,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
) -> Result<MapMetricResult, QueryError> {
    let range = resolve_window(store, from, to)?;
    let sys = store.system();
    let per_agent: Vec<f64> = match metric {
        MapMetric::TotalExpensesDkk => store
            .baseload()
            .columns()
            .zip(store.ev_load().columns())
            .map(|(b, e)| {
                crate::sum::sum(range.clone().map(|t| (b[t] + e[t]) * STEP_HOURS * (sys.spot_price[t] + sys.dso_tariff[t])))
            })
            .collect(),
        MapMetric::EvEnergyKwh => store
            .ev_load()
            .columns()
            .map(|e| crate::sum::sum(e[range.clone()].iter().copied()) * STEP_HOURS)
            .collect(),
        MapMetric::PeakLoadKw => store
            .baseload()
            .columns()
            .zip(store.ev_load().columns())
            .map(|(b, e)| range.clone().map(|t| b[t] + e[t]).fold(f64::NEG_INFINITY, f64::max))
            .collect(),
        MapMetric::DissatisfactionCount => {
            let mut counts = vec![0.0; store.agents().len()];
            for d in detect_dissatisfaction(store, DEFAULT_DISSATISFACTION_EPSILON) {
                if d.departure_timestamp >= from && d.departure_timestamp < to {
                    counts[store.agent_index(&d.agent_id).expect("known agent")] += 1.0;
                }
            }
            counts
        }
        MapMetric::AvgDailyDistanceKm => {
            let days = range.len() as f64 / 1440.0;
            (0..store.agents().len())
                .map(|a| {
                    crate::sum::sum(
                        store
                            .agent_events(a)
                            .filter(|e| e.timestamp >= from && e.timestamp < to)
                            .filter_map(|e| e.trip_distance_km),
                    ) / days
                })
                .collect()
        }
    };
    let tz = store.timezone();
    Ok(MapMetricResult {
        metric,
        from: stamp(from, tz),
        to: stamp(to, tz),
        stats: SelectionStats::of(&per_agent).expect("store has agents"),
        values: store
            .agents()
            .iter()
            .zip(per_agent)
            .map(|(a, value)| AgentValue {
                agent_id: a.agent_id.clone(),
                latitude: a.latitude,
                longitude: a.longitude,
                value,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventMarker {
    pub timestamp: Stamp,
    pub kind: EventKind,
    pub soc_pct: f64,
    pub trip_distance_km: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyDistance {
    pub local_date: NaiveDate,
    pub distance_km: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissatisfactionMark {
    pub departure: Stamp,
    pub local_date: NaiveDate,
    pub soc_at_departure: f64,
    pub soc_target: f64,
    pub deficit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentDetail {
    pub agent: AgentMeta,
    pub from: Stamp,
    pub to: Stamp,
    pub charging: DownsampledSeries,
    pub markers: Vec<EventMarker>,
    pub baseload: DownsampledSeries,
    pub daily_distance: Vec<DailyDistance>,
    pub soc: DownsampledSeries,
    /// Parallel to `soc.buckets`: the bucket touches a dissatisfaction day.
    pub soc_flags: Vec<bool>,
    pub dissatisfaction: Vec<DissatisfactionMark>,
    pub dissatisfaction_days: Vec<NaiveDate>,
}

pub fn agent_detail(
    store: &ScenarioStore,
    agent_id: &str,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
    buckets: usize,
) -> Result<AgentDetail, QueryError> {
    let a = store.agent_index(agent_id).ok_or_else(|| QueryError::UnknownAgent(agent_id.into()))?;
    let scope = Scope::Agent(agent_id.to_string());
    let charging = series_window(store, SeriesVariable::EvLoad, &scope, from, to, buckets)?;
    let baseload = series_window(store, SeriesVariable::Baseload, &scope, from, to, buckets)?;
    let soc = series_window(store, SeriesVariable::Soc, &scope, from, to, buckets)?;
    let tz = store.timezone();

    let in_window: Vec<_> = store.agent_events(a).filter(|e| e.timestamp >= from && e.timestamp < to).collect();
    let markers = in_window
        .iter()
        .map(|e| EventMarker {
            timestamp: stamp(e.timestamp, tz),
            kind: e.kind,
            soc_pct: e.soc_pct,
            trip_distance_km: e.trip_distance_km,
        })
        .collect();

    let mut per_day: BTreeMap<NaiveDate, NeumaierSum> = BTreeMap::new();
    for e in in_window.iter().filter(|e| e.kind == EventKind::Arrival) {
        per_day.entry(local_date(e.timestamp, tz)).or_default().add(e.trip_distance_km.unwrap_or(0.0));
    }
    let daily_distance = per_day
        .into_iter()
        .map(|(local_date, s)| DailyDistance { local_date, distance_km: s.total() })
        .collect();

    let dissatisfaction: Vec<DissatisfactionMark> = detect_dissatisfaction(store, DEFAULT_DISSATISFACTION_EPSILON)
        .into_iter()
        .filter(|d| d.agent_id == agent_id && d.departure_timestamp >= from && d.departure_timestamp < to)
        .map(|d| DissatisfactionMark {
            departure: stamp(d.departure_timestamp, tz),
            local_date: local_date(d.departure_timestamp, tz),
            soc_at_departure: d.soc_at_departure,
            soc_target: d.soc_target,
            deficit: d.deficit,
        })
        .collect();
    let mut dissatisfaction_days: Vec<NaiveDate> = dissatisfaction.iter().map(|d| d.local_date).collect();
    dissatisfaction_days.dedup();

    let day_spans: Vec<_> = dissatisfaction_days.iter().map(|d| local_day_bounds(*d, tz)).collect();
    let soc_flags = soc
        .buckets
        .iter()
        .map(|b| {
            let start = b.t_start.with_timezone(&Utc);
            let end = start + chrono::Duration::minutes(b.count as i64);
            day_spans.iter().any(|(ds, de)| start < *de && *ds < end)
        })
        .collect();

    Ok(AgentDetail {
        agent: store.agents()[a].clone(),
        from: stamp(from, tz),
        to: stamp(to, tz),
        charging,
        markers,
        baseload,
        daily_distance,
        soc,
        soc_flags,
        dissatisfaction,
        dissatisfaction_days,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::fixtures::{event, Builder};
    use crate::time::parse_timestamp;
    use proptest::prelude::*;

    fn ts(s: &str) -> DateTime<Utc> {
        parse_timestamp(s).unwrap()
    }

    fn whole(store: &ScenarioStore) -> (DateTime<Utc>, DateTime<Utc>) {
        (store.time_index().start(), store.time_index().end())
    }

    #[test]
    fn four_samples_two_buckets() {
        let s = Builder::new(vec![vec![1.0, 2.0, 3.0, 4.0]], vec![vec![0.0; 4]]).build();
        let (from, to) = whole(&s);
        let d = series_window(&s, SeriesVariable::Baseload, &Scope::Aggregate, from, to, 2).unwrap();
        let got: Vec<_> = d.buckets.iter().map(|b| (b.min, b.max, b.mean, b.count)).collect();
        assert_eq!(got, vec![(1.0, 2.0, 1.5, 2), (3.0, 4.0, 3.5, 2)]);
        assert_eq!(d.buckets[1].t_start, stamp(s.time_index().at(2), s.timezone()));
    }

    #[test]
    fn identity_buckets() {
        let raw = vec![0.3, 7.0, 1.25, 9.5, 0.0];
        let s = Builder::new(vec![raw.clone()], vec![vec![0.0; 5]]).build();
        let (from, to) = whole(&s);
        let d = series_window(&s, SeriesVariable::TotalLoad, &Scope::Agent("A0".into()), from, to, 5).unwrap();
        for (b, v) in d.buckets.iter().zip(&raw) {
            assert_eq!((b.min, b.max, b.mean, b.count), (*v, *v, *v, 1));
        }
    }

    #[test]
    fn total_price_with_zero_tariff_is_spot() {
        let spot = vec![0.5, 1.5, 0.7];
        let s = Builder { spot: Some(spot.clone()), ..Builder::new(vec![vec![1.0; 3]], vec![vec![0.0; 3]]) }.build();
        let (from, to) = whole(&s);
        let a = series_window(&s, SeriesVariable::TotalPrice, &Scope::Aggregate, from, to, 3).unwrap();
        let b = series_window(&s, SeriesVariable::SpotPrice, &Scope::Aggregate, from, to, 3).unwrap();
        assert_eq!(a.buckets, b.buckets);
    }

    #[test]
    fn window_errors() {
        let s = Builder::new(vec![vec![1.0; 10]], vec![vec![0.0; 10]]).build();
        let (from, to) = whole(&s);
        let v = SeriesVariable::TotalLoad;
        assert_eq!(series_window(&s, v, &Scope::Aggregate, from, from, 1), Err(QueryError::EmptyWindow));
        assert_eq!(
            series_window(&s, v, &Scope::Aggregate, from, to + chrono::Duration::minutes(1), 1),
            Err(QueryError::WindowOutOfRange)
        );
        assert!(matches!(
            series_window(&s, v, &Scope::Aggregate, from + chrono::Duration::seconds(30), to, 1),
            Err(QueryError::OffGridTimestamp(_))
        ));
        assert_eq!(
            series_window(&s, v, &Scope::Aggregate, from, to, 11),
            Err(QueryError::BadBucketCount { requested: 11, max: 10 })
        );
        assert_eq!(
            series_window(&s, v, &Scope::Agent("nobody".into()), from, to, 1),
            Err(QueryError::UnknownAgent("nobody".into()))
        );
        assert_eq!("bogus".parse::<SeriesVariable>(), Err(QueryError::UnknownVariable("bogus".into())));
        assert_eq!(SeriesVariable::parse_scoped("soc:A0").unwrap(), (SeriesVariable::Soc, Some("A0".into())));
    }

    fn one_day(tz: &'static str, start: &'static str, minutes: usize, ev: Vec<Vec<f64>>) -> ScenarioStore {
        let n_agents = ev.len();
        Builder { tz, start, ..Builder::new(vec![vec![0.5; minutes]; n_agents], ev) }.build()
    }

    #[test]
    fn heatmap_hourly_bins() {
        let mut a = vec![0.0; 1440];
        a[..60].fill(11.0);
        let s = one_day("UTC", "2025-01-01T00:00:00+00:00", 1440, vec![a, vec![0.0; 1440]]);
        let d = NaiveDate::from_ymd_opt(2025, 1, 1).unwrap();
        let h = heatmap_day(&s, d, Some(24)).unwrap();
        let mut expected = vec![0.0; 24];
        expected[0] = 11.0;
        assert_eq!(h.values[0], expected);
        assert_eq!(h.values[1], vec![0.0; 24]);
        assert_eq!(h.agent_ids, vec!["A0", "A1"]);
        // row sum × bin width = daily EV energy
        assert!((h.values[0].iter().sum::<f64>() * 1.0 - 11.0).abs() < 1e-12);
        assert_eq!(heatmap_day(&s, d, None).unwrap().values[0].len(), 1440);
        assert_eq!(
            heatmap_day(&s, d.succ_opt().unwrap(), None),
            Err(QueryError::DateOutOfRange(d.succ_opt().unwrap()))
        );
    }

    #[test]
    fn heatmap_spring_forward_day_has_23_hours() {
        let s = one_day("Europe/Copenhagen", "2025-03-30T00:00:00+01:00", 23 * 60 + 60, vec![vec![0.0; 24 * 60]]);
        let d = NaiveDate::from_ymd_opt(2025, 3, 30).unwrap();
        let h = heatmap_day(&s, d, None).unwrap();
        assert_eq!(h.day_minutes, 1380);
        assert_eq!(h.values[0].len(), 1380);
        assert!(h.values[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn event_bins_examples() {
        let mut b = Builder { tz: "UTC", start: "2025-01-01T00:00:00+00:00", ..Builder::new(vec![vec![1.0; 1440]; 2], vec![vec![0.0; 1440]; 2]) };
        b.events = vec![
            event("A0", "2025-01-01T07:30:00+00:00", EventKind::Departure, 90.0, None),
            event("A1", "2025-01-01T07:30:00+00:00", EventKind::Departure, 90.0, None),
            event("A0", "2025-01-01T17:10:00+00:00", EventKind::Arrival, 70.0, Some(20.0)),
        ];
        let s = b.build();
        let (from, to) = whole(&s);
        let bins = event_bins(&s, from, to, 60).unwrap();
        assert_eq!(bins.bins.len(), 24);
        assert_eq!(bins.bins[7].departure_count, 2);
        assert_eq!(bins.bins[7].departure_agent_ids, vec!["A0", "A1"]);
        assert_eq!(bins.bins[17].arrival_count, 1);
        assert_eq!(bins.bins[17].arrival_agent_ids, vec!["A0"]);
        let total: usize = bins.bins.iter().map(|b| b.arrival_count + b.departure_count).sum();
        assert_eq!(total, 3);

        let quiet = event_bins(&s, from, ts("2025-01-01T07:00:00Z"), 60).unwrap();
        assert!(quiet.bins.iter().all(|b| b.arrival_count + b.departure_count == 0));
        assert_eq!(event_bins(&s, from, to, 0), Err(QueryError::BadBinWidth));
        // partial last bin
        assert_eq!(event_bins(&s, from, ts("2025-01-01T01:30:00Z"), 60).unwrap().bins.len(), 2);
    }

    #[test]
    fn charging_snapshot() {
        let s = Builder::new(vec![vec![1.0; 2]; 3], vec![vec![11.0, 0.0], vec![0.0, 0.0], vec![3.7, 0.0]]).build();
        let t0 = s.time_index().at(0);
        let got = charging_agents_at(&s, t0).unwrap();
        assert_eq!(
            got,
            vec![
                ChargingAgent { agent_id: "A0".into(), ev_load_kw: 11.0 },
                ChargingAgent { agent_id: "A2".into(), ev_load_kw: 3.7 }
            ]
        );
        assert_eq!(got.len(), s.charging_count()[0] as usize);
        assert!(charging_agents_at(&s, s.time_index().at(1)).unwrap().is_empty());
        assert!(matches!(
            charging_agents_at(&s, t0 + chrono::Duration::seconds(1)),
            Err(QueryError::OffGridTimestamp(_))
        ));
        assert_eq!(charging_agents_at(&s, s.time_index().end()), Err(QueryError::WindowOutOfRange));
    }

    #[test]
    fn selection_stats_example() {
        let st = SelectionStats::of(&[7.4, 10.2, 17.3]).unwrap();
        assert!((st.sum - 34.9).abs() < 1e-12);
        assert_eq!(st.max, 17.3);
        assert_eq!(st.min, 7.4);
        assert!((st.mean - 11.633333).abs() < 1e-6);
        let one = SelectionStats::of(&[4.2]).unwrap();
        assert_eq!((one.sum, one.max, one.mean, one.min), (4.2, 4.2, 4.2, 4.2));
    }

    #[test]
    fn map_metric_definitions() {
        let s = Builder {
            spot: Some(vec![1.0, 2.0]),
            tariff: Some(vec![0.5, 0.5]),
            ..Builder::new(vec![vec![60.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 60.0], vec![6.0, 0.0]])
        }
        .build();
        let (from, to) = whole(&s);
        let m = map_metric(&s, MapMetric::TotalExpensesDkk, from, to).unwrap();
        assert!((m.values[0].value - (1.0 * 1.5 + 1.0 * 2.5)).abs() < 1e-12);
        let e = map_metric(&s, MapMetric::EvEnergyKwh, from, to).unwrap();
        assert!((e.values[1].value - 0.1).abs() < 1e-12);
        let p = map_metric(&s, MapMetric::PeakLoadKw, from, to).unwrap();
        assert_eq!(p.stats.max, 60.0);
        assert_eq!(p.stats.min, 6.0);
        assert_eq!("nope".parse::<MapMetric>(), Err(QueryError::UnknownMetric("nope".into())));
    }

    #[test]
    fn agent_detail_daily_distance_and_flags() {
        let n = 2 * 1440;
        let mut b = Builder { tz: "UTC", start: "2025-01-01T00:00:00+00:00", ..Builder::new(vec![vec![1.0; n]; 2], vec![vec![0.0; n]; 2]) };
        b.events = vec![
            event("A0", "2025-01-01T07:00:00Z", EventKind::Departure, 90.0, None),
            event("A0", "2025-01-01T09:00:00Z", EventKind::Arrival, 85.0, Some(12.0)),
            event("A0", "2025-01-01T12:00:00Z", EventKind::Departure, 89.8, None),
            event("A0", "2025-01-01T18:00:00Z", EventKind::Arrival, 75.0, Some(30.0)),
            event("A0", "2025-01-02T07:00:00Z", EventKind::Departure, 62.0, None),
        ];
        let s = b.build();
        let (from, to) = whole(&s);
        let d = agent_detail(&s, "A0", from, to, 48).unwrap();
        assert_eq!(d.daily_distance, vec![DailyDistance { local_date: NaiveDate::from_ymd_opt(2025, 1, 1).unwrap(), distance_km: 42.0 }]);
        assert_eq!(d.markers.len(), 5);
        assert_eq!(d.dissatisfaction_days, vec![NaiveDate::from_ymd_opt(2025, 1, 2).unwrap()]);
        assert_eq!(d.soc_flags.iter().filter(|f| **f).count(), 24);
        assert!(d.soc_flags[24..].iter().all(|f| *f));

        let quiet = agent_detail(&s, "A1", from, to, 10).unwrap();
        assert!(quiet.markers.is_empty() && quiet.daily_distance.is_empty());
        assert_eq!(agent_detail(&s, "Z", from, to, 10), Err(QueryError::UnknownAgent("Z".into())));
    }

    proptest! {
        #[test]
        fn downsampling_conserves_sum_and_extremes(
            raw in prop::collection::vec(0.0f64..1000.0, 1..300),
            lo_frac in 0.0f64..1.0,
            len_frac in 0.0f64..1.0,
            b_frac in 0.0f64..1.0,
        ) {
            let n = raw.len();
            let lo = ((n - 1) as f64 * lo_frac) as usize;
            let len = 1 + ((n - lo - 1) as f64 * len_frac) as usize;
            let buckets = 1 + ((len - 1) as f64 * b_frac) as usize;
            let s = Builder::new(vec![raw.clone()], vec![vec![0.0; n]]).build();
            let idx = s.time_index();
            let d = series_window(&s, SeriesVariable::Baseload, &Scope::Aggregate, idx.at(lo), idx.at(lo) + chrono::Duration::minutes(len as i64), buckets).unwrap();
            let window = &raw[lo..lo + len];
            let raw_sum: f64 = crate::sum::sum(window.iter().copied());
            let got: f64 = crate::sum::sum(d.buckets.iter().map(|b| b.mean * b.count as f64));
            prop_assert!((got - raw_sum).abs() <= 1e-9 * raw_sum.abs().max(1e-300));
            prop_assert_eq!(d.buckets.iter().map(|b| b.count).sum::<usize>(), len);
            let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let min = window.iter().copied().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(d.buckets.iter().map(|b| b.max).fold(f64::NEG_INFINITY, f64::max), max);
            prop_assert_eq!(d.buckets.iter().map(|b| b.min).fold(f64::INFINITY, f64::min), min);
            for w in d.buckets.windows(2) {
                prop_assert_eq!(w[1].t_start - w[0].t_start, chrono::Duration::minutes(w[0].count as i64));
            }
        }

        #[test]
        fn adjacent_windows_compose(raw in prop::collection::vec(0.0f64..50.0, 4..200), split in 1usize..100, width in 1usize..10) {
            let n = raw.len() - raw.len() % width;
            prop_assume!(n >= 2 * width);
            let cut = ((split % (n / width - 1)) + 1) * width;
            let s = Builder::new(vec![raw[..n].to_vec()], vec![vec![0.0; n]]).build();
            let idx = s.time_index();
            let q = |a: usize, b: usize| series_window(&s, SeriesVariable::TotalLoad, &Scope::Aggregate, idx.at(a), idx.at(0) + chrono::Duration::minutes(b as i64), (b - a) / width).unwrap();
            let whole = q(0, n);
            let mut parts = q(0, cut).buckets;
            parts.extend(q(cut, n).buckets);
            prop_assert_eq!(parts.len(), whole.buckets.len());
            for (p, w) in parts.iter().zip(&whole.buckets) {
                prop_assert_eq!(p.count, w.count);
                prop_assert_eq!(p.t_start, w.t_start);
                prop_assert_eq!(p.mean * p.count as f64, w.mean * w.count as f64);
            }
        }
    }
}
