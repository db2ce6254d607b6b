//! Grid-impact KPIs over a whole scenario.
//!
//! Every KPI has an exact definition in terms of the stored columns so it can
//! be recomputed by a straight-line oracle. Quantities that are undefined for
//! a given scenario (zero peak, no charging energy, no overload) are reported
//! as [`Kpi::Undefined`] with a reason, never as a silent zero.

use std::fmt;

use chrono::{DateTime, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{EventKind, ScenarioStore};
use crate::sum::NeumaierSum;
use crate::time::STEP_HOURS;

/// Version of the KPI report schema; bumped whenever fields change meaning.
pub const KPI_SCHEMA_VERSION: u32 = 1;

/// Default tolerance for the dissatisfaction rule, in SoC percent points.
pub const DEFAULT_DISSATISFACTION_EPSILON: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("series is empty")]
    EmptySeries,
    #[error("peak load is zero")]
    ZeroPeak,
    #[error("no charging energy in window")]
    NoChargingEnergy,
    #[error("ratio is not finite")]
    NonFinite,
}

/// Transformer loading band by ratio of total load to rated capacity.
/// Bands are right-closed: (1.0, 1.5], (1.5, 1.8], (1.8, 2.0], (2.0, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverloadCategory {
    None,
    NormalCyclic,
    LongTimeEmergency,
    ShortTimeEmergency,
    Critical,
}

impl OverloadCategory {
    pub const ALL: [OverloadCategory; 5] = [
        OverloadCategory::None,
        OverloadCategory::NormalCyclic,
        OverloadCategory::LongTimeEmergency,
        OverloadCategory::ShortTimeEmergency,
        OverloadCategory::Critical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OverloadCategory::None => "none",
            OverloadCategory::NormalCyclic => "normal_cyclic",
            OverloadCategory::LongTimeEmergency => "long_time_emergency",
            OverloadCategory::ShortTimeEmergency => "short_time_emergency",
            OverloadCategory::Critical => "critical",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OverloadCategory::None => "Within capacity (<=100%)",
            OverloadCategory::NormalCyclic => "Normal cyclic (100-150%)",
            OverloadCategory::LongTimeEmergency => "Long-time emergency (150-180%)",
            OverloadCategory::ShortTimeEmergency => "Short-time emergency (180-200%)",
            OverloadCategory::Critical => "Critical (>200%)",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Map a load ratio to its loading band. Negative ratios cannot occur on a
/// valid store and fall in [`OverloadCategory::None`].
pub fn classify_ratio(ratio: f64) -> Result<OverloadCategory, MetricError> {
    if !ratio.is_finite() {
        return Err(MetricError::NonFinite);
    }
    Ok(if ratio <= 1.0 {
        OverloadCategory::None
    } else if ratio <= 1.5 {
        OverloadCategory::NormalCyclic
    } else if ratio <= 1.8 {
        OverloadCategory::LongTimeEmergency
    } else if ratio <= 2.0 {
        OverloadCategory::ShortTimeEmergency
    } else {
        OverloadCategory::Critical
    })
}

/// Minute counts per loading band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CategoryMinutes([u64; 5]);

impl CategoryMinutes {
    pub fn get(&self, c: OverloadCategory) -> u64 {
        self.0[c.index()]
    }

    pub fn add(&mut self, c: OverloadCategory, minutes: u64) {
        self.0[c.index()] += minutes;
    }

    /// Minutes in the four overload bands.
    pub fn overloaded(&self) -> u64 {
        self.0[1..].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (OverloadCategory, u64)> + '_ {
        OverloadCategory::ALL.into_iter().map(|c| (c, self.get(c)))
    }
}

impl Serialize for CategoryMinutes {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(5))?;
        for (c, m) in self.iter() {
            map.serialize_entry(c.as_str(), &m)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for CategoryMinutes {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let map = std::collections::BTreeMap::<OverloadCategory, u64>::deserialize(d)?;
        let mut out = CategoryMinutes::default();
        for (c, m) in map {
            out.add(c, m);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverloadSegment {
    pub start: DateTime<Utc>,
    /// Exclusive.
    pub end: DateTime<Utc>,
    pub peak_ratio: f64,
    pub minutes_per_category: CategoryMinutes,
}

impl OverloadSegment {
    pub fn minutes(&self) -> u64 {
        self.minutes_per_category.overloaded()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverloadAnalysis {
    pub segments: Vec<OverloadSegment>,
    pub overloaded_minutes: u64,
    pub duration_hours: f64,
    pub first_overload: Option<DateTime<Utc>>,
    pub class_minutes: CategoryMinutes,
    /// Share of overloaded minutes in the critical band; `None` without overload.
    pub critical_share: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissatisfactionEvent {
    pub agent_id: String,
    pub departure_timestamp: DateTime<Utc>,
    pub soc_at_departure: f64,
    pub soc_target: f64,
    pub deficit: f64,
}

/// Σ over agents of baseload + ev_load for every minute.
pub fn total_load_series(store: &ScenarioStore) -> &[f64] {
    store.total_load()
}

/// Mean over peak of a load series.
pub fn load_factor(series: &[f64]) -> Result<f64, MetricError> {
    if series.is_empty() {
        return Err(MetricError::EmptySeries);
    }
    let peak = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if peak <= 0.0 {
        return Err(MetricError::ZeroPeak);
    }
    let mean = crate::sum::sum(series.iter().copied()) / series.len() as f64;
    Ok(mean / peak)
}

/// System peak over the sum of individual agent peaks (baseload + EV).
pub fn coincidence_factor(store: &ScenarioStore) -> Result<f64, MetricError> {
    let mut individual = NeumaierSum::new();
    for (b, e) in store.baseload().columns().zip(store.ev_load().columns()) {
        let peak = b.iter().zip(e).map(|(b, e)| b + e).fold(f64::NEG_INFINITY, f64::max);
        if peak <= 0.0 {
            return Err(MetricError::ZeroPeak);
        }
        individual.add(peak);
    }
    let system_peak = store.total_load().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(system_peak / individual.total())
}

pub fn overload_analysis(store: &ScenarioStore) -> OverloadAnalysis {
    let index = store.time_index();
    let capacity = &store.system().transformer_capacity;
    let mut class_minutes = CategoryMinutes::default();
    let mut segments = Vec::new();
    let mut current: Option<(usize, f64, CategoryMinutes)> = None;

    for (t, (&load, &cap)) in store.total_load().iter().zip(capacity).enumerate() {
        let ratio = load / cap;
        let category = classify_ratio(ratio).expect("store values are finite");
        class_minutes.add(category, 1);
        if category == OverloadCategory::None {
            if let Some((start, peak, minutes)) = current.take() {
                segments.push(OverloadSegment { start: index.at(start), end: index.at(t), peak_ratio: peak, minutes_per_category: minutes });
            }
            continue;
        }
        let (_, peak, minutes) = current.get_or_insert((t, ratio, CategoryMinutes::default()));
        *peak = peak.max(ratio);
        minutes.add(category, 1);
    }
    if let Some((start, peak, minutes)) = current {
        segments.push(OverloadSegment { start: index.at(start), end: index.end(), peak_ratio: peak, minutes_per_category: minutes });
    }

    let overloaded_minutes = class_minutes.overloaded();
    OverloadAnalysis {
        first_overload: segments.first().map(|s| s.start),
        segments,
        overloaded_minutes,
        duration_hours: overloaded_minutes as f64 / 60.0,
        class_minutes,
        critical_share: (overloaded_minutes > 0)
            .then(|| class_minutes.get(OverloadCategory::Critical) as f64 / overloaded_minutes as f64),
    }
}

/// One event per departure whose SoC is below the agent's target by more
/// than `epsilon` percent points.
pub fn detect_dissatisfaction(store: &ScenarioStore, epsilon: f64) -> Vec<DissatisfactionEvent> {
    store
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::Departure)
        .filter_map(|e| {
            let a = store.agent_index(&e.agent_id).expect("events reference known agents");
            let target = store.agents()[a].soc_target_pct;
            (e.soc_pct < target - epsilon).then(|| DissatisfactionEvent {
                agent_id: e.agent_id.clone(),
                departure_timestamp: e.timestamp,
                soc_at_departure: e.soc_pct,
                soc_target: target,
                deficit: target - e.soc_pct,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargingAverages {
    /// DKK per kWh of EV charging energy.
    pub avg_charging_cost: f64,
    /// kg CO₂ per kWh of EV charging energy.
    pub avg_co2: f64,
    pub charging_energy_kwh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostCo2Revenue {
    pub charging: Result<ChargingAverages, MetricError>,
    /// DKK over all consumption, baseload included.
    pub dso_tariff_revenue: f64,
}

pub fn cost_co2_revenue(store: &ScenarioStore) -> CostCo2Revenue {
    let sys = store.system();
    let mut energy = NeumaierSum::new();
    let mut cost = NeumaierSum::new();
    let mut co2 = NeumaierSum::new();
    let mut revenue = NeumaierSum::new();
    for t in 0..store.time_index().count() {
        let e = store.ev_total()[t] * STEP_HOURS;
        energy.add(e);
        cost.add(e * (sys.spot_price[t] + sys.dso_tariff[t]));
        co2.add(e * sys.co2_intensity[t]);
        revenue.add(store.total_load()[t] * STEP_HOURS * sys.dso_tariff[t]);
    }
    let energy = energy.total();
    let charging = if energy > 0.0 {
        Ok(ChargingAverages {
            avg_charging_cost: cost.total() / energy,
            avg_co2: co2.total() / energy,
            charging_energy_kwh: energy,
        })
    } else {
        Err(MetricError::NoChargingEnergy)
    };
    CostCo2Revenue { charging, dso_tariff_revenue: revenue.total() }
}

/// A KPI value or the reason it is undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kpi<T> {
    Value(T),
    Undefined(UndefinedReason),
}

impl<T: Copy> Kpi<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            Kpi::Value(v) => Some(*v),
            Kpi::Undefined(_) => None,
        }
    }

    pub fn reason(&self) -> Option<UndefinedReason> {
        match self {
            Kpi::Value(_) => None,
            Kpi::Undefined(r) => Some(*r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndefinedReason {
    ZeroPeak,
    NoChargingEnergy,
    NoOverload,
}

impl UndefinedReason {
    pub fn message(self) -> &'static str {
        match self {
            UndefinedReason::ZeroPeak => "peak load is zero",
            UndefinedReason::NoChargingEnergy => "no EV charging energy in scenario",
            UndefinedReason::NoOverload => "transformer never overloaded",
        }
    }
}

impl fmt::Display for UndefinedReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

fn kpi_from<T>(r: Result<T, MetricError>) -> Kpi<T> {
    match r {
        Ok(v) => Kpi::Value(v),
        Err(MetricError::NoChargingEnergy) => Kpi::Undefined(UndefinedReason::NoChargingEnergy),
        Err(_) => Kpi::Undefined(UndefinedReason::ZeroPeak),
    }
}

/// Headline KPIs of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiReport {
    pub schema_version: u32,
    pub scenario_id: String,
    pub timezone: Tz,
    pub scenario_start: DateTime<Utc>,
    pub overload_duration_hours: f64,
    pub first_overload: Kpi<DateTime<Utc>>,
    pub load_factor: Kpi<f64>,
    pub coincidence_factor: Kpi<f64>,
    pub dissatisfaction_count: u64,
    pub avg_charging_cost: Kpi<f64>,
    pub avg_co2: Kpi<f64>,
    pub dso_tariff_revenue: f64,
    pub overload_class_minutes: CategoryMinutes,
    pub critical_share: Kpi<f64>,
}

pub fn kpi_report(store: &ScenarioStore) -> KpiReport {
    let overload = overload_analysis(store);
    let economics = cost_co2_revenue(store);
    KpiReport {
        schema_version: KPI_SCHEMA_VERSION,
        scenario_id: store.scenario_id().to_string(),
        timezone: store.timezone(),
        scenario_start: store.time_index().start(),
        overload_duration_hours: overload.duration_hours,
        first_overload: overload.first_overload.map_or(Kpi::Undefined(UndefinedReason::NoOverload), Kpi::Value),
        load_factor: kpi_from(load_factor(store.total_load())),
        coincidence_factor: kpi_from(coincidence_factor(store)),
        dissatisfaction_count: detect_dissatisfaction(store, DEFAULT_DISSATISFACTION_EPSILON).len() as u64,
        avg_charging_cost: kpi_from(economics.charging.map(|c| c.avg_charging_cost)),
        avg_co2: kpi_from(economics.charging.map(|c| c.avg_co2)),
        dso_tariff_revenue: economics.dso_tariff_revenue,
        overload_class_minutes: overload.class_minutes,
        critical_share: overload.critical_share.map_or(Kpi::Undefined(UndefinedReason::NoOverload), Kpi::Value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::fixtures::{event, Builder};
    use proptest::prelude::*;

    #[test]
    fn total_load_hand_summed() {
        let s = Builder::new(vec![vec![1.0, 1.0], vec![2.0, 2.0]], vec![vec![0.0, 3.0], vec![0.0, 0.0]]).build();
        assert_eq!(total_load_series(&s), &[3.0, 6.0]);
        let single = Builder::new(vec![vec![0.4, 1.3, 2.2]], vec![vec![0.0; 3]]).build();
        assert_eq!(total_load_series(&single), &[0.4, 1.3, 2.2]);
    }

    #[test]
    fn load_factor_examples() {
        assert!((load_factor(&[2.0, 4.0, 6.0]).unwrap() - 2.0 / 3.0).abs() < 1e-9);
        assert_eq!(load_factor(&[5.0, 5.0, 5.0]).unwrap(), 1.0);
        assert_eq!(load_factor(&[0.0, 0.0]), Err(MetricError::ZeroPeak));
        assert_eq!(load_factor(&[]), Err(MetricError::EmptySeries));
    }

    #[test]
    fn coincidence_factor_examples() {
        let s = Builder::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], vec![vec![0.0; 2]; 2]).build();
        assert_eq!(coincidence_factor(&s).unwrap(), 0.5);
        let s = Builder::new(vec![vec![2.0, 1.0], vec![1.0, 2.0]], vec![vec![0.0; 2]; 2]).build();
        assert_eq!(coincidence_factor(&s).unwrap(), 0.75);
        let s = Builder::new(vec![vec![2.0, 1.0]], vec![vec![0.5, 0.0]]).build();
        assert_eq!(coincidence_factor(&s).unwrap(), 1.0);
        let s = Builder::new(vec![vec![2.0, 1.0], vec![0.0, 0.0]], vec![vec![0.0; 2]; 2]).build();
        assert_eq!(coincidence_factor(&s), Err(MetricError::ZeroPeak));
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_ratio(1.20), Ok(OverloadCategory::NormalCyclic));
        assert_eq!(classify_ratio(0.95), Ok(OverloadCategory::None));
        assert_eq!(classify_ratio(2.10), Ok(OverloadCategory::Critical));
        assert_eq!(classify_ratio(1.50), Ok(OverloadCategory::NormalCyclic));
        assert_eq!(classify_ratio(1.0), Ok(OverloadCategory::None));
        assert_eq!(classify_ratio(1.8), Ok(OverloadCategory::LongTimeEmergency));
        assert_eq!(classify_ratio(2.0), Ok(OverloadCategory::ShortTimeEmergency));
        assert_eq!(classify_ratio(f64::NAN), Err(MetricError::NonFinite));
        assert_eq!(classify_ratio(f64::INFINITY), Err(MetricError::NonFinite));
    }

    #[test]
    fn overload_five_minute_example() {
        let s = Builder {
            capacity: Some(vec![100.0; 5]),
            ..Builder::new(vec![vec![90.0, 110.0, 160.0, 130.0, 95.0]], vec![vec![0.0; 5]])
        }
        .build();
        let o = overload_analysis(&s);
        assert_eq!(o.segments.len(), 1);
        assert_eq!(o.segments[0].minutes(), 3);
        assert_eq!(o.segments[0].start, s.time_index().at(1));
        assert_eq!(o.segments[0].end, s.time_index().at(4));
        assert_eq!(o.segments[0].peak_ratio, 1.6);
        assert!((o.duration_hours - 0.05).abs() < 1e-15);
        assert_eq!(o.first_overload, Some(s.time_index().at(1)));
        assert_eq!(o.class_minutes.get(OverloadCategory::NormalCyclic), 2);
        assert_eq!(o.class_minutes.get(OverloadCategory::LongTimeEmergency), 1);
        assert_eq!(o.class_minutes.get(OverloadCategory::None), 2);
        assert_eq!(o.critical_share, Some(0.0));
    }

    #[test]
    fn no_overload() {
        let s = Builder::new(vec![vec![10.0, 20.0, 99.0]], vec![vec![0.0, 1.0, 1.0]]).build();
        let o = overload_analysis(&s);
        assert!(o.segments.is_empty());
        assert_eq!(o.duration_hours, 0.0);
        assert_eq!(o.first_overload, None);
        assert_eq!(o.critical_share, None);
    }

    #[test]
    fn trailing_segment_is_closed_at_index_end() {
        let s = Builder::new(vec![vec![50.0, 250.0, 250.0]], vec![vec![0.0; 3]]).build();
        let o = overload_analysis(&s);
        assert_eq!(o.segments[0].end, s.time_index().end());
        assert_eq!(o.critical_share, Some(1.0));
    }

    #[test]
    fn dissatisfaction_examples() {
        let mut b = Builder::new(vec![vec![1.0; 10]], vec![vec![0.0; 10]]);
        b.events = vec![
            event("A0", "2025-01-01T00:01:00+01:00", EventKind::Departure, 62.0, None),
            event("A0", "2025-01-01T00:03:00+01:00", EventKind::Arrival, 55.0, Some(10.0)),
            event("A0", "2025-01-01T00:05:00+01:00", EventKind::Departure, 90.0, None),
            event("A0", "2025-01-01T00:07:00+01:00", EventKind::Arrival, 80.0, Some(10.0)),
            event("A0", "2025-01-01T00:08:00+01:00", EventKind::Departure, 89.6, None),
        ];
        let s = b.build();
        let events = detect_dissatisfaction(&s, 0.5);
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].deficit, 28.0);
        assert_eq!(events[0].soc_target, 90.0);
        assert_eq!(detect_dissatisfaction(&s, 0.0).len(), 2);
    }

    #[test]
    fn cost_example_two_minutes() {
        let s = Builder {
            spot: Some(vec![1.0, 3.0]),
            tariff: Some(vec![0.0, 0.0]),
            ..Builder::new(vec![vec![0.0, 0.0]], vec![vec![120.0, 120.0]])
        }
        .build();
        let c = cost_co2_revenue(&s).charging.unwrap();
        assert!((c.avg_charging_cost - 2.0).abs() < 1e-12);
        assert!((c.charging_energy_kwh - 4.0).abs() < 1e-12);
        assert!((c.avg_co2 - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_charging_energy() {
        let s = Builder {
            tariff: Some(vec![0.5, 0.25, 1.0]),
            ..Builder::new(vec![vec![60.0, 120.0, 30.0]], vec![vec![0.0; 3]])
        }
        .build();
        let c = cost_co2_revenue(&s);
        assert_eq!(c.charging, Err(MetricError::NoChargingEnergy));
        // 1 kWh × 0.5 + 2 kWh × 0.25 + 0.5 kWh × 1.0
        assert!((c.dso_tariff_revenue - 1.5).abs() < 1e-12);
        let r = kpi_report(&s);
        assert_eq!(r.avg_charging_cost, Kpi::Undefined(UndefinedReason::NoChargingEnergy));
        assert_eq!(r.avg_co2, Kpi::Undefined(UndefinedReason::NoChargingEnergy));
        assert_eq!(r.dissatisfaction_count, 0);
    }

    #[test]
    fn report_identity_duration_equals_class_minutes() {
        let s = Builder::new(vec![vec![90.0, 110.0, 160.0, 230.0, 190.0, 40.0]], vec![vec![0.0; 6]]).build();
        let r = kpi_report(&s);
        assert_eq!(r.overload_duration_hours * 60.0, r.overload_class_minutes.overloaded() as f64);
        assert_eq!(r.overload_class_minutes.total(), 6);
    }

    fn store_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>, f64)> {
        (1usize..4, 1usize..40).prop_flat_map(|(agents, steps)| {
            (
                prop::collection::vec(prop::collection::vec(0.01f64..50.0, steps), agents),
                prop::collection::vec(prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..30.0], steps), agents),
                1.0f64..150.0,
            )
        })
    }

    proptest! {
        #[test]
        fn classification_is_monotone(a in 0.0f64..5.0, b in 0.0f64..5.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(classify_ratio(lo).unwrap() <= classify_ratio(hi).unwrap());
        }

        #[test]
        fn partition_and_factor_bounds((base, ev, cap) in store_strategy()) {
            let n = base[0].len();
            let s = Builder { capacity: Some(vec![cap; n]), ..Builder::new(base, ev) }.build();
            let o = overload_analysis(&s);
            prop_assert_eq!(o.class_minutes.total(), n as u64);
            let seg_minutes: u64 = o.segments.iter().map(OverloadSegment::minutes).sum();
            prop_assert_eq!(seg_minutes, o.overloaded_minutes);
            for w in o.segments.windows(2) {
                prop_assert!(w[0].end < w[1].start);
            }
            let lf = load_factor(s.total_load()).unwrap();
            let cf = coincidence_factor(&s).unwrap();
            prop_assert!(lf > 0.0 && lf <= 1.0 + 1e-12);
            prop_assert!(cf > 0.0 && cf <= 1.0 + 1e-12);
        }

        #[test]
        fn scale_covariance((base, ev, cap) in store_strategy(), k in prop_oneof![Just(2.0), Just(0.5), Just(4.0), Just(0.25)]) {
            // Powers of two keep the scaling exact in binary floating point.
            let n = base[0].len();
            let scaled = |m: &Vec<Vec<f64>>| m.iter().map(|c| c.iter().map(|v| v * k).collect()).collect::<Vec<Vec<f64>>>();
            let s1 = Builder { capacity: Some(vec![cap; n]), ..Builder::new(base.clone(), ev.clone()) }.build();
            let s2 = Builder { capacity: Some(vec![cap * k; n]), ..Builder::new(scaled(&base), scaled(&ev)) }.build();
            let (o1, o2) = (overload_analysis(&s1), overload_analysis(&s2));
            prop_assert_eq!(o1.class_minutes, o2.class_minutes);
            prop_assert_eq!(o1.first_overload, o2.first_overload);
            prop_assert!((load_factor(s1.total_load()).unwrap() - load_factor(s2.total_load()).unwrap()).abs() < 1e-12);
            prop_assert!((coincidence_factor(&s1).unwrap() - coincidence_factor(&s2).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn constant_price_gives_exact_average(ev in prop::collection::vec(0.0f64..22.0, 2..50), p in 0.01f64..5.0) {
            prop_assume!(ev.iter().any(|v| *v > 0.0));
            let n = ev.len();
            let s = Builder {
                spot: Some(vec![p; n]),
                tariff: Some(vec![0.0; n]),
                ..Builder::new(vec![vec![0.5; n]], vec![ev])
            }.build();
            let c = cost_co2_revenue(&s).charging.unwrap();
            prop_assert!((c.avg_charging_cost - p).abs() <= p * 1e-15 * 4.0);
        }
    }
}
