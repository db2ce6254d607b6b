//! Stable JSON and plain-text renderings of KPI reports and diffs.

use std::collections::BTreeMap;

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::compare::{DiffStatus, KpiDiff};
use crate::metrics::{CategoryMinutes, Kpi, KpiReport, OverloadCategory};
use crate::time::format_timestamp;

#[derive(Serialize)]
struct KpiValues {
    overload_duration_hours: f64,
    first_overload: Option<String>,
    load_factor: Option<f64>,
    coincidence_factor: Option<f64>,
    dissatisfaction_count: u64,
    avg_charging_cost: Option<f64>,
    avg_co2: Option<f64>,
    dso_tariff_revenue: f64,
    overload_class_minutes: CategoryMinutes,
}

#[derive(Serialize)]
struct DiffEntry {
    test: Option<f64>,
    #[serde(rename = "ref")]
    reference: Option<f64>,
    pct_diff: Option<f64>,
    status: DiffStatus,
}

/// Map that serializes in insertion order.
struct Ordered<V>(Vec<(String, V)>);

impl<V: Serialize> Serialize for Ordered<V> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum DiffNode {
    Leaf(DiffEntry),
    Group(Ordered<DiffEntry>),
}

#[derive(Serialize)]
struct Comparison {
    reference_id: String,
    kpis: Ordered<DiffNode>,
    critical_share: Option<DiffEntry>,
}

#[derive(Serialize)]
struct KpiDocument {
    schema_version: u32,
    scenario_id: String,
    timezone: String,
    kpis: KpiValues,
    critical_share: Option<f64>,
    reasons: BTreeMap<&'static str, &'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
}

fn comparison(reference_id: &str, diffs: &[KpiDiff]) -> Comparison {
    let mut kpis: Vec<(String, DiffNode)> = Vec::new();
    let mut classes = Vec::new();
    let mut critical_share = None;
    for d in diffs {
        let entry = DiffEntry { test: d.test, reference: d.reference, pct_diff: d.pct_diff, status: d.status };
        if let Some(cat) = d.kpi.strip_prefix("overload_class_minutes.") {
            classes.push((cat.to_string(), entry));
        } else if d.kpi == "critical_share" {
            critical_share = Some(entry);
        } else {
            kpis.push((d.kpi.clone(), DiffNode::Leaf(entry)));
        }
    }
    kpis.push(("overload_class_minutes".into(), DiffNode::Group(Ordered(classes))));
    Comparison { reference_id: reference_id.to_string(), kpis: Ordered(kpis), critical_share }
}

/// JSON document for a report, with a comparison block when `diff` is given.
/// Undefined KPIs are `null` with an entry in `reasons`.
pub fn kpi_json(report: &KpiReport, diff: Option<(&str, &[KpiDiff])>) -> serde_json::Value {
    let mut reasons = BTreeMap::new();
    let mut note = |name: &'static str, reason: Option<crate::metrics::UndefinedReason>| {
        if let Some(r) = reason {
            reasons.insert(name, r.message());
        }
    };
    note("first_overload", report.first_overload.reason());
    note("load_factor", report.load_factor.reason());
    note("coincidence_factor", report.coincidence_factor.reason());
    note("avg_charging_cost", report.avg_charging_cost.reason());
    note("avg_co2", report.avg_co2.reason());
    note("critical_share", report.critical_share.reason());

    let doc = KpiDocument {
        schema_version: report.schema_version,
        scenario_id: report.scenario_id.clone(),
        timezone: report.timezone.name().to_string(),
        kpis: KpiValues {
            overload_duration_hours: report.overload_duration_hours,
            first_overload: report.first_overload.value().map(|t| format_timestamp(t, report.timezone)),
            load_factor: report.load_factor.value(),
            coincidence_factor: report.coincidence_factor.value(),
            dissatisfaction_count: report.dissatisfaction_count,
            avg_charging_cost: report.avg_charging_cost.value(),
            avg_co2: report.avg_co2.value(),
            dso_tariff_revenue: report.dso_tariff_revenue,
            overload_class_minutes: report.overload_class_minutes,
        },
        critical_share: report.critical_share.value(),
        reasons,
        comparison: diff.map(|(id, d)| comparison(id, d)),
    };
    serde_json::to_value(doc).expect("report serializes")
}

/// Pretty JSON with a trailing newline; the byte format used by the CLI.
pub fn kpi_json_text(report: &KpiReport, diff: Option<(&str, &[KpiDiff])>) -> String {
    let mut s = serde_json::to_string_pretty(&kpi_json(report, diff)).expect("json");
    s.push('\n');
    s
}

fn fmt_kpi(v: Kpi<f64>, digits: usize, unit: &str) -> String {
    match v {
        Kpi::Value(x) => format!("{x:.digits$}{unit}"),
        Kpi::Undefined(r) => format!("undefined ({r})"),
    }
}

fn fmt_diff(d: Option<&KpiDiff>) -> String {
    match d {
        None => String::new(),
        Some(d) => match (d.status, d.pct_diff) {
            (DiffStatus::Defined, Some(p)) => format!("{:+.2}%", if p == 0.0 { 0.0 } else { p }),
            (DiffStatus::ZeroReference, _) => "n/a (zero reference)".into(),
            _ => "n/a".into(),
        },
    }
}

/// Plain-text KPI cards, one per line, with the diff vs the reference on the
/// right when given.
pub fn kpi_text(report: &KpiReport, diff: Option<(&str, &[KpiDiff])>) -> String {
    let find = |name: &str| diff.and_then(|(_, ds)| ds.iter().find(|d| d.kpi == name));
    let tz = report.timezone;
    let mut out = String::new();
    out.push_str(&format!("KPI summary: {} ({})\n", report.scenario_id, tz.name()));
    if let Some((id, _)) = diff {
        out.push_str(&format!("Reference:   {id}\n"));
    }
    out.push('\n');
    let first = match report.first_overload {
        Kpi::Value(t) => format_timestamp(t, tz),
        Kpi::Undefined(r) => format!("none ({r})"),
    };
    let cards: [(&str, &str, String); 8] = [
        ("Transformer overload duration", "overload_duration_hours", format!("{:.2} h", report.overload_duration_hours)),
        ("First overload date", "first_overload", first),
        ("Load factor", "load_factor", fmt_kpi(report.load_factor, 4, "")),
        ("Coincidence factor", "coincidence_factor", fmt_kpi(report.coincidence_factor, 4, "")),
        ("Dissatisfaction events", "dissatisfaction_count", report.dissatisfaction_count.to_string()),
        ("Avg charging cost", "avg_charging_cost", fmt_kpi(report.avg_charging_cost, 4, " DKK/kWh")),
        ("Avg CO2 emissions", "avg_co2", fmt_kpi(report.avg_co2, 4, " kg/kWh")),
        ("DSO tariff revenue", "dso_tariff_revenue", format!("{:.2} DKK", report.dso_tariff_revenue)),
    ];
    for (label, key, value) in cards {
        out.push_str(format!("{label:<34}{value:<34} {}\n", fmt_diff(find(key))).trim_end());
        out.push('\n');
    }
    out.push_str("\nOverload classes (minutes)\n");
    for c in OverloadCategory::ALL {
        let key = format!("overload_class_minutes.{}", c.as_str());
        let line = format!("  {:<32}{:<34} {}", c.label(), report.overload_class_minutes.get(c), fmt_diff(find(&key)));
        out.push_str(line.trim_end());
        out.push('\n');
    }
    let share = match report.critical_share {
        Kpi::Value(x) => format!("{:.2}%", 100.0 * x),
        Kpi::Undefined(r) => format!("undefined ({r})"),
    };
    let line = format!("  {:<32}{:<34} {}", "Critical share of overload", share, fmt_diff(find("critical_share")));
    out.push_str(line.trim_end());
    out.push('\n');
    out
}
