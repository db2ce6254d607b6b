//! Brute-force KPI recomputation straight from the CSV text of a scenario.
//!
//! Deliberately naive: line-by-line loops, plain `f64` accumulation and
//! string splitting, no code shared with the crate under test.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Lines};
use std::path::Path;

use serde_json::{json, Value};

const EPSILON: f64 = 0.5;

fn manifest_entry(manifest: &str, key: &str) -> String {
    for line in manifest.lines() {
        let Some((k, v)) = line.split_once('=') else { continue };
        if k.trim() == key {
            return v.trim().trim_matches('"').to_string();
        }
    }
    panic!("manifest has no {key}");
}

fn lines(dir: &Path, name: &str) -> Lines<BufReader<File>> {
    let file = File::open(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    let mut lines = BufReader::with_capacity(1 << 20, file).lines();
    lines.next().expect("header row").unwrap();
    lines
}

fn cells(line: &str) -> (String, Vec<f64>) {
    let mut parts = line.split(',');
    let ts = parts.next().unwrap().to_string();
    (ts, parts.map(|c| c.parse::<f64>().unwrap()).collect())
}

/// Departures below target minus epsilon, as `(agent_id, timestamp)`.
pub fn dissatisfied_departures(manifest_path: &Path) -> Vec<(String, String)> {
    let dir = manifest_path.parent().unwrap();
    let manifest = std::fs::read_to_string(manifest_path).unwrap();
    let agents_text = std::fs::read_to_string(dir.join(manifest_entry(&manifest, "agents"))).unwrap();
    let mut header = agents_text.lines().next().unwrap().split(',');
    let target_col = header.position(|h| h == "soc_target_pct").unwrap();
    let mut target = HashMap::new();
    for line in agents_text.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        target.insert(fields[0].to_string(), fields[target_col].parse::<f64>().unwrap());
    }
    let events_text = std::fs::read_to_string(dir.join(manifest_entry(&manifest, "events"))).unwrap();
    let mut out = Vec::new();
    for line in events_text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f[2] == "departure" && f[3].parse::<f64>().unwrap() < target[f[0]] - EPSILON {
            out.push((f[0].to_string(), f[1].to_string()));
        }
    }
    out
}

/// Every KPI of the scenario behind `manifest_path`, shaped like the `kpis`
/// object of the report plus a top-level `critical_share`.
pub fn kpis(manifest_path: &Path) -> Value {
    let dir = manifest_path.parent().unwrap();
    let manifest = std::fs::read_to_string(manifest_path).unwrap();
    let base = lines(dir, &manifest_entry(&manifest, "baseload"));
    let mut ev = lines(dir, &manifest_entry(&manifest, "ev_load"));
    let mut system = lines(dir, &manifest_entry(&manifest, "system"));

    let dt = 1.0 / 60.0;
    let mut steps = 0u64;
    let mut sum_total = 0.0;
    let mut peak_total = 0.0f64;
    let mut agent_peaks: Vec<f64> = Vec::new();
    let mut minutes = [0u64; 5];
    let mut first_overload: Option<String> = None;
    let mut energy = 0.0;
    let mut cost = 0.0;
    let mut co2 = 0.0;
    let mut revenue = 0.0;

    for b_line in base {
        let (ts, b) = cells(&b_line.unwrap());
        let (ts_e, e) = cells(&ev.next().unwrap().unwrap());
        let (ts_s, s) = cells(&system.next().unwrap().unwrap());
        assert!(ts == ts_e && ts == ts_s, "rows out of step at {ts}");
        let (spot, tariff, intensity, capacity) = (s[0], s[1], s[2], s[3]);
        if agent_peaks.is_empty() {
            agent_peaks = vec![0.0; b.len()];
        }

        let mut total = 0.0;
        for a in 0..b.len() {
            let load = b[a] + e[a];
            total += load;
            if load > agent_peaks[a] {
                agent_peaks[a] = load;
            }
            energy += e[a] * dt;
            cost += e[a] * dt * (spot + tariff);
            co2 += e[a] * dt * intensity;
            revenue += load * dt * tariff;
        }
        sum_total += total;
        if total > peak_total {
            peak_total = total;
        }

        let ratio = total / capacity;
        let class = if ratio > 2.0 {
            4
        } else if ratio > 1.8 {
            3
        } else if ratio > 1.5 {
            2
        } else if ratio > 1.0 {
            1
        } else {
            0
        };
        minutes[class] += 1;
        if class > 0 && first_overload.is_none() {
            first_overload = Some(ts);
        }
        steps += 1;
    }
    assert!(ev.next().is_none() && system.next().is_none(), "files differ in length");

    let overloaded: u64 = minutes[1..].iter().sum();
    let agent_peak_sum: f64 = agent_peaks.iter().sum();
    let defined = |ok: bool, v: f64| if ok { json!(v) } else { Value::Null };
    json!({
        "overload_duration_hours": overloaded as f64 / 60.0,
        "first_overload": first_overload,
        "load_factor": defined(peak_total > 0.0, sum_total / steps as f64 / peak_total),
        "coincidence_factor": defined(agent_peaks.iter().all(|p| *p > 0.0), peak_total / agent_peak_sum),
        "dissatisfaction_count": dissatisfied_departures(manifest_path).len(),
        "avg_charging_cost": defined(energy > 0.0, cost / energy),
        "avg_co2": defined(energy > 0.0, co2 / energy),
        "dso_tariff_revenue": revenue,
        "overload_class_minutes": {
            "none": minutes[0],
            "normal_cyclic": minutes[1],
            "long_time_emergency": minutes[2],
            "short_time_emergency": minutes[3],
            "critical": minutes[4],
        },
        "critical_share": defined(overloaded > 0, minutes[4] as f64 / overloaded as f64),
    })
}

/// The oracle-shaped view of a report JSON document.
pub fn report_view(report: &Value) -> Value {
    let mut v = report["kpis"].clone();
    v["critical_share"] = report["critical_share"].clone();
    v
}

/// Differences between two oracle-shaped documents: integers, strings and
/// nulls must match exactly, other numbers to `rel_tol`.
pub fn mismatches(expected: &Value, actual: &Value, rel_tol: f64) -> Vec<String> {
    let mut out = Vec::new();
    walk("", expected, actual, rel_tol, &mut out);
    out
}

fn walk(path: &str, e: &Value, a: &Value, tol: f64, out: &mut Vec<String>) {
    match (e, a) {
        (Value::Object(em), Value::Object(am)) => {
            for (k, ev) in em {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                walk(&p, ev, am.get(k).unwrap_or(&Value::Null), tol, out);
            }
        }
        (Value::Number(en), Value::Number(an)) if en.is_f64() || an.is_f64() => {
            let (x, y) = (en.as_f64().unwrap(), an.as_f64().unwrap());
            let err = (x - y).abs() / x.abs().max(f64::MIN_POSITIVE);
            if !(x == y || err <= tol) {
                out.push(format!("{path}: expected {x}, got {y} (rel {err:.3e})"));
            }
        }
        _ if e == a => {}
        _ => out.push(format!("{path}: expected {e}, got {a}")),
    }
}
