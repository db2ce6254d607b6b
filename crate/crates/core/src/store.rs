//! The immutable, columnar in-memory representation of one scenario.

use std::collections::HashMap;
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

use crate::ingest::{IngestError, ScenarioManifest};
use crate::sum::{sum_slice, LaneSum, NeumaierSum};
use crate::time::{TimeIndex, STEP_HOURS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMeta {
    pub agent_id: String,
    pub latitude: f64,
    pub longitude: f64,
    pub battery_capacity_kwh: f64,
    pub charger_power_kw: f64,
    pub consumption_kwh_per_km: f64,
    pub soc_target_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Departure,
    Arrival,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Departure => "departure",
            EventKind::Arrival => "arrival",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text {
            "departure" => Some(EventKind::Departure),
            "arrival" => Some(EventKind::Arrival),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub agent_id: String,
    pub timestamp: DateTime<Utc>,
    pub kind: EventKind,
    pub soc_pct: f64,
    /// Present on arrivals only.
    pub trip_distance_km: Option<f64>,
}

/// Per-agent columns of one variable, stored agent-major so each agent's
/// series is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentMatrix {
    steps: usize,
    values: Vec<f64>,
}

impl AgentMatrix {
    /// `values.len()` must be a multiple of `steps`.
    pub fn new(steps: usize, values: Vec<f64>) -> Self {
        assert!(steps > 0 && values.len().is_multiple_of(steps), "matrix shape mismatch");
        Self { steps, values }
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Self {
        let steps = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == steps), "ragged columns");
        let values = columns.concat();
        Self::new(steps.max(1), values)
    }

    pub fn zeros(n_agents: usize, steps: usize) -> Self {
        Self::new(steps, zeroed_f64(n_agents * steps))
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn n_agents(&self) -> usize {
        self.values.len() / self.steps
    }

    pub fn agent(&self, a: usize) -> &[f64] {
        &self.values[a * self.steps..(a + 1) * self.steps]
    }

    pub fn agent_mut(&mut self, a: usize) -> &mut [f64] {
        &mut self.values[a * self.steps..(a + 1) * self.steps]
    }

    pub fn columns(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.steps)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn heap_bytes(&self) -> usize {
        self.values.len() * std::mem::size_of::<f64>()
    }
}

/// Zero-filled buffer. Large buffers are backed by transparent huge pages
/// where the platform offers them.
pub(crate) fn zeroed_f64(n: usize) -> Vec<f64> {
    let mut v = vec![0.0f64; n];
    #[cfg(target_os = "linux")]
    {
        const HUGE: usize = 2 << 20;
        let start = (v.as_mut_ptr() as usize).next_multiple_of(HUGE);
        let end = (v.as_mut_ptr() as usize + n * 8) & !(HUGE - 1);
        if end > start {
            // Advisory only; failure leaves ordinary pages.
            unsafe { libc::madvise(start as *mut libc::c_void, end - start, libc::MADV_HUGEPAGE) };
        }
    }
    v
}

/// Scenario-wide series, one value per minute.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SystemSeries {
    pub spot_price: Vec<f64>,
    pub dso_tariff: Vec<f64>,
    pub co2_intensity: Vec<f64>,
    pub transformer_capacity: Vec<f64>,
}

impl SystemSeries {
    pub fn with_len(n: usize) -> Self {
        Self {
            spot_price: Vec::with_capacity(n),
            dso_tariff: Vec::with_capacity(n),
            co2_intensity: Vec::with_capacity(n),
            transformer_capacity: Vec::with_capacity(n),
        }
    }

    fn columns(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("spot_price_dkk_per_kwh", &self.spot_price),
            ("dso_tariff_dkk_per_kwh", &self.dso_tariff),
            ("co2_kg_per_kwh", &self.co2_intensity),
            ("transformer_capacity_kw", &self.transformer_capacity),
        ]
    }
}

/// Everything needed to build a [`ScenarioStore`]; validated by
/// [`ScenarioStore::from_parts`].
#[derive(Debug, Clone)]
pub struct StoreParts {
    pub manifest: ScenarioManifest,
    pub time_index: TimeIndex,
    pub agents: Vec<AgentMeta>,
    pub baseload: AgentMatrix,
    pub ev_load: AgentMatrix,
    pub soc: AgentMatrix,
    pub system: SystemSeries,
    pub events: Vec<EventRecord>,
}

/// Aggregates over the agent set, computed once at construction.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Derived {
    pub(crate) total_load: Vec<f64>,
    pub(crate) ev_total: Vec<f64>,
    pub(crate) baseload_total: Vec<f64>,
    pub(crate) charging_count: Vec<u32>,
}

#[derive(Debug)]
pub struct ScenarioStore {
    manifest: ScenarioManifest,
    time_index: TimeIndex,
    agents: Vec<AgentMeta>,
    baseload: AgentMatrix,
    ev_load: AgentMatrix,
    soc: AgentMatrix,
    system: SystemSeries,
    events: Vec<EventRecord>,
    agent_lookup: HashMap<String, usize>,
    events_by_agent: Vec<Vec<usize>>,
    derived: Derived,
    energy_checksum_kwh: f64,
    content_hash: OnceLock<u64>,
}

impl PartialEq for ScenarioStore {
    fn eq(&self, other: &Self) -> bool {
        self.manifest.scenario_id == other.manifest.scenario_id
            && self.manifest.timezone == other.manifest.timezone
            && self.time_index == other.time_index
            && self.agents == other.agents
            && self.baseload == other.baseload
            && self.ev_load == other.ev_load
            && self.soc == other.soc
            && self.system == other.system
            && self.events == other.events
    }
}

/// `(sum of baseload, sum of ev_load)` per agent in time order, the inputs of
/// the energy checksum.
pub fn agent_load_sums(baseload: &[f64], ev_load: &[f64]) -> (f64, f64) {
    (sum_slice(baseload), sum_slice(ev_load))
}

/// Total simulated energy in kWh from per-agent column sums.
pub fn energy_checksum(base_sums: &[f64], ev_sums: &[f64]) -> f64 {
    let mut total = NeumaierSum::new();
    for (b, e) in base_sums.iter().zip(ev_sums) {
        total.add(*b);
        total.add(*e);
    }
    total.total() * STEP_HOURS
}

impl ScenarioStore {
    /// Validate every store invariant and build the derived aggregates.
    pub fn from_parts(parts: StoreParts) -> Result<Self, IngestError> {
        Self::assemble(parts, None)
    }

    /// Build from columns whose aggregates were computed by an earlier
    /// [`from_parts`](Self::from_parts) and stored with integrity protection.
    /// Column values are not re-screened.
    pub(crate) fn from_verified_parts(
        parts: StoreParts,
        derived: Derived,
        energy_checksum_kwh: f64,
    ) -> Result<Self, IngestError> {
        Self::assemble(parts, Some((derived, energy_checksum_kwh)))
    }

    fn assemble(parts: StoreParts, cached: Option<(Derived, f64)>) -> Result<Self, IngestError> {
        let StoreParts { manifest, time_index, agents, baseload, ev_load, soc, system, mut events } = parts;
        let n = time_index.count();
        if agents.is_empty() {
            return Err(IngestError::EmptyScenario);
        }

        let mut agent_lookup = HashMap::with_capacity(agents.len());
        for (i, a) in agents.iter().enumerate() {
            validate_agent(a)?;
            if agent_lookup.insert(a.agent_id.clone(), i).is_some() {
                return Err(IngestError::schema("agents.csv", format!("duplicate agent_id {:?}", a.agent_id)));
            }
        }

        for (name, m) in [("baseload.csv", &baseload), ("ev_load.csv", &ev_load), ("soc.csv", &soc)] {
            if m.steps() != n || m.n_agents() != agents.len() {
                return Err(IngestError::schema(
                    name,
                    format!(
                        "expected {} agents x {} steps, found {} x {}",
                        agents.len(),
                        n,
                        m.n_agents(),
                        m.steps()
                    ),
                ));
            }
        }
        for (name, col) in system.columns() {
            if col.len() != n {
                return Err(IngestError::schema(
                    "system.csv",
                    format!("column {name} has {} values, expected {n}", col.len()),
                ));
            }
        }

        let (derived, energy_checksum_kwh) = match cached {
            Some((d, checksum)) => {
                let lens = [d.total_load.len(), d.ev_total.len(), d.baseload_total.len(), d.charging_count.len()];
                if lens.iter().any(|l| *l != n) {
                    return Err(IngestError::CorruptCache("aggregate length mismatch".into()));
                }
                (d, checksum)
            }
            None => Self::scan_checked(&agents, &baseload, &ev_load, &soc, n)?,
        };
        for (name, col) in system.columns() {
            let positive = name == "transformer_capacity_kw";
            if let Some(t) = col.iter().position(|v| !v.is_finite() || (positive && *v <= 0.0)) {
                return Err(IngestError::Range {
                    file: "system.csv".into(),
                    line: t as u64 + 2,
                    column: name.into(),
                    value: col[t],
                    expected: if positive { "value > 0" } else { "finite value" },
                });
            }
        }

        events.sort_by(|x, y| {
            x.timestamp
                .cmp(&y.timestamp)
                .then_with(|| agent_lookup.get(&x.agent_id).cmp(&agent_lookup.get(&y.agent_id)))
        });
        let events_by_agent = index_events(&events, &agent_lookup, &time_index)?;

        Ok(Self {
            manifest,
            time_index,
            agents,
            baseload,
            ev_load,
            soc,
            system,
            events,
            agent_lookup,
            events_by_agent,
            derived,
            energy_checksum_kwh,
            content_hash: OnceLock::new(),
        })
    }

    fn scan_checked(
        agents: &[AgentMeta],
        baseload: &AgentMatrix,
        ev_load: &AgentMatrix,
        soc: &AgentMatrix,
        n: usize,
    ) -> Result<(Derived, f64), IngestError> {
        let scan = scan_columns(baseload, ev_load, soc, n);
        if !scan.in_range {
            for (file, m, max) in [
                ("baseload.csv", baseload, f64::INFINITY),
                ("ev_load.csv", ev_load, f64::INFINITY),
                ("soc.csv", soc, 100.0),
            ] {
                for (a, col) in m.columns().enumerate() {
                    if let Some(t) = first_out_of_range(col, max) {
                        return Err(IngestError::Range {
                            file: file.into(),
                            line: t as u64 + 2,
                            column: agents[a].agent_id.clone(),
                            value: col[t],
                            expected: if max.is_finite() { "0 <= value <= 100" } else { "value >= 0" },
                        });
                    }
                }
            }
        }
        let base_sums: Vec<f64> = scan.base_sums.iter().map(LaneSum::total).collect();
        let ev_sums: Vec<f64> = scan.ev_sums.iter().map(LaneSum::total).collect();
        Ok((scan.derived, energy_checksum(&base_sums, &ev_sums)))
    }

    pub fn manifest(&self) -> &ScenarioManifest {
        &self.manifest
    }

    pub fn scenario_id(&self) -> &str {
        &self.manifest.scenario_id
    }

    pub fn timezone(&self) -> Tz {
        self.manifest.timezone
    }

    pub fn time_index(&self) -> &TimeIndex {
        &self.time_index
    }

    pub fn agents(&self) -> &[AgentMeta] {
        &self.agents
    }

    pub fn agent_index(&self, agent_id: &str) -> Option<usize> {
        self.agent_lookup.get(agent_id).copied()
    }

    pub fn baseload(&self) -> &AgentMatrix {
        &self.baseload
    }

    pub fn ev_load(&self) -> &AgentMatrix {
        &self.ev_load
    }

    pub fn soc(&self) -> &AgentMatrix {
        &self.soc
    }

    pub fn system(&self) -> &SystemSeries {
        &self.system
    }

    /// All events, ordered by timestamp then agent order.
    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    /// Events of one agent in timestamp order.
    pub fn agent_events(&self, a: usize) -> impl Iterator<Item = &EventRecord> + '_ {
        self.events_by_agent[a].iter().map(move |&i| &self.events[i])
    }

    /// Σ over agents of baseload + ev_load, per minute.
    pub fn total_load(&self) -> &[f64] {
        &self.derived.total_load
    }

    pub fn ev_total(&self) -> &[f64] {
        &self.derived.ev_total
    }

    pub fn baseload_total(&self) -> &[f64] {
        &self.derived.baseload_total
    }

    /// Number of agents with ev_load > 0, per minute.
    pub fn charging_count(&self) -> &[u32] {
        &self.derived.charging_count
    }

    /// Total simulated energy (kWh) recorded at construction.
    pub fn energy_checksum_kwh(&self) -> f64 {
        self.energy_checksum_kwh
    }

    /// Recompute the energy checksum from the stored columns.
    pub fn recompute_energy_checksum(&self) -> f64 {
        let (b, e): (Vec<f64>, Vec<f64>) =
            self.baseload.columns().zip(self.ev_load.columns()).map(|(b, e)| agent_load_sums(b, e)).unzip();
        energy_checksum(&b, &e)
    }

    /// Approximate heap footprint of the columnar data.
    pub fn heap_bytes(&self) -> usize {
        let f = std::mem::size_of::<f64>();
        self.baseload.heap_bytes()
            + self.ev_load.heap_bytes()
            + self.soc.heap_bytes()
            + 4 * self.time_index.count() * f
            + 3 * self.derived.total_load.len() * f
            + self.derived.charging_count.len() * std::mem::size_of::<u32>()
            + self.events.len() * (std::mem::size_of::<EventRecord>() + 16)
    }

    pub(crate) fn derived(&self) -> &Derived {
        &self.derived
    }

    /// Stable 64-bit digest of the scenario content.
    pub fn content_hash(&self) -> u64 {
        *self.content_hash.get_or_init(|| {
            let mut h = xxhash_rust::xxh3::Xxh3::new();
            h.update(self.manifest.scenario_id.as_bytes());
            h.update(self.manifest.timezone.name().as_bytes());
            h.update(&self.time_index.start().timestamp().to_le_bytes());
            h.update(&(self.time_index.count() as u64).to_le_bytes());
            h.update(&serde_json::to_vec(&self.agents).expect("agents serialize"));
            h.update(&serde_json::to_vec(&self.events).expect("events serialize"));
            for col in [
                &self.system.spot_price,
                &self.system.dso_tariff,
                &self.system.co2_intensity,
                &self.system.transformer_capacity,
            ] {
                h.update(bytemuck::cast_slice(col));
            }
            for m in [&self.baseload, &self.ev_load, &self.soc] {
                h.update(bytemuck::cast_slice(m.as_slice()));
            }
            h.digest()
        })
    }

    pub fn into_parts(self) -> StoreParts {
        StoreParts {
            manifest: self.manifest,
            time_index: self.time_index,
            agents: self.agents,
            baseload: self.baseload,
            ev_load: self.ev_load,
            soc: self.soc,
            system: self.system,
            events: self.events,
        }
    }
}

fn validate_agent(a: &AgentMeta) -> Result<(), IngestError> {
    let bad = |column: &str, value: f64, expected: &'static str| IngestError::Range {
        file: "agents.csv".into(),
        line: 0,
        column: format!("{}:{column}", a.agent_id),
        value,
        expected,
    };
    if a.agent_id.is_empty() {
        return Err(IngestError::schema("agents.csv", "empty agent_id"));
    }
    if !(-90.0..=90.0).contains(&a.latitude) {
        return Err(bad("latitude", a.latitude, "-90 <= latitude <= 90"));
    }
    if !(-180.0..=180.0).contains(&a.longitude) {
        return Err(bad("longitude", a.longitude, "-180 <= longitude <= 180"));
    }
    for (name, v) in [
        ("battery_capacity_kwh", a.battery_capacity_kwh),
        ("charger_power_kw", a.charger_power_kw),
        ("consumption_kwh_per_km", a.consumption_kwh_per_km),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(bad(name, v, "value > 0"));
        }
    }
    if !(0.0..=100.0).contains(&a.soc_target_pct) {
        return Err(bad("soc_target_pct", a.soc_target_pct, "0 <= value <= 100"));
    }
    Ok(())
}

fn index_events(
    events: &[EventRecord],
    lookup: &HashMap<String, usize>,
    time_index: &TimeIndex,
) -> Result<Vec<Vec<usize>>, IngestError> {
    let mut by_agent: Vec<Vec<usize>> = vec![Vec::new(); lookup.len()];
    for (i, ev) in events.iter().enumerate() {
        let a = *lookup
            .get(&ev.agent_id)
            .ok_or_else(|| IngestError::schema("events.csv", format!("unknown agent_id {:?}", ev.agent_id)))?;
        if time_index.index_of(ev.timestamp).is_none() {
            return Err(IngestError::TimeGrid {
                file: "events.csv".into(),
                line: None,
                message: format!("event at {} for {} is off the time grid", ev.timestamp.to_rfc3339(), ev.agent_id),
            });
        }
        if !(ev.soc_pct.is_finite() && (0.0..=100.0).contains(&ev.soc_pct)) {
            return Err(IngestError::Range {
                file: "events.csv".into(),
                line: 0,
                column: "soc_pct".into(),
                value: ev.soc_pct,
                expected: "0 <= value <= 100",
            });
        }
        match (ev.kind, ev.trip_distance_km) {
            (EventKind::Departure, Some(_)) => {
                return Err(IngestError::schema("events.csv", "trip_distance_km must be empty on departure rows"))
            }
            (EventKind::Arrival, None) => {
                return Err(IngestError::schema("events.csv", "trip_distance_km is required on arrival rows"))
            }
            (EventKind::Arrival, Some(d)) if !(d.is_finite() && d >= 0.0) => {
                return Err(IngestError::Range {
                    file: "events.csv".into(),
                    line: 0,
                    column: "trip_distance_km".into(),
                    value: d,
                    expected: "value >= 0",
                })
            }
            _ => {}
        }
        if let Some(&prev) = by_agent[a].last() {
            let p: &EventRecord = &events[prev];
            if p.timestamp == ev.timestamp {
                return Err(IngestError::EventOrder {
                    agent_id: ev.agent_id.clone(),
                    message: format!("two events at {}", ev.timestamp.to_rfc3339()),
                });
            }
            if p.kind == ev.kind {
                return Err(IngestError::EventOrder {
                    agent_id: ev.agent_id.clone(),
                    message: format!(
                        "consecutive {} events at {} and {}",
                        ev.kind.as_str(),
                        p.timestamp.to_rfc3339(),
                        ev.timestamp.to_rfc3339()
                    ),
                });
            }
        }
        by_agent[a].push(i);
    }
    Ok(by_agent)
}

/// Time steps per block of the construction sweep; a multiple of four so the
/// per-agent lane sums match [`agent_load_sums`].
const SCAN_BLOCK: usize = 4096;

struct ColumnScan {
    derived: Derived,
    base_sums: Vec<LaneSum>,
    ev_sums: Vec<LaneSum>,
    /// `false` when some value may be out of range.
    in_range: bool,
}

/// `true` if every value is a finite number in `[0, max]`. Bit patterns of
/// non-negative doubles sort like the values; `-0.0` reads as out of range
/// and is left to the precise check.
fn all_in_range(values: &[f64], max_bits: u64) -> bool {
    values.iter().fold(0u64, |m, v| m.max(v.to_bits())) <= max_bits
}

/// One cache-blocked sweep: range screening, per-agent energy sums and the
/// cross-agent totals.
fn scan_columns(baseload: &AgentMatrix, ev_load: &AgentMatrix, soc: &AgentMatrix, n: usize) -> ColumnScan {
    let n_agents = baseload.n_agents();
    let mut total_load = vec![0.0; n];
    let mut ev_total = vec![0.0; n];
    let mut baseload_total = vec![0.0; n];
    let mut charging_count = vec![0u32; n];
    let mut base_sums = vec![LaneSum::new(); n_agents];
    let mut ev_sums = vec![LaneSum::new(); n_agents];
    let load_max = f64::MAX.to_bits();
    let soc_max = 100.0f64.to_bits();
    let mut in_range = true;
    for start in (0..n).step_by(SCAN_BLOCK) {
        let end = (start + SCAN_BLOCK).min(n);
        let total = &mut total_load[start..end];
        let evs = &mut ev_total[start..end];
        let bases = &mut baseload_total[start..end];
        let counts = &mut charging_count[start..end];
        for a in 0..n_agents {
            let b = &baseload.agent(a)[start..end];
            let e = &ev_load.agent(a)[start..end];
            in_range &= all_in_range(b, load_max) & all_in_range(e, load_max);
            in_range &= all_in_range(&soc.agent(a)[start..end], soc_max);
            base_sums[a].add_block(b);
            ev_sums[a].add_block(e);
            for i in 0..total.len() {
                total[i] += b[i] + e[i];
                evs[i] += e[i];
                bases[i] += b[i];
                counts[i] += u32::from(e[i] > 0.0);
            }
        }
    }
    ColumnScan {
        derived: Derived { total_load, ev_total, baseload_total, charging_count },
        base_sums,
        ev_sums,
        in_range,
    }
}

/// First index whose value is not finite or outside `[0, max]`.
fn first_out_of_range(col: &[f64], max: f64) -> Option<usize> {
    const CHUNK: usize = 1024;
    col.chunks(CHUNK).enumerate().find_map(|(c, chunk)| {
        let ok = chunk.iter().fold(true, |ok, &v| ok & (v >= 0.0) & (v <= max) & (v != f64::INFINITY));
        if ok {
            None
        } else {
            chunk.iter().position(|v| !(v.is_finite() && *v >= 0.0 && *v <= max)).map(|i| c * CHUNK + i)
        }
    })
}

#[cfg(test)]
pub(crate) mod fixtures {
    //! Small hand-built stores shared by unit tests.
    use super::*;
    use crate::time::parse_timestamp;

    pub fn agent(id: &str) -> AgentMeta {
        AgentMeta {
            agent_id: id.into(),
            latitude: 55.54,
            longitude: 9.77,
            battery_capacity_kwh: 60.0,
            charger_power_kw: 11.0,
            consumption_kwh_per_km: 0.2,
            soc_target_pct: 90.0,
        }
    }

    pub struct Builder {
        pub start: &'static str,
        pub tz: &'static str,
        pub baseload: Vec<Vec<f64>>,
        pub ev_load: Vec<Vec<f64>>,
        pub soc: Option<Vec<Vec<f64>>>,
        pub capacity: Option<Vec<f64>>,
        pub spot: Option<Vec<f64>>,
        pub tariff: Option<Vec<f64>>,
        pub co2: Option<Vec<f64>>,
        pub events: Vec<EventRecord>,
        pub agents: Option<Vec<AgentMeta>>,
    }

    impl Builder {
        pub fn new(baseload: Vec<Vec<f64>>, ev_load: Vec<Vec<f64>>) -> Self {
            Self {
                start: "2025-01-01T00:00:00+01:00",
                tz: "Europe/Copenhagen",
                baseload,
                ev_load,
                soc: None,
                capacity: None,
                spot: None,
                tariff: None,
                co2: None,
                events: Vec::new(),
                agents: None,
            }
        }

        pub fn build(self) -> ScenarioStore {
            self.try_build().expect("fixture store is valid")
        }

        pub fn try_build(self) -> Result<ScenarioStore, IngestError> {
            let n = self.baseload[0].len();
            let n_agents = self.baseload.len();
            let agents = self
                .agents
                .unwrap_or_else(|| (0..n_agents).map(|i| agent(&format!("A{i}"))).collect());
            let soc = self.soc.unwrap_or_else(|| vec![vec![50.0; n]; n_agents]);
            let manifest = ScenarioManifest::in_memory("test", crate::time::parse_timezone(self.tz).unwrap());
            ScenarioStore::from_parts(StoreParts {
                manifest,
                time_index: TimeIndex::new(parse_timestamp(self.start).unwrap(), n).unwrap(),
                agents,
                baseload: AgentMatrix::from_columns(self.baseload),
                ev_load: AgentMatrix::from_columns(self.ev_load),
                soc: AgentMatrix::from_columns(soc),
                system: SystemSeries {
                    spot_price: self.spot.unwrap_or_else(|| vec![1.0; n]),
                    dso_tariff: self.tariff.unwrap_or_else(|| vec![0.0; n]),
                    co2_intensity: self.co2.unwrap_or_else(|| vec![0.2; n]),
                    transformer_capacity: self.capacity.unwrap_or_else(|| vec![100.0; n]),
                },
                events: self.events,
            })
        }
    }

    pub fn event(agent: &str, ts: &str, kind: EventKind, soc: f64, dist: Option<f64>) -> EventRecord {
        EventRecord {
            agent_id: agent.into(),
            timestamp: parse_timestamp(ts).unwrap(),
            kind,
            soc_pct: soc,
            trip_distance_km: dist,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn derived_totals() {
        let s = Builder::new(vec![vec![1.0, 1.0], vec![2.0, 2.0]], vec![vec![0.0, 3.0], vec![0.0, 0.0]]).build();
        assert_eq!(s.total_load(), &[3.0, 6.0]);
        assert_eq!(s.charging_count(), &[0, 1]);
        assert_eq!(s.energy_checksum_kwh(), s.recompute_energy_checksum());
        assert!((s.energy_checksum_kwh() - 9.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_consecutive_departures() {
        let mut b = Builder::new(vec![vec![1.0; 10]], vec![vec![0.0; 10]]);
        b.events = vec![
            event("A0", "2025-01-01T00:01:00+01:00", EventKind::Departure, 80.0, None),
            event("A0", "2025-01-01T00:05:00+01:00", EventKind::Departure, 80.0, None),
        ];
        assert!(matches!(b.try_build(), Err(IngestError::EventOrder { .. })));
    }

    #[test]
    fn leading_arrival_and_trailing_departure_are_fine() {
        let mut b = Builder::new(vec![vec![1.0; 10]], vec![vec![0.0; 10]]);
        b.events = vec![
            event("A0", "2025-01-01T00:01:00+01:00", EventKind::Arrival, 70.0, Some(3.0)),
            event("A0", "2025-01-01T00:05:00+01:00", EventKind::Departure, 80.0, None),
        ];
        let s = b.build();
        assert_eq!(s.agent_events(0).count(), 2);
    }

    #[test]
    fn value_equality_ignores_lazy_hash() {
        let a = Builder::new(vec![vec![1.0, 2.0]], vec![vec![0.0, 0.0]]).build();
        let b = Builder::new(vec![vec![1.0, 2.0]], vec![vec![0.0, 0.0]]).build();
        let _ = a.content_hash();
        assert_eq!(a, b);
        assert_eq!(a.content_hash(), b.content_hash());
    }
}
