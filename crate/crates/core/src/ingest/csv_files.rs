//! Streaming CSV readers for the canonical wide-format file set.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use chrono::{DateTime, Utc};
use csv::{ByteRecord, Reader, ReaderBuilder};

use super::{IngestError, ScenarioManifest};
use crate::store::{energy_checksum, AgentMatrix, AgentMeta, EventKind, EventRecord, ScenarioStore, StoreParts, SystemSeries};
use crate::sum::NeumaierSum;
use crate::time::{parse_timestamp, TimeIndex, STEP_SECONDS};

pub(crate) const AGENTS_HEADER: [&str; 7] = [
    "agent_id",
    "latitude",
    "longitude",
    "battery_capacity_kwh",
    "charger_power_kw",
    "consumption_kwh_per_km",
    "soc_target_pct",
];
pub(crate) const SYSTEM_HEADER: [&str; 5] = [
    "timestamp",
    "spot_price_dkk_per_kwh",
    "dso_tariff_dkk_per_kwh",
    "co2_kg_per_kwh",
    "transformer_capacity_kw",
];
pub(crate) const EVENTS_HEADER: [&str; 5] = ["agent_id", "timestamp", "event", "soc_pct", "trip_distance_km"];

const READ_BUFFER: usize = 1 << 20;

/// Parse and validate a scenario's six CSV files.
///
/// The system file fixes the time grid; the three wide per-agent files are
/// then parsed concurrently straight into preallocated columns, so peak
/// memory stays close to the final store size.
pub fn load_scenario(manifest: &ScenarioManifest) -> Result<ScenarioStore, IngestError> {
    for (role, path) in manifest.files.iter() {
        if !path.is_file() {
            return Err(IngestError::MissingFile { role, path: path.to_path_buf() });
        }
    }
    let agents = read_agents(&manifest.files.agents)?;
    if agents.is_empty() {
        return Err(IngestError::EmptyScenario);
    }
    let (time_index, system) = read_system(&manifest.files.system)?;

    let (baseload, ev_load, soc, events) = std::thread::scope(|s| {
        let base = s.spawn(|| read_wide(&manifest.files.baseload, &agents, &time_index, ValueBounds::NonNegative));
        let ev = s.spawn(|| read_wide(&manifest.files.ev_load, &agents, &time_index, ValueBounds::NonNegative));
        let soc = s.spawn(|| read_wide(&manifest.files.soc, &agents, &time_index, ValueBounds::Percent));
        let events = read_events(&manifest.files.events, &agents, &time_index);
        let join = |h: std::thread::ScopedJoinHandle<'_, _>| h.join().expect("parser thread panicked");
        (join(base), join(ev), join(soc), events)
    });
    let (baseload, base_sums) = baseload?;
    let (ev_load, ev_sums) = ev_load?;
    let (soc, _) = soc?;
    let events = events?;
    let parsed_checksum = energy_checksum(&base_sums, &ev_sums);

    let store = ScenarioStore::from_parts(StoreParts {
        manifest: manifest.clone(),
        time_index,
        agents,
        baseload,
        ev_load,
        soc,
        system,
        events,
    })?;
    if store.energy_checksum_kwh().to_bits() != parsed_checksum.to_bits() {
        return Err(IngestError::ChecksumMismatch { parsed: parsed_checksum, stored: store.energy_checksum_kwh() });
    }
    Ok(store)
}

fn label(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn open(path: &Path) -> Result<Reader<BufReader<File>>, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    Ok(ReaderBuilder::new()
        .has_headers(true)
        .buffer_capacity(READ_BUFFER)
        .from_reader(BufReader::with_capacity(READ_BUFFER, file)))
}

fn csv_error(file: &str, path: &Path, e: csv::Error) -> IngestError {
    if !e.is_io_error() {
        return IngestError::schema(file, e.to_string());
    }
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::io(path, io),
        _ => unreachable!("checked is_io_error"),
    }
}

fn check_header(file: &str, found: &ByteRecord, expected: &[&str]) -> Result<(), IngestError> {
    let found: Vec<String> = found.iter().map(|f| String::from_utf8_lossy(f).into_owned()).collect();
    if found.len() != expected.len() || found.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(IngestError::schema(
            file,
            format!("header {:?} does not match expected {:?}", found, expected),
        ));
    }
    Ok(())
}

fn line_of(record: &ByteRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn cell_str<'a>(file: &str, record: &'a ByteRecord, idx: usize, column: &str) -> Result<&'a str, IngestError> {
    let raw = record.get(idx).unwrap_or_default();
    std::str::from_utf8(raw).map_err(|_| IngestError::MalformedCell {
        file: file.into(),
        line: line_of(record),
        column: column.into(),
        value: String::from_utf8_lossy(raw).into_owned(),
    })
}

/// Parse a finite number; empty cells and NaN/inf text are errors.
fn parse_number(file: &str, record: &ByteRecord, idx: usize, column: &str) -> Result<f64, IngestError> {
    let text = cell_str(file, record, idx, column)?;
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IngestError::MalformedCell {
            file: file.into(),
            line: line_of(record),
            column: column.into(),
            value: text.into(),
        }),
    }
}

fn parse_time(file: &str, record: &ByteRecord, idx: usize) -> Result<DateTime<Utc>, IngestError> {
    let text = cell_str(file, record, idx, "timestamp")?;
    parse_timestamp(text).ok_or_else(|| IngestError::MalformedCell {
        file: file.into(),
        line: line_of(record),
        column: "timestamp".into(),
        value: text.into(),
    })
}

fn range_error(file: &str, record: &ByteRecord, column: &str, value: f64, expected: &'static str) -> IngestError {
    IngestError::Range { file: file.into(), line: line_of(record), column: column.into(), value, expected }
}

fn read_agents(path: &Path) -> Result<Vec<AgentMeta>, IngestError> {
    let file = label(path);
    let mut rdr = open(path)?;
    let header = rdr.byte_headers().map_err(|e| csv_error(&file, path, e))?.clone();
    check_header(&file, &header, &AGENTS_HEADER)?;
    let mut agents = Vec::new();
    let mut record = ByteRecord::new();
    while rdr.read_byte_record(&mut record).map_err(|e| csv_error(&file, path, e))? {
        let num = |i: usize| parse_number(&file, &record, i, AGENTS_HEADER[i]);
        let agent = AgentMeta {
            agent_id: cell_str(&file, &record, 0, "agent_id")?.to_string(),
            latitude: num(1)?,
            longitude: num(2)?,
            battery_capacity_kwh: num(3)?,
            charger_power_kw: num(4)?,
            consumption_kwh_per_km: num(5)?,
            soc_target_pct: num(6)?,
        };
        if agent.agent_id.is_empty() {
            return Err(IngestError::schema(&file, format!("line {}: empty agent_id", line_of(&record))));
        }
        let checks: [(usize, f64, bool, &'static str); 6] = [
            (1, agent.latitude, (-90.0..=90.0).contains(&agent.latitude), "-90 <= latitude <= 90"),
            (2, agent.longitude, (-180.0..=180.0).contains(&agent.longitude), "-180 <= longitude <= 180"),
            (3, agent.battery_capacity_kwh, agent.battery_capacity_kwh > 0.0, "value > 0"),
            (4, agent.charger_power_kw, agent.charger_power_kw > 0.0, "value > 0"),
            (5, agent.consumption_kwh_per_km, agent.consumption_kwh_per_km > 0.0, "value > 0"),
            (6, agent.soc_target_pct, (0.0..=100.0).contains(&agent.soc_target_pct), "0 <= value <= 100"),
        ];
        for (i, v, ok, expected) in checks {
            if !ok {
                return Err(range_error(&file, &record, AGENTS_HEADER[i], v, expected));
            }
        }
        agents.push(agent);
    }
    Ok(agents)
}

fn grid_error(file: &str, record: &ByteRecord, message: String) -> IngestError {
    IngestError::TimeGrid { file: file.into(), line: Some(line_of(record)), message }
}

fn read_system(path: &Path) -> Result<(TimeIndex, SystemSeries), IngestError> {
    let file = label(path);
    let size_hint = std::fs::metadata(path).map(|m| m.len() as usize / 40).unwrap_or(0);
    let mut rdr = open(path)?;
    let header = rdr.byte_headers().map_err(|e| csv_error(&file, path, e))?.clone();
    check_header(&file, &header, &SYSTEM_HEADER)?;
    let mut system = SystemSeries::with_len(size_hint);
    let mut start: Option<DateTime<Utc>> = None;
    let mut prev: Option<DateTime<Utc>> = None;
    let mut record = ByteRecord::new();
    while rdr.read_byte_record(&mut record).map_err(|e| csv_error(&file, path, e))? {
        let t = parse_time(&file, &record, 0)?;
        match prev {
            None => {
                if !crate::time::is_whole_minute(t) {
                    return Err(grid_error(&file, &record, format!("first timestamp {} is not on a whole minute", record_text(&record, 0))));
                }
                start = Some(t);
            }
            Some(p) => {
                let step = (t - p).num_seconds();
                if step != STEP_SECONDS || t.timestamp_subsec_nanos() != 0 {
                    let what = match step {
                        0 => "duplicate timestamp",
                        s if s < 0 => "timestamps out of order",
                        s if s > STEP_SECONDS && s % STEP_SECONDS == 0 => "gap in time grid",
                        _ => "step is not 60 s",
                    };
                    return Err(grid_error(&file, &record, format!("{what} at {}", record_text(&record, 0))));
                }
            }
        }
        prev = Some(t);
        let spot = parse_number(&file, &record, 1, SYSTEM_HEADER[1])?;
        let tariff = parse_number(&file, &record, 2, SYSTEM_HEADER[2])?;
        let co2 = parse_number(&file, &record, 3, SYSTEM_HEADER[3])?;
        let capacity = parse_number(&file, &record, 4, SYSTEM_HEADER[4])?;
        if capacity <= 0.0 {
            return Err(range_error(&file, &record, SYSTEM_HEADER[4], capacity, "value > 0"));
        }
        system.spot_price.push(spot);
        system.dso_tariff.push(tariff);
        system.co2_intensity.push(co2);
        system.transformer_capacity.push(capacity);
    }
    let start = start.ok_or_else(|| IngestError::TimeGrid { file: file.clone(), line: None, message: "no rows".into() })?;
    let index = TimeIndex::new(start, system.spot_price.len()).expect("validated start and count");
    Ok((index, system))
}

fn record_text(record: &ByteRecord, idx: usize) -> String {
    String::from_utf8_lossy(record.get(idx).unwrap_or_default()).into_owned()
}

#[derive(Clone, Copy)]
enum ValueBounds {
    NonNegative,
    Percent,
}

/// Read `timestamp,<agent_1>,...,<agent_N>` into an agent-major matrix and
/// return the per-agent compensated column sums alongside.
fn read_wide(
    path: &Path,
    agents: &[AgentMeta],
    index: &TimeIndex,
    bounds: ValueBounds,
) -> Result<(AgentMatrix, Vec<f64>), IngestError> {
    let file = label(path);
    let mut rdr = open(path)?;
    let header = rdr.byte_headers().map_err(|e| csv_error(&file, path, e))?.clone();
    let mut expected = Vec::with_capacity(agents.len() + 1);
    expected.push("timestamp");
    expected.extend(agents.iter().map(|a| a.agent_id.as_str()));
    check_header(&file, &header, &expected)?;

    let steps = index.count();
    let n_agents = agents.len();
    let mut matrix = AgentMatrix::zeros(n_agents, steps);
    let values = matrix.as_mut_slice();
    let mut sums = vec![NeumaierSum::new(); n_agents];
    let mut record = ByteRecord::new();
    let mut row = 0usize;
    while rdr.read_byte_record(&mut record).map_err(|e| csv_error(&file, path, e))? {
        if row >= steps {
            return Err(grid_error(&file, &record, format!("more rows than the {steps} system timestamps")));
        }
        let t = parse_time(&file, &record, 0)?;
        if t != index.at(row) {
            return Err(grid_error(
                &file,
                &record,
                format!("timestamp {} does not match system.csv row {}", record_text(&record, 0), row + 2),
            ));
        }
        for a in 0..n_agents {
            let column = &agents[a].agent_id;
            let v = parse_number(&file, &record, a + 1, column)?;
            let ok = match bounds {
                ValueBounds::NonNegative => v >= 0.0,
                ValueBounds::Percent => (0.0..=100.0).contains(&v),
            };
            if !ok {
                let expected = match bounds {
                    ValueBounds::NonNegative => "value >= 0",
                    ValueBounds::Percent => "0 <= value <= 100",
                };
                return Err(range_error(&file, &record, column, v, expected));
            }
            values[a * steps + row] = v;
            sums[a].add(v);
        }
        row += 1;
    }
    if row != steps {
        return Err(IngestError::TimeGrid {
            file,
            line: None,
            message: format!("{row} rows, expected {steps} to match system.csv"),
        });
    }
    Ok((matrix, sums.iter().map(NeumaierSum::total).collect()))
}

fn read_events(path: &Path, agents: &[AgentMeta], index: &TimeIndex) -> Result<Vec<EventRecord>, IngestError> {
    let file = label(path);
    let mut rdr = open(path)?;
    let header = rdr.byte_headers().map_err(|e| csv_error(&file, path, e))?.clone();
    check_header(&file, &header, &EVENTS_HEADER)?;
    let known: std::collections::HashSet<&str> = agents.iter().map(|a| a.agent_id.as_str()).collect();
    let mut events = Vec::new();
    let mut record = ByteRecord::new();
    while rdr.read_byte_record(&mut record).map_err(|e| csv_error(&file, path, e))? {
        let agent_id = cell_str(&file, &record, 0, "agent_id")?;
        if !known.contains(agent_id) {
            return Err(IngestError::schema(&file, format!("line {}: unknown agent_id {agent_id:?}", line_of(&record))));
        }
        let timestamp = parse_time(&file, &record, 1)?;
        if index.index_of(timestamp).is_none() {
            let why = if crate::time::is_whole_minute(timestamp) { "outside the time index" } else { "not on the 60 s grid" };
            return Err(grid_error(&file, &record, format!("event timestamp {} is {why}", record_text(&record, 1))));
        }
        let kind_text = cell_str(&file, &record, 2, "event")?;
        let kind = EventKind::parse(kind_text).ok_or_else(|| IngestError::MalformedCell {
            file: file.clone(),
            line: line_of(&record),
            column: "event".into(),
            value: kind_text.into(),
        })?;
        let soc_pct = parse_number(&file, &record, 3, "soc_pct")?;
        if !(0.0..=100.0).contains(&soc_pct) {
            return Err(range_error(&file, &record, "soc_pct", soc_pct, "0 <= value <= 100"));
        }
        let distance_empty = record.get(4).is_none_or(<[u8]>::is_empty);
        let trip_distance_km = match (kind, distance_empty) {
            (EventKind::Departure, true) => None,
            (EventKind::Departure, false) => {
                return Err(IngestError::schema(
                    &file,
                    format!("line {}: trip_distance_km must be empty on departure rows", line_of(&record)),
                ))
            }
            (EventKind::Arrival, _) => {
                let d = parse_number(&file, &record, 4, "trip_distance_km")?;
                if d < 0.0 {
                    return Err(range_error(&file, &record, "trip_distance_km", d, "value >= 0"));
                }
                Some(d)
            }
        };
        events.push(EventRecord { agent_id: agent_id.to_string(), timestamp, kind, soc_pct, trip_distance_km });
    }
    Ok(events)
}
