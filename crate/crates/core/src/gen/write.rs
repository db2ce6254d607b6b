//! CSV output with exact fixed-point formatting of the integer-coded columns.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::Duration;

use super::{GenError, Simulation};
use crate::ingest::csv_files::{AGENTS_HEADER, EVENTS_HEADER, SYSTEM_HEADER};
use crate::ingest::ScenarioManifest;
use crate::time::format_timestamp;

const BUFFER: usize = 1 << 20;

/// Append `value / 10^decimals` with trailing zeros trimmed.
pub(crate) fn push_fixed(out: &mut Vec<u8>, value: i64, decimals: u32) {
    if value < 0 {
        out.push(b'-');
    }
    let v = value.unsigned_abs();
    let scale = 10u64.pow(decimals);
    push_uint(out, v / scale);
    let mut frac = v % scale;
    if frac == 0 {
        return;
    }
    let mut digits = decimals as usize;
    while frac.is_multiple_of(10) {
        frac /= 10;
        digits -= 1;
    }
    out.push(b'.');
    let start = out.len();
    out.resize(start + digits, b'0');
    for i in (0..digits).rev() {
        out[start + i] = b'0' + (frac % 10) as u8;
        frac /= 10;
    }
}

fn push_uint(out: &mut Vec<u8>, mut v: u64) {
    let mut buf = [0u8; 20];
    let mut i = buf.len();
    loop {
        i -= 1;
        buf[i] = b'0' + (v % 10) as u8;
        v /= 10;
        if v == 0 {
            break;
        }
    }
    out.extend_from_slice(&buf[i..]);
}

struct Out {
    path: PathBuf,
    w: BufWriter<File>,
    line: Vec<u8>,
}

impl Out {
    fn create(path: PathBuf) -> Result<Self, GenError> {
        let file = File::create(&path).map_err(|source| GenError::Io { path: path.clone(), source })?;
        Ok(Self { path, w: BufWriter::with_capacity(BUFFER, file), line: Vec::with_capacity(4096) })
    }

    fn flush_line(&mut self) -> Result<(), GenError> {
        self.line.push(b'\n');
        let r = self.w.write_all(&self.line);
        self.line.clear();
        r.map_err(|source| GenError::Io { path: self.path.clone(), source })
    }

    fn finish(mut self) -> Result<(), GenError> {
        self.w.flush().map_err(|source| GenError::Io { path: self.path.clone(), source })
    }
}

pub(super) fn write_all(sim: &Simulation, dir: &Path) -> Result<PathBuf, GenError> {
    std::fs::create_dir_all(dir).map_err(|source| GenError::Io { path: dir.to_path_buf(), source })?;
    let manifest = ScenarioManifest::in_dir(sim.scenario_id.clone(), dir, sim.timezone);
    let files = &manifest.files;
    let stamps: Vec<String> =
        (0..sim.n).map(|t| format_timestamp(sim.start + Duration::minutes(t as i64), sim.timezone)).collect();

    let mut out = Out::create(files.agents.clone())?;
    out.line.extend_from_slice(AGENTS_HEADER.join(",").as_bytes());
    out.flush_line()?;
    for a in &sim.agents {
        let row = format!(
            "{},{},{},{},{},{},{}",
            a.agent_id,
            a.latitude,
            a.longitude,
            a.battery_capacity_kwh,
            a.charger_power_kw,
            a.consumption_kwh_per_km,
            a.soc_target_pct
        );
        out.line.extend_from_slice(row.as_bytes());
        out.flush_line()?;
    }
    out.finish()?;

    let mut out = Out::create(files.system.clone())?;
    out.line.extend_from_slice(SYSTEM_HEADER.join(",").as_bytes());
    out.flush_line()?;
    let capacity = sim.capacity_kw.to_string();
    for (t, stamp) in stamps.iter().enumerate() {
        out.line.extend_from_slice(stamp.as_bytes());
        for col in [&sim.system.spot, &sim.system.tariff, &sim.system.co2] {
            out.line.push(b',');
            push_fixed(&mut out.line, col[t], 4);
        }
        out.line.push(b',');
        out.line.extend_from_slice(capacity.as_bytes());
        out.flush_line()?;
    }
    out.finish()?;

    for (path, values, decimals) in [
        (&files.baseload, &sim.baseload, 3),
        (&files.ev_load, &sim.ev, 6),
        (&files.soc, &sim.soc, 6),
    ] {
        let mut out = Out::create(path.clone())?;
        out.line.extend_from_slice(b"timestamp");
        for a in &sim.agents {
            out.line.push(b',');
            out.line.extend_from_slice(a.agent_id.as_bytes());
        }
        out.flush_line()?;
        let columns: Vec<&[u32]> = values.chunks_exact(sim.n).collect();
        for (t, stamp) in stamps.iter().enumerate() {
            out.line.extend_from_slice(stamp.as_bytes());
            for col in &columns {
                out.line.push(b',');
                push_fixed(&mut out.line, i64::from(col[t]), decimals);
            }
            out.flush_line()?;
        }
        out.finish()?;
    }

    let mut out = Out::create(files.events.clone())?;
    out.line.extend_from_slice(EVENTS_HEADER.join(",").as_bytes());
    out.flush_line()?;
    for e in &sim.events {
        out.line.extend_from_slice(sim.agents[e.agent].agent_id.as_bytes());
        out.line.push(b',');
        out.line.extend_from_slice(stamps[e.t].as_bytes());
        out.line.push(b',');
        out.line.extend_from_slice(e.kind.as_str().as_bytes());
        out.line.push(b',');
        push_fixed(&mut out.line, i64::from(e.soc), 6);
        out.line.push(b',');
        if let Some(m) = e.distance {
            push_fixed(&mut out.line, m as i64, 3);
        }
        out.flush_line()?;
    }
    out.finish()?;

    let manifest_path = dir.join("scenario.toml");
    std::fs::write(&manifest_path, manifest.to_text())
        .map_err(|source| GenError::Io { path: manifest_path.clone(), source })?;
    Ok(manifest_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(v: i64, d: u32) -> String {
        let mut out = Vec::new();
        push_fixed(&mut out, v, d);
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn fixed_point_formatting() {
        assert_eq!(fixed(0, 6), "0");
        assert_eq!(fixed(3_700_000, 6), "3.7");
        assert_eq!(fixed(90_000_000, 6), "90");
        assert_eq!(fixed(1_234, 3), "1.234");
        assert_eq!(fixed(1_050, 3), "1.05");
        assert_eq!(fixed(7, 4), "0.0007");
        assert_eq!(fixed(-1_250, 4), "-0.125");
        assert_eq!(fixed(12, 0), "12");
    }

    #[test]
    fn fixed_point_round_trips_through_parse() {
        for v in [1i64, 999_999, 123_456_789, 3_141_593, 100_000_000] {
            let s = fixed(v, 6);
            assert_eq!(s.parse::<f64>().unwrap(), v as f64 / 1e6, "{s}");
        }
    }
}
