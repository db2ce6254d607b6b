//! Versioned, checksummed columnar cache.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic        8 bytes  "GRIDLENS"
//! version      u32
//! header_len   u64
//! header       JSON (manifest, time index, agents, events, energy checksum)
//! system       4 × count f64   spot, tariff, co2, capacity
//! baseload     agents × count f64, agent-major
//! ev_load      agents × count f64
//! soc          agents × count f64
//! totals       3 × count f64   total load, ev, baseload
//! charging     count u32
//! checksum     u64 xxh3 of every preceding byte
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::Xxh3;

use super::{IngestError, ScenarioFiles, ScenarioManifest};
use crate::store::{AgentMatrix, AgentMeta, Derived, EventRecord, ScenarioStore, StoreParts, SystemSeries};
use crate::time::TimeIndex;

pub const CACHE_MAGIC: [u8; 8] = *b"GRIDLENS";
pub const CACHE_VERSION: u32 = 2;

const IO_BUFFER: usize = 1 << 20;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheHeader {
    pub scenario_id: String,
    pub timezone: String,
    pub root_path: PathBuf,
    pub files: [PathBuf; 6],
    pub start: DateTime<Utc>,
    pub count: usize,
    pub agents: Vec<AgentMeta>,
    pub events: Vec<EventRecord>,
    pub energy_checksum_bits: u64,
}

struct HashingWriter<W> {
    inner: W,
    hasher: Xxh3,
}

impl<W: Write> HashingWriter<W> {
    fn put(&mut self, bytes: &[u8]) -> std::io::Result<()> {
        self.hasher.update(bytes);
        self.inner.write_all(bytes)
    }

    fn put_f64s(&mut self, values: &[f64]) -> std::io::Result<()> {
        if cfg!(target_endian = "little") {
            for chunk in values.chunks(IO_BUFFER / 8) {
                self.put(bytemuck::cast_slice(chunk))?;
            }
            Ok(())
        } else {
            let mut buf = Vec::with_capacity(IO_BUFFER);
            for chunk in values.chunks(IO_BUFFER / 8) {
                buf.clear();
                buf.extend(chunk.iter().flat_map(|v| v.to_le_bytes()));
                self.put(&buf)?;
            }
            Ok(())
        }
    }
}

pub fn write_cache(store: &ScenarioStore, path: &Path) -> Result<(), IngestError> {
    let io = |e| IngestError::io(path, e);
    let m = store.manifest();
    let header = CacheHeader {
        scenario_id: m.scenario_id.clone(),
        timezone: m.timezone.name().to_string(),
        root_path: m.root_path.clone(),
        files: m.files.iter().map(|(_, p)| p.to_path_buf()),
        start: store.time_index().start(),
        count: store.time_index().count(),
        agents: store.agents().to_vec(),
        events: store.events().to_vec(),
        energy_checksum_bits: store.energy_checksum_kwh().to_bits(),
    };
    let header_bytes = serde_json::to_vec(&header).expect("cache header serializes");

    let file = File::create(path).map_err(io)?;
    let mut w = HashingWriter { inner: BufWriter::with_capacity(IO_BUFFER, file), hasher: Xxh3::new() };
    w.put(&CACHE_MAGIC).map_err(io)?;
    w.put(&CACHE_VERSION.to_le_bytes()).map_err(io)?;
    w.put(&(header_bytes.len() as u64).to_le_bytes()).map_err(io)?;
    w.put(&header_bytes).map_err(io)?;
    let sys = store.system();
    for col in [&sys.spot_price, &sys.dso_tariff, &sys.co2_intensity, &sys.transformer_capacity] {
        w.put_f64s(col).map_err(io)?;
    }
    for m in [store.baseload(), store.ev_load(), store.soc()] {
        w.put_f64s(m.as_slice()).map_err(io)?;
    }
    let d = store.derived();
    for col in [&d.total_load, &d.ev_total, &d.baseload_total] {
        w.put_f64s(col).map_err(io)?;
    }
    let counts: Vec<u8> = d.charging_count.iter().flat_map(|c| c.to_le_bytes()).collect();
    w.put(&counts).map_err(io)?;
    let digest = w.hasher.digest();
    w.inner.write_all(&digest.to_le_bytes()).map_err(io)?;
    w.inner.flush().map_err(io)?;
    Ok(())
}

struct HashingReader<R> {
    inner: R,
    hasher: Xxh3,
    path: PathBuf,
}

impl<R: Read> HashingReader<R> {
    fn take(&mut self, buf: &mut [u8]) -> Result<(), IngestError> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => IngestError::CorruptCache("file is truncated".into()),
            _ => IngestError::io(&self.path, e),
        })?;
        self.hasher.update(buf);
        Ok(())
    }

    fn take_f64s(&mut self, n: usize) -> Result<Vec<f64>, IngestError> {
        let mut values = crate::store::zeroed_f64(n);
        for chunk in values.chunks_mut(IO_BUFFER / 8) {
            self.take(bytemuck::cast_slice_mut(chunk))?;
            if cfg!(target_endian = "big") {
                for v in chunk.iter_mut() {
                    *v = f64::from_le_bytes(v.to_ne_bytes());
                }
            }
        }
        Ok(values)
    }
}

fn open_cache(path: &Path) -> Result<(HashingReader<BufReader<File>>, CacheHeader), IngestError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => IngestError::MissingFile { role: "cache", path: path.to_path_buf() },
        _ => IngestError::io(path, e),
    })?;
    let file_len = file.metadata().map_err(|e| IngestError::io(path, e))?.len();
    let mut r = HashingReader {
        inner: BufReader::with_capacity(IO_BUFFER, file),
        hasher: Xxh3::new(),
        path: path.to_path_buf(),
    };
    let mut magic = [0u8; 8];
    r.take(&mut magic)?;
    if magic != CACHE_MAGIC {
        return Err(IngestError::CorruptCache("not a gridlens cache file".into()));
    }
    let mut word = [0u8; 4];
    r.take(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != CACHE_VERSION {
        return Err(IngestError::CacheVersionMismatch { found: version, expected: CACHE_VERSION });
    }
    let mut len = [0u8; 8];
    r.take(&mut len)?;
    let header_len = u64::from_le_bytes(len);
    if header_len > file_len {
        return Err(IngestError::CorruptCache("header length exceeds file size".into()));
    }
    let mut header_bytes = vec![0u8; header_len as usize];
    r.take(&mut header_bytes)?;
    let header: CacheHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| IngestError::CorruptCache(format!("unreadable header: {e}")))?;

    let expected_len = 8 + 4 + 8 + header_len + (8 * (7 + 3 * header.agents.len() as u64) + 4) * header.count as u64 + 8;
    if expected_len != file_len {
        return Err(IngestError::CorruptCache(format!("file is {file_len} bytes, header implies {expected_len}")));
    }
    Ok((r, header))
}

/// Read only the header; cheap regardless of scenario size.
pub fn read_cache_header(path: &Path) -> Result<CacheHeader, IngestError> {
    open_cache(path).map(|(_, h)| h)
}

pub fn read_cache(path: &Path) -> Result<ScenarioStore, IngestError> {
    let (mut r, header) = open_cache(path)?;
    let n = header.count;
    let n_agents = header.agents.len();
    let system = SystemSeries {
        spot_price: r.take_f64s(n)?,
        dso_tariff: r.take_f64s(n)?,
        co2_intensity: r.take_f64s(n)?,
        transformer_capacity: r.take_f64s(n)?,
    };
    let baseload = r.take_f64s(n * n_agents)?;
    let ev_load = r.take_f64s(n * n_agents)?;
    let soc = r.take_f64s(n * n_agents)?;
    let total_load = r.take_f64s(n)?;
    let ev_total = r.take_f64s(n)?;
    let baseload_total = r.take_f64s(n)?;
    let mut counts = vec![0u8; 4 * n];
    r.take(&mut counts)?;
    let charging_count = counts.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect();
    let digest = r.hasher.digest();
    let mut trailer = [0u8; 8];
    r.inner.read_exact(&mut trailer).map_err(|e| IngestError::io(path, e))?;
    if u64::from_le_bytes(trailer) != digest {
        return Err(IngestError::CorruptCache("checksum mismatch".into()));
    }

    let timezone = crate::time::parse_timezone(&header.timezone)
        .ok_or_else(|| IngestError::CorruptCache(format!("unknown timezone {:?}", header.timezone)))?;
    let time_index = TimeIndex::new(header.start, n)
        .ok_or_else(|| IngestError::CorruptCache("invalid time index".into()))?;
    let [agents_p, system_p, baseload_p, ev_load_p, soc_p, events_p] = header.files;
    let manifest = ScenarioManifest {
        scenario_id: header.scenario_id,
        root_path: header.root_path,
        timezone,
        files: ScenarioFiles {
            agents: agents_p,
            system: system_p,
            baseload: baseload_p,
            ev_load: ev_load_p,
            soc: soc_p,
            events: events_p,
        },
    };
    let derived = Derived { total_load, ev_total, baseload_total, charging_count };
    let parts = StoreParts {
        manifest,
        time_index,
        agents: header.agents,
        baseload: AgentMatrix::new(n, baseload),
        ev_load: AgentMatrix::new(n, ev_load),
        soc: AgentMatrix::new(n, soc),
        system,
        events: header.events,
    };
    ScenarioStore::from_verified_parts(parts, derived, f64::from_bits(header.energy_checksum_bits))
}

/// Whether `path` starts with the cache magic.
pub(crate) fn is_cache_file(path: &Path) -> bool {
    let mut magic = [0u8; 8];
    File::open(path).and_then(|mut f| f.read_exact(&mut magic)).is_ok() && magic == CACHE_MAGIC
}
