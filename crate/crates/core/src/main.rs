use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use chrono::NaiveDate;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use gridlens::compare::{diff_kpis, CompareError};
use gridlens::gen::{generate, GenConfig, GenError, DEFAULT_CAPACITY_KW};
use gridlens::ingest::{load_any, write_cache, IngestError, DEFAULT_TIMEZONE};
use gridlens::report::{kpi_json_text, kpi_text};
use gridlens::server::{self, AppState};
use gridlens::time::parse_timezone;
use gridlens::{kpi_report, ScenarioStore};

#[derive(Parser)]
#[command(name = "gridlens", version, about = "Grid-impact analytics for EV home-charging simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario file set.
    Gen {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 126)]
        agents: usize,
        #[arg(long, default_value = "2025-01-01")]
        start: NaiveDate,
        /// Exclusive.
        #[arg(long, default_value = "2026-01-01")]
        end: NaiveDate,
        #[arg(long, default_value_t = DEFAULT_CAPACITY_KW)]
        capacity_kw: f64,
        #[arg(long)]
        inject_dst_bug: bool,
        #[arg(long, default_value = DEFAULT_TIMEZONE)]
        timezone: String,
        #[arg(long)]
        scenario_id: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load and validate a scenario; optionally write a binary cache.
    Ingest {
        /// Manifest (`scenario.toml`) or cache file.
        #[arg(long)]
        manifest: PathBuf,
        /// Cache file to write.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Print the KPI report of a scenario.
    Report {
        #[arg(long, conflicts_with = "cache", required_unless_present = "cache")]
        manifest: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Reference scenario (manifest or cache) to diff against.
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Serve the HTTP API.
    Serve {
        /// Manifest or cache to register at startup; repeatable.
        #[arg(long = "scenario")]
        scenarios: Vec<PathBuf>,
        /// Reference used when a request names none: a manifest or cache
        /// path, or the id of a scenario loaded with `--scenario`.
        #[arg(long = "ref")]
        reference: Option<String>,
        #[arg(long, env = "GRIDLENS_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "GRIDLENS_PORT", default_value_t = 8080)]
        port: u16,
        /// Directory of static UI assets.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

enum Failure {
    Validation(Vec<serde_json::Value>),
    Io(String),
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        if e.is_validation() {
            Failure::Validation(vec![e.to_json()])
        } else {
            Failure::Io(e.to_string())
        }
    }
}

impl From<GenError> for Failure {
    fn from(e: GenError) -> Self {
        match e {
            GenError::InfeasibleConfig(_) => {
                Failure::Validation(vec![json!({ "kind": "InfeasibleConfig", "message": e.to_string() })])
            }
            GenError::Io { .. } => Failure::Io(e.to_string()),
        }
    }
}

impl From<CompareError> for Failure {
    fn from(e: CompareError) -> Self {
        Failure::Validation(vec![json!({ "kind": "CompareError", "message": e.to_string() })])
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(errors)) => {
            eprintln!("{}", serde_json::to_string_pretty(&json!({ "errors": errors })).expect("json"));
            ExitCode::from(2)
        }
        Err(Failure::Io(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Gen { seed, agents, start, end, capacity_kw, inject_dst_bug, timezone, scenario_id, out } => {
            let timezone = parse_timezone(&timezone).ok_or_else(|| {
                Failure::Validation(vec![json!({ "kind": "InfeasibleConfig", "message": format!("unknown timezone {timezone:?}") })])
            })?;
            let config = GenConfig {
                seed,
                scenario_id,
                n_agents: agents,
                start_date: start,
                end_date: end,
                timezone,
                transformer_capacity_kw: capacity_kw,
                inject_dst_bug,
                ..GenConfig::default()
            };
            let g = generate(&config, &out)?;
            print_json(&json!({
                "scenario_id": g.scenario_id,
                "manifest": g.manifest_path.display().to_string(),
                "agents": g.agents,
                "steps": g.steps,
                "events": g.events,
            }));
            Ok(())
        }
        Command::Ingest { manifest, cache } => {
            let started = Instant::now();
            let store = load_any(&manifest)?;
            let ingest_ms = started.elapsed().as_secs_f64() * 1e3;
            if let Some(path) = &cache {
                write_cache(&store, path)?;
            }
            print_json(&json!({
                "scenario_id": store.scenario_id(),
                "agents": store.agents().len(),
                "steps": store.time_index().count(),
                "events": store.events().len(),
                "energy_checksum_kwh": store.energy_checksum_kwh(),
                "content_hash": format!("{:016x}", store.content_hash()),
                "store_bytes": store.heap_bytes(),
                "peak_rss_bytes": peak_rss_bytes(),
                "ingest_ms": ingest_ms,
                "cache": cache.map(|p| p.display().to_string()),
            }));
            Ok(())
        }
        Command::Report { manifest, cache, reference, format } => {
            let path = manifest.or(cache).expect("clap requires one source");
            let test = load_any(&path)?;
            let report = kpi_report(&test);
            let reference = reference.map(|p| load_any(&p)).transpose()?;
            let ref_report = reference.as_ref().map(kpi_report);
            let diffs = match &ref_report {
                Some(r) => Some(diff_kpis(&report, r)?),
                None => None,
            };
            let diff = reference.as_ref().zip(diffs.as_deref()).map(|(s, d)| (s.scenario_id(), d));
            match format {
                Format::Json => print!("{}", kpi_json_text(&report, diff)),
                Format::Text => print!("{}", kpi_text(&report, diff)),
            }
            Ok(())
        }
        Command::Serve { scenarios, reference, host, port, ui_dir } => {
            let mut stores = scenarios.iter().map(|p| Ok((p.clone(), load_store(p)?))).collect::<Result<Vec<_>, Failure>>()?;
            let default_ref = match reference {
                Some(r) if stores.iter().any(|(_, s)| s.scenario_id() == r) => Some(r),
                Some(r) => {
                    let path = PathBuf::from(&r);
                    let store = load_store(&path)?;
                    let id = store.scenario_id().to_string();
                    stores.push((path, store));
                    Some(id)
                }
                None => None,
            };
            let state = AppState::new(default_ref);
            for (path, store) in stores {
                let id = store.scenario_id().to_string();
                state.registry.insert(store).map_err(|e| {
                    Failure::Validation(vec![json!({ "kind": "DuplicateScenario", "message": e.to_string() })])
                })?;
                tracing::info!(id = %id, path = %path.display(), "registered scenario");
            }
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
            runtime
                .block_on(server::serve(state, SocketAddr::new(host, port), ui_dir))
                .map_err(|e| Failure::Io(e.to_string()))
        }
    }
}

fn load_store(path: &Path) -> Result<ScenarioStore, Failure> {
    Ok(load_any(path)?)
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

/// High-water resident set size of this process, where the platform reports it.
fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
