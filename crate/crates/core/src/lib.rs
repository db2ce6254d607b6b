//! Analytics engine for minute-resolution, multi-agent EV home-charging
//! simulation outputs.
//!
//! The crate is organised along the data flow: [`ingest`] turns a scenario's
//! CSV file set (or a binary cache) into an immutable [`ScenarioStore`],
//! [`metrics`] computes the headline grid-impact KPIs, [`query`] serves the
//! chart-sized views, [`compare`] diffs two scenarios, and [`server`] exposes
//! all of it over HTTP/JSON. [`gen`] produces synthetic scenarios in the same
//! file format.

pub mod compare;
pub mod gen;
pub mod ingest;
pub mod metrics;
pub mod query;
pub mod report;
pub mod server;
pub mod store;
pub mod sum;
pub mod time;

pub use ingest::{load_any, load_scenario, read_cache, write_cache, IngestError, ScenarioManifest};
pub use metrics::{kpi_report, KpiReport, OverloadCategory};
pub use store::{AgentMeta, EventKind, EventRecord, ScenarioStore};
pub use time::TimeIndex;
