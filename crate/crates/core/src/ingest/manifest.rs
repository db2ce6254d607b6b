use std::path::{Path, PathBuf};

use chrono_tz::Tz;
use serde::Deserialize;

use super::IngestError;

pub const DEFAULT_TIMEZONE: &str = "Europe/Copenhagen";

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFiles {
    pub agents: PathBuf,
    pub system: PathBuf,
    pub baseload: PathBuf,
    pub ev_load: PathBuf,
    pub soc: PathBuf,
    pub events: PathBuf,
}

impl ScenarioFiles {
    pub fn in_dir(root: &Path) -> Self {
        Self {
            agents: root.join("agents.csv"),
            system: root.join("system.csv"),
            baseload: root.join("baseload.csv"),
            ev_load: root.join("ev_load.csv"),
            soc: root.join("soc.csv"),
            events: root.join("events.csv"),
        }
    }

    pub fn iter(&self) -> [(&'static str, &Path); 6] {
        [
            ("agents", &self.agents),
            ("system", &self.system),
            ("baseload", &self.baseload),
            ("ev_load", &self.ev_load),
            ("soc", &self.soc),
            ("events", &self.events),
        ]
    }
}

/// Where a scenario's files live and how to interpret its local time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioManifest {
    pub scenario_id: String,
    pub root_path: PathBuf,
    pub timezone: Tz,
    pub files: ScenarioFiles,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    scenario_id: String,
    timezone: Option<String>,
    agents: Option<PathBuf>,
    system: Option<PathBuf>,
    baseload: Option<PathBuf>,
    ev_load: Option<PathBuf>,
    soc: Option<PathBuf>,
    events: Option<PathBuf>,
}

impl ScenarioManifest {
    /// Manifest for a store that does not come from files (tests, caches).
    pub fn in_memory(scenario_id: impl Into<String>, timezone: Tz) -> Self {
        Self {
            scenario_id: scenario_id.into(),
            root_path: PathBuf::new(),
            timezone,
            files: ScenarioFiles::in_dir(Path::new("")),
        }
    }

    /// Manifest with the canonical file names under `root`.
    pub fn in_dir(scenario_id: impl Into<String>, root: &Path, timezone: Tz) -> Self {
        Self {
            scenario_id: scenario_id.into(),
            root_path: root.to_path_buf(),
            timezone,
            files: ScenarioFiles::in_dir(root),
        }
    }

    /// Parse a `key = value` manifest. File paths are relative to the
    /// manifest's directory and default to the canonical names.
    pub fn from_file(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => IngestError::MissingFile { role: "manifest", path: path.to_path_buf() },
            _ => IngestError::io(path, e),
        })?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &root).map_err(|message| IngestError::InvalidManifest { path: path.to_path_buf(), message })
    }

    pub fn parse(text: &str, root: &Path) -> Result<Self, String> {
        let raw: RawManifest = toml::from_str(text).map_err(|e| e.message().to_string())?;
        if raw.scenario_id.trim().is_empty() {
            return Err("scenario_id must not be empty".into());
        }
        let tz_name = raw.timezone.as_deref().unwrap_or(DEFAULT_TIMEZONE);
        let timezone = crate::time::parse_timezone(tz_name).ok_or_else(|| format!("unknown timezone {tz_name:?}"))?;
        let defaults = ScenarioFiles::in_dir(root);
        let resolve = |p: Option<PathBuf>, default: PathBuf| p.map(|p| root.join(p)).unwrap_or(default);
        Ok(Self {
            scenario_id: raw.scenario_id,
            root_path: root.to_path_buf(),
            timezone,
            files: ScenarioFiles {
                agents: resolve(raw.agents, defaults.agents),
                system: resolve(raw.system, defaults.system),
                baseload: resolve(raw.baseload, defaults.baseload),
                ev_load: resolve(raw.ev_load, defaults.ev_load),
                soc: resolve(raw.soc, defaults.soc),
                events: resolve(raw.events, defaults.events),
            },
        })
    }

    /// Render as manifest text with paths relative to `root_path`.
    pub fn to_text(&self) -> String {
        let rel = |p: &Path| {
            p.strip_prefix(&self.root_path).unwrap_or(p).display().to_string().replace('\\', "/")
        };
        let mut out = String::new();
        out.push_str(&format!("scenario_id = {}\n", toml_string(&self.scenario_id)));
        out.push_str(&format!("timezone = {}\n", toml_string(self.timezone.name())));
        for (key, path) in self.files.iter() {
            out.push_str(&format!("{key} = {}\n", toml_string(&rel(path))));
        }
        out
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_relative_paths() {
        let m = ScenarioManifest::parse("scenario_id = \"s1\"\nevents = \"ev/events.csv\"\n", Path::new("/data/s1")).unwrap();
        assert_eq!(m.timezone.name(), "Europe/Copenhagen");
        assert_eq!(m.files.agents, Path::new("/data/s1/agents.csv"));
        assert_eq!(m.files.events, Path::new("/data/s1/ev/events.csv"));
    }

    #[test]
    fn text_round_trip() {
        let m = ScenarioManifest::in_dir("seed-1", Path::new("/x/y"), "UTC".parse().unwrap());
        let back = ScenarioManifest::parse(&m.to_text(), Path::new("/x/y")).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScenarioManifest::parse("scenario_id = \"\"", Path::new(".")).is_err());
        assert!(ScenarioManifest::parse("scenario_id = \"a\"\ntimezone = \"Mars/Olympus\"", Path::new(".")).is_err());
        assert!(ScenarioManifest::parse("scenario_id = \"a\"\nbogus = 1", Path::new(".")).is_err());
    }
}
