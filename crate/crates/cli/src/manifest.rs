//! Run artifacts: the dataset manifest describing generated cases, the
//! predictions manifest carrying the vehicle metadata needed to rebuild
//! box footprints downstream, and the append-only run log.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use wz_sentinel_core::sim::SimConfig;

use crate::error::CliError;
use crate::sim_config::render_canonical;

/// SHA-256 over the canonical key=value rendering, so equivalent configs
/// (reordered keys, comments, defaults spelled out or left implicit) hash
/// the same.
pub fn config_digest(config: &SimConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(render_canonical(config).as_bytes());
    let out = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in out {
        use std::fmt::Write as _;
        let _ = write!(hex, "{:02x}", b);
    }
    hex
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetCaseEntry {
    pub case_id: u32,
    pub n_vehicles: usize,
    pub file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub config_digest: String,
    pub cases: Vec<DatasetCaseEntry>,
}

impl DatasetManifest {
    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e)))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, &e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))
    }
}

/// Per-vehicle pose and footprint at the issue frame; everything a
/// downstream consumer needs to rebuild oriented boxes around the bare
/// (x, y) rows of a prediction CSV.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredVehicleMeta {
    pub track_id: u32,
    pub agent_type: String,
    pub length: f64,
    pub width: f64,
    pub origin: [f64; 2],
    pub heading0: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredCaseEntry {
    pub case_id: u32,
    /// Frame the predictions were issued at (last observed frame).
    pub issue_frame: u32,
    pub file: String,
    pub vehicles: Vec<PredVehicleMeta>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredictionsManifest {
    pub predictor: String,
    pub modes: usize,
    pub history: usize,
    pub horizon: usize,
    /// Step period in seconds.
    pub dt: f64,
    pub cases: Vec<PredCaseEntry>,
}

impl PredictionsManifest {
    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e)))?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, &e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))
    }
}

/// One line of the append-only run log kept next to each command's
/// outputs. Unlike the data files, the log is never overwritten, so
/// repeated runs leave an audit trail while the artifacts stay idempotent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub subcommand: String,
    pub version: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    /// Resolved knobs worth auditing (thresholds, predictor, seed...).
    pub params: Vec<(String, String)>,
    pub duration_ms: u64,
}

pub fn append_run(out_dir: &Path, record: &RunRecord) -> Result<(), CliError> {
    let path = out_dir.join("run_manifest.jsonl");
    let mut line = serde_json::to_string(record)
        .map_err(|e| CliError::Io(format!("{}: {}", path.display(), e)))?;
    line.push('\n');
    use std::io::Write as _;
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| CliError::io(&path, &e))?;
    f.write_all(line.as_bytes()).map_err(|e| CliError::io(&path, &e))
}

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = config_digest(&SimConfig::default());
        let b = config_digest(&SimConfig::default());
        assert_eq!(a, b);
        assert_eq!(a.len(), 64);
        let mut other = SimConfig::default();
        other.seed += 1;
        assert_ne!(a, config_digest(&other));
    }

    #[test]
    fn dataset_manifest_round_trips() {
        let m = DatasetManifest {
            seed: 42,
            config_digest: config_digest(&SimConfig::default()),
            cases: vec![DatasetCaseEntry {
                case_id: 1,
                n_vehicles: 20,
                file: "trajectory_data_case_1.csv".into(),
            }],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dataset_manifest.json");
        m.save(&path).unwrap();
        assert_eq!(DatasetManifest::load(&path).unwrap(), m);
    }

    #[test]
    fn run_log_appends() {
        let dir = tempfile::tempdir().unwrap();
        let rec = RunRecord {
            subcommand: "simulate".into(),
            version: tool_version().into(),
            inputs: vec!["configs/default.cfg".into()],
            outputs: vec!["out".into()],
            params: vec![("seed".into(), "7".into())],
            duration_ms: 12,
        };
        append_run(dir.path(), &rec).unwrap();
        append_run(dir.path(), &rec).unwrap();
        let text = std::fs::read_to_string(dir.path().join("run_manifest.jsonl")).unwrap();
        assert_eq!(text.lines().count(), 2);
        let parsed: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(parsed["subcommand"], "simulate");
    }
}
