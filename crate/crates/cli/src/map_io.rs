//! Lanelet map JSON loading.
//!
//! Schema: `{"lanelets": [{"id", "left", "right", "successors",
//! "adjacent_left", "adjacent_right", "speed_limit", "closed",
//! "taper_start_s", "taper_end_s"}]}` where boundaries are arrays of
//! [x, y] pairs. Unknown keys are rejected so typos surface as schema
//! errors instead of silently ignored knobs.

use std::path::Path;

use serde::Deserialize;
use wz_sentinel_core::map::{LaneletMap, LaneletSpec};
use wz_sentinel_core::Point2;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    lanelets: Vec<LaneletJson>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LaneletJson {
    id: u32,
    left: Vec<[f64; 2]>,
    right: Vec<[f64; 2]>,
    #[serde(default)]
    successors: Vec<u32>,
    #[serde(default)]
    adjacent_left: Option<u32>,
    #[serde(default)]
    adjacent_right: Option<u32>,
    speed_limit: f64,
    #[serde(default)]
    closed: bool,
    #[serde(default)]
    taper_start_s: Option<f64>,
    #[serde(default)]
    taper_end_s: Option<f64>,
}

fn to_points(raw: Vec<[f64; 2]>) -> Vec<Point2> {
    raw.into_iter().map(|[x, y]| Point2::new(x, y)).collect()
}

pub fn load_map(path: &Path) -> Result<LaneletMap, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
    let file: MapFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: map schema error: {}", path.display(), e)))?;
    let specs = file
        .lanelets
        .into_iter()
        .map(|l| LaneletSpec {
            id: l.id,
            left: to_points(l.left),
            right: to_points(l.right),
            successors: l.successors,
            adjacent_left: l.adjacent_left,
            adjacent_right: l.adjacent_right,
            speed_limit: l.speed_limit,
            closed: l.closed,
            taper_start_s: l.taper_start_s,
            taper_end_s: l.taper_end_s,
        })
        .collect();
    LaneletMap::from_specs(specs)
        .map_err(|e| CliError::Usage(format!("{}: invalid map: {}", path.display(), e)))
}
