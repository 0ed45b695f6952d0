//! Simulation config files: flat `key = value` lines, `#` comments,
//! unknown or repeated keys rejected so typos fail loudly instead of
//! silently falling back to defaults.

use std::path::Path;

use wz_sentinel_core::sim::SimConfig;

use crate::error::CliError;

pub const KEYS: &[&str] = &[
    "seed",
    "n_cases",
    "case_duration_s",
    "dt",
    "density_min",
    "density_max",
    "inflow_per_lane",
    "truck_fraction",
    "speed_jitter",
    "warmup_s",
    "density_wait_cap_s",
    "merge_zone_m",
    "speed_limit",
    "workzone_limit",
    "idm_v0",
    "idm_t_headway",
    "idm_a_max",
    "idm_b_comf",
    "idm_s0",
    "idm_delta",
    "lat_a_max",
    "lat_v_base",
    "lat_v_per_speed",
    "lat_lead_gap_s",
    "lat_trail_gap_s",
    "lat_impatience_ramp_s",
];

fn apply(config: &mut SimConfig, key: &str, value: &str) -> Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
        value
            .parse()
            .map_err(|_| format!("bad value {:?} for key {}", value, key))
    }
    match key {
        "seed" => config.seed = num(key, value)?,
        "n_cases" => config.n_cases = num(key, value)?,
        "case_duration_s" => config.case_duration_s = num(key, value)?,
        "dt" => config.dt = num(key, value)?,
        "density_min" => config.density_min = num(key, value)?,
        "density_max" => config.density_max = num(key, value)?,
        "inflow_per_lane" => config.inflow_per_lane = num(key, value)?,
        "truck_fraction" => config.truck_fraction = num(key, value)?,
        "speed_jitter" => config.speed_jitter = num(key, value)?,
        "warmup_s" => config.warmup_s = num(key, value)?,
        "density_wait_cap_s" => config.density_wait_cap_s = num(key, value)?,
        "merge_zone_m" => config.merge_zone_m = num(key, value)?,
        "speed_limit" => config.speed_limit = num(key, value)?,
        "workzone_limit" => config.workzone_limit = num(key, value)?,
        "idm_v0" => config.idm.v0 = num(key, value)?,
        "idm_t_headway" => config.idm.t_headway = num(key, value)?,
        "idm_a_max" => config.idm.a_max = num(key, value)?,
        "idm_b_comf" => config.idm.b_comf = num(key, value)?,
        "idm_s0" => config.idm.s0 = num(key, value)?,
        "idm_delta" => config.idm.delta = num(key, value)?,
        "lat_a_max" => config.lateral.a_lat_max = num(key, value)?,
        "lat_v_base" => config.lateral.v_lat_base = num(key, value)?,
        "lat_v_per_speed" => config.lateral.v_lat_per_speed = num(key, value)?,
        "lat_lead_gap_s" => config.lateral.lead_gap_s = num(key, value)?,
        "lat_trail_gap_s" => config.lateral.trail_gap_s = num(key, value)?,
        "lat_impatience_ramp_s" => config.lateral.impatience_ramp_s = num(key, value)?,
        _ => return Err(format!("unknown config key {:?}", key)),
    }
    Ok(())
}

pub fn parse_config(text: &str) -> Result<SimConfig, CliError> {
    let mut config = SimConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected key = value", i + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let canonical = KEYS.iter().find(|k| **k == key);
        if let Some(canonical) = canonical {
            if seen.contains(canonical) {
                return Err(CliError::Usage(format!(
                    "config line {}: duplicate key {:?}",
                    i + 1,
                    key
                )));
            }
            seen.push(canonical);
        }
        apply(&mut config, key, value)
            .map_err(|e| CliError::Usage(format!("config line {}: {}", i + 1, e)))?;
    }
    config
        .validate()
        .map_err(|e| CliError::Usage(format!("invalid config: {}", e)))?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
    parse_config(&text)
        .map_err(|e| match e {
            CliError::Usage(msg) => CliError::Usage(format!("{}: {}", path.display(), msg)),
            other => other,
        })
}

/// Canonical rendering: every key once, fixed order, shortest round-trip
/// float formatting. Input to the dataset manifest's config digest, so the
/// same effective config always hashes identically no matter how the file
/// was written.
pub fn render_canonical(config: &SimConfig) -> String {
    let mut out = String::new();
    for key in KEYS {
        let value = match *key {
            "seed" => config.seed.to_string(),
            "n_cases" => config.n_cases.to_string(),
            "case_duration_s" => config.case_duration_s.to_string(),
            "dt" => config.dt.to_string(),
            "density_min" => config.density_min.to_string(),
            "density_max" => config.density_max.to_string(),
            "inflow_per_lane" => config.inflow_per_lane.to_string(),
            "truck_fraction" => config.truck_fraction.to_string(),
            "speed_jitter" => config.speed_jitter.to_string(),
            "warmup_s" => config.warmup_s.to_string(),
            "density_wait_cap_s" => config.density_wait_cap_s.to_string(),
            "merge_zone_m" => config.merge_zone_m.to_string(),
            "speed_limit" => config.speed_limit.to_string(),
            "workzone_limit" => config.workzone_limit.to_string(),
            "idm_v0" => config.idm.v0.to_string(),
            "idm_t_headway" => config.idm.t_headway.to_string(),
            "idm_a_max" => config.idm.a_max.to_string(),
            "idm_b_comf" => config.idm.b_comf.to_string(),
            "idm_s0" => config.idm.s0.to_string(),
            "idm_delta" => config.idm.delta.to_string(),
            "lat_a_max" => config.lateral.a_lat_max.to_string(),
            "lat_v_base" => config.lateral.v_lat_base.to_string(),
            "lat_v_per_speed" => config.lateral.v_lat_per_speed.to_string(),
            "lat_lead_gap_s" => config.lateral.lead_gap_s.to_string(),
            "lat_trail_gap_s" => config.lateral.trail_gap_s.to_string(),
            "lat_impatience_ramp_s" => config.lateral.impatience_ramp_s.to_string(),
            _ => unreachable!(),
        };
        out.push_str(key);
        out.push('=');
        out.push_str(&value);
        out.push('\n');
    }
    out
}
