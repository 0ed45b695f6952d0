//! File formats: case CSVs, prediction dumps, conflict/warning exports,
//! metric tables.
//!
//! Numeric precision is part of the format: positions, velocities and
//! headings carry 4 decimal places, dimensions 2, probabilities 6. A
//! parse → serialize cycle is a fixed point after the first rounding.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use wz_sentinel_core::conflict::{ConflictRecord, WarningRecord};
use wz_sentinel_core::metrics::MetricReport;
use wz_sentinel_core::predict::{PredictionSet, VehiclePrediction};
use wz_sentinel_core::traj::{AgentType, ScenarioCase, TrackPoint, VehicleTrack};
use wz_sentinel_core::Point2;

use crate::error::CliError;

pub const CASE_HEADER: &str =
    "track_id,timestamp_ms,frame_id,agent_type,x,y,vx,vy,psi_rad,length,width";
pub const PREDICTION_HEADER: &str = "track_id,mode,step,x,y,prob";
pub const CONFLICT_HEADER: &str =
    "case_id,frame_id,horizon_step,track_i,track_j,distance_m,probability,is_conflict,is_high_risk";
pub const WARNING_HEADER: &str =
    "case_id,issue_frame,horizon_step,track_i,track_j,distance_m,probability";
pub const METRIC_HEADER: &str =
    "case_id,n_agents,n_windows,ade,fde,min_joint_ade,min_joint_fde";

pub fn case_file_name(case_id: u32) -> String {
    format!("trajectory_data_case_{}.csv", case_id)
}

pub fn prediction_file_name(case_id: u32) -> String {
    format!("predictions_case_{}.csv", case_id)
}

/// Case id from a `trajectory_data_case_<id>.csv` path, if it follows the
/// naming convention.
pub fn case_id_from_path(path: &Path) -> Option<u32> {
    let name = path.file_name()?.to_str()?;
    let id = name
        .strip_prefix("trajectory_data_case_")?
        .strip_suffix(".csv")?;
    id.parse().ok()
}

/// All case files in a directory, sorted by case id.
pub fn list_case_files(dir: &Path) -> Result<Vec<(u32, PathBuf)>, CliError> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, &e))?;
    for entry in entries {
        let entry = entry.map_err(|e| CliError::io(dir, &e))?;
        let path = entry.path();
        if let Some(id) = case_id_from_path(&path) {
            out.push((id, path));
        }
    }
    out.sort_by_key(|(id, _)| *id);
    Ok(out)
}

// --- case CSV ----------------------------------------------------------

pub fn render_case(case: &ScenarioCase) -> String {
    let mut out = String::with_capacity(64 * 40 * case.tracks.len());
    out.push_str(CASE_HEADER);
    out.push('\n');
    for track in &case.tracks {
        for p in &track.points {
            let _ = writeln!(
                out,
                "{},{},{},{},{:.4},{:.4},{:.4},{:.4},{:.4},{:.2},{:.2}",
                p.track_id,
                p.timestamp_ms,
                p.frame_id,
                p.agent_type.as_str(),
                p.x,
                p.y,
                p.vx,
                p.vy,
                p.psi_rad,
                p.length,
                p.width
            );
        }
    }
    out
}

pub fn write_case(dir: &Path, case: &ScenarioCase) -> Result<PathBuf, CliError> {
    let path = dir.join(case_file_name(case.case_id));
    std::fs::write(&path, render_case(case)).map_err(|e| CliError::io(&path, &e))?;
    Ok(path)
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    name: &str,
    raw: &str,
) -> Result<T, CliError> {
    raw.trim().parse().map_err(|_| {
        CliError::Parse(format!(
            "{}: row {}: bad {} value {:?}",
            path.display(),
            line,
            name,
            raw
        ))
    })
}

pub fn read_case(path: &Path) -> Result<ScenarioCase, CliError> {
    let case_id = case_id_from_path(path).ok_or_else(|| {
        CliError::Usage(format!(
            "{}: case files must be named trajectory_data_case_<id>.csv",
            path.display()
        ))
    })?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    {
        let got = rdr
            .headers()
            .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
        let expected: Vec<&str> = CASE_HEADER.split(',').collect();
        if got.iter().collect::<Vec<_>>() != expected {
            return Err(CliError::Parse(format!(
                "{}: unexpected header {:?}",
                path.display(),
                got.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }

    // Group rows into tracks, tolerating any row order.
    let mut tracks: std::collections::BTreeMap<u32, (AgentType, Vec<TrackPoint>)> =
        std::collections::BTreeMap::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| {
            CliError::Parse(format!("{}: row {}: {}", path.display(), line, e))
        })?;
        if record.len() != 11 {
            return Err(CliError::Parse(format!(
                "{}: row {}: expected 11 fields, found {}",
                path.display(),
                line,
                record.len()
            )));
        }
        let agent_type = AgentType::parse(record[3].trim()).ok_or_else(|| {
            CliError::Parse(format!(
                "{}: row {}: unknown agent_type {:?}",
                path.display(),
                line,
                &record[3]
            ))
        })?;
        let point = TrackPoint {
            track_id: parse_field(path, line, "track_id", &record[0])?,
            timestamp_ms: parse_field(path, line, "timestamp_ms", &record[1])?,
            frame_id: parse_field(path, line, "frame_id", &record[2])?,
            agent_type,
            x: parse_field(path, line, "x", &record[4])?,
            y: parse_field(path, line, "y", &record[5])?,
            vx: parse_field(path, line, "vx", &record[6])?,
            vy: parse_field(path, line, "vy", &record[7])?,
            psi_rad: parse_field(path, line, "psi_rad", &record[8])?,
            length: parse_field(path, line, "length", &record[9])?,
            width: parse_field(path, line, "width", &record[10])?,
        };
        point.validate().map_err(|e| {
            CliError::Parse(format!("{}: row {}: {}", path.display(), line, e))
        })?;
        let entry = tracks
            .entry(point.track_id)
            .or_insert_with(|| (agent_type, Vec::new()));
        entry.1.push(point);
    }

    let tracks: Vec<VehicleTrack> = tracks
        .into_iter()
        .map(|(track_id, (agent_type, mut points))| {
            points.sort_by_key(|p| p.frame_id);
            VehicleTrack {
                track_id,
                agent_type,
                points,
            }
        })
        .collect();
    ScenarioCase::new(case_id, tracks)
        .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))
}

// --- prediction CSV ----------------------------------------------------

pub fn render_predictions(set: &PredictionSet) -> String {
    let mut out = String::new();
    out.push_str(PREDICTION_HEADER);
    out.push('\n');
    let mut order: Vec<&VehiclePrediction> = set.vehicles.iter().collect();
    order.sort_by_key(|v| v.track_id);
    for v in order {
        for (mode, traj) in v.modes.iter().enumerate() {
            for (i, p) in traj.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{:.4},{:.4},{:.6}",
                    v.track_id,
                    mode,
                    i + 1,
                    p.x,
                    p.y,
                    v.mode_probs[mode]
                );
            }
        }
    }
    out
}

/// Raw prediction rows grouped as track -> modes -> positions, plus the
/// per-mode probability. Metadata needed to rebuild `VehiclePrediction`s
/// (dimensions, origins) travels in the predictions manifest.
pub type RawPredictions = Vec<(u32, Vec<Vec<Point2>>, Vec<f64>)>;

pub fn read_predictions(path: &Path) -> Result<RawPredictions, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    {
        let got = rdr
            .headers()
            .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
        if got.iter().collect::<Vec<_>>().join(",") != PREDICTION_HEADER {
            return Err(CliError::Parse(format!(
                "{}: unexpected prediction header",
                path.display()
            )));
        }
    }
    let mut out: RawPredictions = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| {
            CliError::Parse(format!("{}: row {}: {}", path.display(), line, e))
        })?;
        let track_id: u32 = parse_field(path, line, "track_id", &record[0])?;
        let mode: usize = parse_field(path, line, "mode", &record[1])?;
        let step: usize = parse_field(path, line, "step", &record[2])?;
        let x: f64 = parse_field(path, line, "x", &record[3])?;
        let y: f64 = parse_field(path, line, "y", &record[4])?;
        let prob: f64 = parse_field(path, line, "prob", &record[5])?;
        let entry = match out.iter_mut().find(|(id, _, _)| *id == track_id) {
            Some(e) => e,
            None => {
                out.push((track_id, Vec::new(), Vec::new()));
                out.last_mut().unwrap()
            }
        };
        if entry.1.len() <= mode {
            entry.1.resize(mode + 1, Vec::new());
            entry.2.resize(mode + 1, 0.0);
        }
        let traj = &mut entry.1[mode];
        if step != traj.len() + 1 {
            return Err(CliError::Parse(format!(
                "{}: row {}: step {} out of order for track {} mode {}",
                path.display(),
                line,
                step,
                track_id,
                mode
            )));
        }
        traj.push(Point2::new(x, y));
        entry.2[mode] = prob;
    }
    Ok(out)
}

// --- conflict / warning CSV --------------------------------------------

pub fn render_conflicts(rows: &[(u32, ConflictRecord)]) -> String {
    let mut out = String::new();
    out.push_str(CONFLICT_HEADER);
    out.push('\n');
    for (case_id, r) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.4},{:.6},{},{}",
            case_id,
            r.frame_id,
            r.horizon_step,
            r.track_i,
            r.track_j,
            r.distance_m,
            r.probability,
            r.is_conflict,
            r.is_high_risk
        );
    }
    out
}

pub fn render_warnings(rows: &[(u32, WarningRecord)]) -> String {
    let mut out = String::new();
    out.push_str(WARNING_HEADER);
    out.push('\n');
    for (case_id, w) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.4},{:.6}",
            case_id, w.issue_frame, w.horizon_step, w.track_i, w.track_j, w.distance_m, w.probability
        );
    }
    out
}

/// Parsed conflict row as used by the report command.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictRow {
    pub case_id: u32,
    pub frame_id: u32,
    pub horizon_step: usize,
    pub track_i: u32,
    pub track_j: u32,
    pub distance_m: f64,
    pub probability: f64,
    pub is_conflict: bool,
    pub is_high_risk: bool,
}

pub fn read_conflicts(path: &Path) -> Result<Vec<ConflictRow>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, &e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    {
        let got = rdr
            .headers()
            .map_err(|e| CliError::Parse(format!("{}: {}", path.display(), e)))?;
        if got.iter().collect::<Vec<_>>().join(",") != CONFLICT_HEADER {
            return Err(CliError::Parse(format!(
                "{}: unexpected conflicts header",
                path.display()
            )));
        }
    }
    let mut out = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| {
            CliError::Parse(format!("{}: row {}: {}", path.display(), line, e))
        })?;
        out.push(ConflictRow {
            case_id: parse_field(path, line, "case_id", &record[0])?,
            frame_id: parse_field(path, line, "frame_id", &record[1])?,
            horizon_step: parse_field(path, line, "horizon_step", &record[2])?,
            track_i: parse_field(path, line, "track_i", &record[3])?,
            track_j: parse_field(path, line, "track_j", &record[4])?,
            distance_m: parse_field(path, line, "distance_m", &record[5])?,
            probability: parse_field(path, line, "probability", &record[6])?,
            is_conflict: parse_field(path, line, "is_conflict", &record[7])?,
            is_high_risk: parse_field(path, line, "is_high_risk", &record[8])?,
        });
    }
    Ok(out)
}

// --- metrics CSV -------------------------------------------------------

/// `case_id` is rendered as the case number or the literal `ALL` for the
/// aggregate row.
pub fn render_metrics(rows: &[(String, MetricReport)]) -> String {
    let mut out = String::new();
    out.push_str(METRIC_HEADER);
    out.push('\n');
    for (label, r) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            label, r.n_agents, r.n_windows, r.ade, r.fde, r.min_joint_ade, r.min_joint_fde
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use wz_sentinel_core::traj::FRAME_MS;

    fn cv_track(track_id: u32, first_frame: u32, n_frames: u32, x0: f64, y0: f64, vx: f64) -> VehicleTrack {
        let points = (0..n_frames)
            .map(|k| {
                let frame_id = first_frame + k;
                TrackPoint {
                    track_id,
                    timestamp_ms: frame_id * FRAME_MS,
                    frame_id,
                    agent_type: AgentType::Car,
                    // vx/10 keeps the per-frame increment exact for the
                    // dyadic speeds the tests use, so identity round-trip
                    // assertions hold bit-for-bit.
                    x: x0 + (vx / 10.0) * k as f64,
                    y: y0,
                    vx,
                    vy: 0.0,
                    psi_rad: 0.0,
                    length: 4.5,
                    width: 1.8,
                }
            })
            .collect();
        VehicleTrack { track_id, agent_type: AgentType::Car, points }
    }

    fn sample_case() -> ScenarioCase {
        ScenarioCase::new(
            3,
            vec![
                cv_track(1, 1, 40, 0.0, 1.75, 20.0),
                cv_track(2, 5, 30, 30.0, 5.25, 15.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn case_round_trip_is_identity_for_representable_values() {
        let case = sample_case();
        let dir = tempfile::tempdir().unwrap();
        let path = write_case(dir.path(), &case).unwrap();
        assert!(path.ends_with("trajectory_data_case_3.csv"));
        let back = read_case(&path).unwrap();
        assert_eq!(case, back);
    }

    #[test]
    fn rounding_happens_once() {
        let mut case = sample_case();
        case.tracks[0].points[0].x = 1.23456;
        let dir = tempfile::tempdir().unwrap();
        let path = write_case(dir.path(), &case).unwrap();
        let first = std::fs::read_to_string(&path).unwrap();
        assert!(first.contains("1.2346"), "4-dp rounding applied");
        let reread = read_case(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        let path2 = write_case(dir.path(), &reread).unwrap();
        let second = std::fs::read_to_string(&path2).unwrap();
        assert_eq!(first, second, "second round-trip is a fixed point");
    }

    #[test]
    fn corrupt_row_names_file_and_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory_data_case_1.csv");
        let body = format!("{}\n1,100,1,car,0.0,0.0,1.0,0.0,not_a_number,4.50,1.80\n", CASE_HEADER);
        std::fs::write(&path, body).unwrap();
        let err = read_case(&path).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let msg = err.to_string();
        assert!(msg.contains("row 2") && msg.contains("psi_rad"), "{}", msg);
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory_data_case_1.csv");
        std::fs::write(&path, "a,b,c\n1,2,3\n").unwrap();
        assert_eq!(read_case(&path).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn prediction_round_trip() {
        use wz_sentinel_core::predict::VehiclePrediction;
        use wz_sentinel_core::traj::AgentType;
        let v = VehiclePrediction::new(
            4,
            AgentType::Car,
            4.5,
            1.8,
            Point2::new(0.0, 0.0),
            0.0,
            vec![
                vec![Point2::new(1.0, 0.5), Point2::new(2.0, 1.0)],
                vec![Point2::new(1.0, -0.5), Point2::new(2.0, -1.0)],
            ],
            vec![0.75, 0.25],
        )
        .unwrap();
        let set = PredictionSet::new(10, 2, 0.1, vec![v]).unwrap();
        let text = render_predictions(&set);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("predictions_case_1.csv");
        std::fs::write(&path, &text).unwrap();
        let raw = read_predictions(&path).unwrap();
        assert_eq!(raw.len(), 1);
        let (id, modes, probs) = &raw[0];
        assert_eq!(*id, 4);
        assert_eq!(modes.len(), 2);
        assert_eq!(modes[0][1], Point2::new(2.0, 1.0));
        assert_eq!(probs, &vec![0.75, 0.25]);
    }

    #[test]
    fn conflict_rows_round_trip() {
        let rec = ConflictRecord {
            frame_id: 10,
            horizon_step: 3,
            track_i: 1,
            track_j: 2,
            distance_m: 5.5,
            probability: 0.755561,
            is_conflict: true,
            is_high_risk: true,
        };
        let text = render_conflicts(&[(7, rec)]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("conflicts.csv");
        std::fs::write(&path, &text).unwrap();
        let rows = read_conflicts(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].case_id, 7);
        assert_eq!(rows[0].distance_m, 5.5);
        assert!(rows[0].is_high_risk);
    }

    proptest! {
        /// Serialize -> parse -> serialize is a fixed point for arbitrary
        /// (finite) kinematic values after the first 4-dp rounding.
        #[test]
        fn serialization_fixed_point(
            x in -1000.0..1000.0f64,
            y in -1000.0..1000.0f64,
            vx in -40.0..40.0f64,
            psi in -std::f64::consts::PI..std::f64::consts::PI,
        ) {
            let mut case = sample_case();
            case.tracks[0].points[0].x = x;
            case.tracks[0].points[0].y = y;
            case.tracks[0].points[0].vx = vx;
            case.tracks[0].points[0].psi_rad = psi;
            let dir = tempfile::tempdir().unwrap();
            let path = write_case(dir.path(), &case).unwrap();
            let first = std::fs::read_to_string(&path).unwrap();
            let reread = read_case(&path).unwrap();
            std::fs::remove_file(&path).unwrap();
            let path2 = write_case(dir.path(), &reread).unwrap();
            prop_assert_eq!(first, std::fs::read_to_string(&path2).unwrap());
        }
    }
}
