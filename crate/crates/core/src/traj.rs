//! Trajectory data model: per-frame vehicle states, per-vehicle tracks,
//! multi-vehicle 4-second cases, and sliding observation windows.
//!
//! Cases are sampled at 10 Hz over at most 40 frames; `timestamp_ms` is
//! always `100 * frame_id`. CSV parsing/writing lives in the companion
//! std crate; this module owns the invariants.

use alloc::vec::Vec;

use crate::geometry::Point2;

/// Frame period in seconds (10 Hz sampling).
pub const FRAME_DT: f64 = 0.1;
/// Milliseconds between consecutive frames.
pub const FRAME_MS: u32 = 100;
/// Highest frame id a case may contain.
pub const MAX_FRAME: u32 = 40;
/// Slack when validating that a heading lies in (-pi, pi]: serialized
/// headings are rounded to 4 decimals, so pi itself round-trips as a value
/// slightly above pi.
pub const HEADING_SLACK: f64 = 1e-4;

/// Vehicle class; fixes the default footprint used downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentType {
    Car,
    Truck,
}

impl AgentType {
    /// Default (length, width) in meters for this class.
    pub const fn dims(self) -> (f64, f64) {
        match self {
            AgentType::Car => (4.5, 1.8),
            AgentType::Truck => (12.0, 2.5),
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            AgentType::Car => "car",
            AgentType::Truck => "truck",
        }
    }

    /// Parses the closed {"car", "truck"} set; anything else is rejected.
    pub fn parse(s: &str) -> Option<AgentType> {
        match s {
            "car" => Some(AgentType::Car),
            "truck" => Some(AgentType::Truck),
            _ => None,
        }
    }
}

/// One vehicle state sample at one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackPoint {
    pub track_id: u32,
    pub timestamp_ms: u32,
    pub frame_id: u32,
    pub agent_type: AgentType,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    /// Yaw in radians, normalized to (-pi, pi] up to serialization slack.
    pub psi_rad: f64,
    pub length: f64,
    pub width: f64,
}

impl TrackPoint {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn speed(&self) -> f64 {
        libm::hypot(self.vx, self.vy)
    }

    pub fn validate(&self) -> Result<(), TrajError> {
        if self.track_id == 0 {
            return Err(TrajError::BadTrackId);
        }
        if self.frame_id < 1 || self.frame_id > MAX_FRAME {
            return Err(TrajError::FrameOutOfRange {
                track_id: self.track_id,
                frame_id: self.frame_id,
            });
        }
        if self.timestamp_ms != self.frame_id * FRAME_MS {
            return Err(TrajError::TimestampMismatch {
                track_id: self.track_id,
                frame_id: self.frame_id,
                timestamp_ms: self.timestamp_ms,
            });
        }
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(TrajError::BadDimensions {
                track_id: self.track_id,
                frame_id: self.frame_id,
            });
        }
        let bound = core::f64::consts::PI + HEADING_SLACK;
        if !(self.psi_rad > -bound && self.psi_rad <= bound) {
            return Err(TrajError::BadHeading {
                track_id: self.track_id,
                frame_id: self.frame_id,
            });
        }
        for v in [self.x, self.y, self.vx, self.vy] {
            if !v.is_finite() {
                return Err(TrajError::NonFiniteField {
                    track_id: self.track_id,
                    frame_id: self.frame_id,
                });
            }
        }
        Ok(())
    }
}

/// One vehicle's time series within a case.
///
/// Frames are strictly increasing and contiguous: tracker dropouts are out
/// of scope, and the simulator never produces gaps, so a gap is an error
/// rather than something window extraction has to reason about.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTrack {
    pub track_id: u32,
    pub agent_type: AgentType,
    pub points: Vec<TrackPoint>,
}

impl VehicleTrack {
    pub fn first_frame(&self) -> u32 {
        self.points.first().map_or(0, |p| p.frame_id)
    }

    pub fn last_frame(&self) -> u32 {
        self.points.last().map_or(0, |p| p.frame_id)
    }

    /// Point at a given frame, if present.
    pub fn at_frame(&self, frame_id: u32) -> Option<&TrackPoint> {
        let first = self.first_frame();
        if frame_id < first || frame_id > self.last_frame() {
            return None;
        }
        self.points.get((frame_id - first) as usize)
    }

    pub fn validate(&self) -> Result<(), TrajError> {
        if self.points.is_empty() {
            return Err(TrajError::EmptyTrack {
                track_id: self.track_id,
            });
        }
        let mut prev: Option<u32> = None;
        for p in &self.points {
            p.validate()?;
            if p.track_id != self.track_id || p.agent_type != self.agent_type {
                return Err(TrajError::MixedTrack {
                    track_id: self.track_id,
                    frame_id: p.frame_id,
                });
            }
            if let Some(prev_frame) = prev {
                if p.frame_id == prev_frame {
                    return Err(TrajError::DuplicateFrame {
                        track_id: self.track_id,
                        frame_id: p.frame_id,
                    });
                }
                if p.frame_id != prev_frame + 1 {
                    return Err(TrajError::FrameGap {
                        track_id: self.track_id,
                        after_frame: prev_frame,
                    });
                }
            }
            prev = Some(p.frame_id);
        }
        Ok(())
    }
}

/// One multi-vehicle scenario: all tracks recorded over a 4-second window.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioCase {
    pub case_id: u32,
    /// Tracks sorted by track_id; ids form the contiguous set 1..=n.
    pub tracks: Vec<VehicleTrack>,
}

impl ScenarioCase {
    pub fn new(case_id: u32, mut tracks: Vec<VehicleTrack>) -> Result<Self, TrajError> {
        tracks.sort_by_key(|t| t.track_id);
        let case = Self { case_id, tracks };
        case.validate()?;
        Ok(case)
    }

    pub fn track(&self, track_id: u32) -> Option<&VehicleTrack> {
        self.tracks
            .binary_search_by_key(&track_id, |t| t.track_id)
            .ok()
            .map(|i| &self.tracks[i])
    }

    pub fn min_frame(&self) -> u32 {
        self.tracks.iter().map(|t| t.first_frame()).min().unwrap_or(0)
    }

    pub fn max_frame(&self) -> u32 {
        self.tracks.iter().map(|t| t.last_frame()).max().unwrap_or(0)
    }

    /// Number of distinct vehicles present at `frame_id`.
    pub fn count_at_frame(&self, frame_id: u32) -> usize {
        self.tracks
            .iter()
            .filter(|t| t.at_frame(frame_id).is_some())
            .count()
    }

    pub fn validate(&self) -> Result<(), TrajError> {
        if self.case_id == 0 {
            return Err(TrajError::BadCaseId);
        }
        if self.tracks.is_empty() {
            return Err(TrajError::EmptyCase);
        }
        for (i, t) in self.tracks.iter().enumerate() {
            if t.track_id != (i as u32) + 1 {
                return Err(TrajError::NonContiguousTrackIds);
            }
            t.validate()?;
        }
        Ok(())
    }
}

/// One vehicle's slice of an observation window: H observed points plus
/// F ground-truth future points, temporally contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowVehicle {
    pub track_id: u32,
    pub agent_type: AgentType,
    pub history: Vec<TrackPoint>,
    pub future: Vec<TrackPoint>,
}

impl WindowVehicle {
    /// Last observed state; the prediction origin.
    pub fn current(&self) -> &TrackPoint {
        self.history.last().expect("window vehicle has H >= 1 history points")
    }

    pub fn future_positions(&self) -> Vec<Point2> {
        self.future.iter().map(|p| p.position()).collect()
    }
}

/// A sliding prediction window: per-vehicle history and future truth.
/// Only vehicles present for all H+F frames are included.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    /// First history frame.
    pub start_frame: u32,
    pub h: usize,
    pub f: usize,
    /// Seconds between frames.
    pub dt: f64,
    pub vehicles: Vec<WindowVehicle>,
}

impl ObservationWindow {
    /// Frame at which a prediction from this window is issued (last
    /// observed frame).
    pub fn issue_frame(&self) -> u32 {
        self.start_frame + self.h as u32 - 1
    }
}

/// Extracts every valid sliding window of H history + F future frames.
///
/// Windows start at each frame from the case's first to the last that
/// still fits H+F frames. Vehicles not present across the whole span are
/// excluded from that window; windows left with no vehicles are dropped.
pub fn extract_windows(
    case: &ScenarioCase,
    h: usize,
    f: usize,
) -> Result<Vec<ObservationWindow>, TrajError> {
    if h == 0 || f == 0 {
        return Err(TrajError::InvalidWindowParams { h, f });
    }
    let span = (h + f) as u32;
    let (min_frame, max_frame) = (case.min_frame(), case.max_frame());
    let frames_present = max_frame - min_frame + 1;
    if span > frames_present {
        return Err(TrajError::WindowTooLong {
            span: h + f,
            frames_present: frames_present as usize,
        });
    }
    let mut windows = Vec::new();
    for start in min_frame..=(max_frame - span + 1) {
        let mut vehicles = Vec::new();
        for track in &case.tracks {
            if track.first_frame() <= start && track.last_frame() >= start + span - 1 {
                let offset = (start - track.first_frame()) as usize;
                let hist = &track.points[offset..offset + h];
                let fut = &track.points[offset + h..offset + h + f];
                vehicles.push(WindowVehicle {
                    track_id: track.track_id,
                    agent_type: track.agent_type,
                    history: hist.to_vec(),
                    future: fut.to_vec(),
                });
            }
        }
        if !vehicles.is_empty() {
            windows.push(ObservationWindow {
                start_frame: start,
                h,
                f,
                dt: FRAME_DT,
                vehicles,
            });
        }
    }
    Ok(windows)
}

/// Structural violations of the trajectory data model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrajError {
    BadTrackId,
    BadCaseId,
    EmptyCase,
    EmptyTrack { track_id: u32 },
    FrameOutOfRange { track_id: u32, frame_id: u32 },
    TimestampMismatch { track_id: u32, frame_id: u32, timestamp_ms: u32 },
    BadDimensions { track_id: u32, frame_id: u32 },
    BadHeading { track_id: u32, frame_id: u32 },
    NonFiniteField { track_id: u32, frame_id: u32 },
    MixedTrack { track_id: u32, frame_id: u32 },
    DuplicateFrame { track_id: u32, frame_id: u32 },
    FrameGap { track_id: u32, after_frame: u32 },
    NonContiguousTrackIds,
    InvalidWindowParams { h: usize, f: usize },
    WindowTooLong { span: usize, frames_present: usize },
}

impl core::fmt::Display for TrajError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TrajError::BadTrackId => write!(f, "track_id must be >= 1"),
            TrajError::BadCaseId => write!(f, "case_id must be >= 1"),
            TrajError::EmptyCase => write!(f, "case contains no tracks"),
            TrajError::EmptyTrack { track_id } => {
                write!(f, "track {} has no points", track_id)
            }
            TrajError::FrameOutOfRange { track_id, frame_id } => write!(
                f,
                "track {}: frame_id {} outside 1..={}",
                track_id, frame_id, MAX_FRAME
            ),
            TrajError::TimestampMismatch {
                track_id,
                frame_id,
                timestamp_ms,
            } => write!(
                f,
                "track {} frame {}: timestamp_ms {} != {}",
                track_id,
                frame_id,
                timestamp_ms,
                frame_id * FRAME_MS
            ),
            TrajError::BadDimensions { track_id, frame_id } => write!(
                f,
                "track {} frame {}: length/width must be > 0",
                track_id, frame_id
            ),
            TrajError::BadHeading { track_id, frame_id } => write!(
                f,
                "track {} frame {}: psi_rad outside (-pi, pi]",
                track_id, frame_id
            ),
            TrajError::NonFiniteField { track_id, frame_id } => write!(
                f,
                "track {} frame {}: non-finite x/y/vx/vy",
                track_id, frame_id
            ),
            TrajError::MixedTrack { track_id, frame_id } => write!(
                f,
                "track {} frame {}: point belongs to a different track or agent type",
                track_id, frame_id
            ),
            TrajError::DuplicateFrame { track_id, frame_id } => {
                write!(f, "track {}: duplicate frame {}", track_id, frame_id)
            }
            TrajError::FrameGap { track_id, after_frame } => {
                write!(f, "track {}: frame gap after frame {}", track_id, after_frame)
            }
            TrajError::NonContiguousTrackIds => {
                write!(f, "track ids must form the contiguous set 1..=n")
            }
            TrajError::InvalidWindowParams { h, f: fut } => {
                write!(f, "window params must satisfy H >= 1, F >= 1 (got H={}, F={})", h, fut)
            }
            TrajError::WindowTooLong { span, frames_present } => write!(
                f,
                "window of {} frames exceeds the {} frames present",
                span, frames_present
            ),
        }
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    /// Straight constant-velocity track along +x starting at (x0, y0).
    pub fn cv_track(
        track_id: u32,
        first_frame: u32,
        n_frames: u32,
        x0: f64,
        y0: f64,
        vx: f64,
    ) -> VehicleTrack {
        let points = (0..n_frames)
            .map(|k| {
                let frame_id = first_frame + k;
                TrackPoint {
                    track_id,
                    timestamp_ms: frame_id * FRAME_MS,
                    frame_id,
                    agent_type: AgentType::Car,
                    x: x0 + vx * FRAME_DT * k as f64,
                    y: y0,
                    vx,
                    vy: 0.0,
                    psi_rad: 0.0,
                    length: 4.5,
                    width: 1.8,
                }
            })
            .collect();
        VehicleTrack {
            track_id,
            agent_type: AgentType::Car,
            points,
        }
    }
}
