//! Multi-modal trajectory predictors behind one output contract.
//!
//! Every predictor emits, per vehicle, K candidate future trajectories of
//! F positions each with mode probabilities summing to 1, plus an anchor
//! pose taken from mode 0 at the middle future step. Three references are
//! provided: constant velocity, constant turn-rate-and-velocity, and a
//! map-aware maneuver predictor that hypothesizes keep/merge maneuvers
//! along lane centerlines and scores them with an explicit cost function.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{normalize_angle, Point2};
use crate::map::{self, LaneletMap, MapError, MergeStrategy};
use crate::traj::{AgentType, ObservationWindow, WindowVehicle};

/// Yaw rates below this (rad/s) use the straight-line rollout to avoid the
/// 1/omega singularity; the reduction is exact, not approximate.
pub const OMEGA_EPS: f64 = 1e-4;

/// Tuning knobs shared by all predictors; only `modes`, `horizon`, and
/// `dt` matter for the kinematic baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorConfig {
    /// Mode count K.
    pub modes: usize,
    /// Future steps F.
    pub horizon: usize,
    /// Step period, seconds.
    pub dt: f64,
    /// Comfortable braking, m/s² (keep-lane decelerate mode).
    pub comfort_decel: f64,
    /// Comfortable acceleration, m/s² (keep-lane accelerate mode).
    pub comfort_accel: f64,
    /// Nominal merge duration, seconds; merge length = max(speed × this,
    /// `min_merge_len_m`).
    pub merge_duration_s: f64,
    pub min_merge_len_m: f64,
    /// Softmax temperature over negative maneuver costs.
    pub softmax_temp: f64,
    /// Scale of the closure-pressure cost `w / (d_taper + 10)` applied to
    /// non-merge modes of vehicles in or feeding a closed lane.
    pub closure_weight: f64,
    /// Cost per meter of lateral displacement a mode requires.
    pub lat_effort_weight: f64,
    /// Cost per m/s of end-speed deviation from the lane limit.
    pub speed_dev_weight: f64,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            modes: 6,
            horizon: 30,
            dt: 0.1,
            comfort_decel: 2.0,
            comfort_accel: 1.5,
            merge_duration_s: 3.0,
            min_merge_len_m: 20.0,
            softmax_temp: 1.0,
            closure_weight: 50.0,
            lat_effort_weight: 0.1,
            speed_dev_weight: 0.05,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<(), PredictError> {
        if self.modes < 1 {
            return Err(PredictError::BadConfig("modes must be >= 1"));
        }
        if self.horizon < 1 {
            return Err(PredictError::BadConfig("horizon must be >= 1"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(PredictError::BadConfig("dt must be > 0"));
        }
        if !(self.softmax_temp.is_finite() && self.softmax_temp > 0.0) {
            return Err(PredictError::BadConfig("softmax_temp must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictError {
    EmptyHistory { track_id: u32 },
    OffMap { track_id: u32 },
    HorizonTooShort,
    ShapeMismatch(&'static str),
    BadProbabilities,
    BadConfig(&'static str),
}

impl core::fmt::Display for PredictError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PredictError::EmptyHistory { track_id } => {
                write!(f, "track {} has no history to predict from", track_id)
            }
            PredictError::OffMap { track_id } => {
                write!(f, "track {} does not project onto the map", track_id)
            }
            PredictError::HorizonTooShort => {
                write!(f, "anchor selection needs a horizon of at least 2 steps")
            }
            PredictError::ShapeMismatch(what) => write!(f, "prediction shape invalid: {}", what),
            PredictError::BadProbabilities => {
                write!(f, "mode probabilities must be non-negative and sum to 1")
            }
            PredictError::BadConfig(what) => write!(f, "predictor config invalid: {}", what),
        }
    }
}

/// Pose used as the refinement reference: mode 0 at step ⌊F/2⌋.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorPose {
    pub position: Point2,
    pub heading: f64,
}

/// K-mode future for one vehicle, shape-validated at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct VehiclePrediction {
    pub track_id: u32,
    pub agent_type: AgentType,
    pub length: f64,
    pub width: f64,
    /// Position at the issue frame.
    pub origin: Point2,
    /// Heading at the issue frame.
    pub heading0: f64,
    /// K trajectories of F future positions each.
    pub modes: Vec<Vec<Point2>>,
    /// K probabilities, non-negative, summing to 1 ± 1e−9.
    pub mode_probs: Vec<f64>,
    pub anchor: AnchorPose,
}

impl VehiclePrediction {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        track_id: u32,
        agent_type: AgentType,
        length: f64,
        width: f64,
        origin: Point2,
        heading0: f64,
        modes: Vec<Vec<Point2>>,
        mode_probs: Vec<f64>,
    ) -> Result<Self, PredictError> {
        if modes.is_empty() {
            return Err(PredictError::ShapeMismatch("zero modes"));
        }
        let f = modes[0].len();
        if f == 0 {
            return Err(PredictError::ShapeMismatch("zero-length horizon"));
        }
        if modes.iter().any(|m| m.len() != f) {
            return Err(PredictError::ShapeMismatch("modes differ in length"));
        }
        if mode_probs.len() != modes.len() {
            return Err(PredictError::ShapeMismatch("probs/modes count mismatch"));
        }
        let mut sum = 0.0;
        for &p in &mode_probs {
            if !(p.is_finite() && p >= 0.0) {
                return Err(PredictError::BadProbabilities);
            }
            sum += p;
        }
        if libm::fabs(sum - 1.0) > 1e-9 {
            return Err(PredictError::BadProbabilities);
        }
        let mid = f / 2;
        let anchor = AnchorPose {
            position: modes[0][mid],
            heading: travel_heading(&modes[0], mid, Some(origin)).unwrap_or(heading0),
        };
        Ok(Self {
            track_id,
            agent_type,
            length,
            width,
            origin,
            heading0,
            modes,
            mode_probs,
            anchor,
        })
    }

    /// Mode count K.
    pub fn k(&self) -> usize {
        self.modes.len()
    }

    /// Horizon F.
    pub fn f(&self) -> usize {
        self.modes[0].len()
    }
}

/// Predictions for all vehicles of one window, issued at one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    /// Frame the prediction was issued at (last observed frame).
    pub frame_id: u32,
    /// Steps per mode (F).
    pub horizon: usize,
    /// Step period, seconds.
    pub dt: f64,
    pub vehicles: Vec<VehiclePrediction>,
}

impl PredictionSet {
    pub fn new(
        frame_id: u32,
        horizon: usize,
        dt: f64,
        vehicles: Vec<VehiclePrediction>,
    ) -> Result<Self, PredictError> {
        if let Some(first) = vehicles.first() {
            let k = first.k();
            for v in &vehicles {
                if v.f() != horizon {
                    return Err(PredictError::ShapeMismatch("vehicle horizon != set horizon"));
                }
                if v.k() != k {
                    return Err(PredictError::ShapeMismatch("vehicles differ in mode count"));
                }
            }
        }
        Ok(Self {
            frame_id,
            horizon,
            dt,
            vehicles,
        })
    }

    /// Mode count K (0 for an empty set).
    pub fn k(&self) -> usize {
        self.vehicles.first().map_or(0, |v| v.k())
    }
}

/// Anchor pose from K trajectories: mode 0's position at index ⌊F/2⌋ and
/// the direction of travel there.
///
/// If the trajectory is stationary around the anchor the heading falls
/// back to 0; predictors construct anchors with the vehicle's observed
/// heading as the fallback instead.
pub fn propose_anchor(modes: &[Vec<Point2>]) -> Result<AnchorPose, PredictError> {
    let first = modes.first().ok_or(PredictError::ShapeMismatch("zero modes"))?;
    if first.len() < 2 {
        return Err(PredictError::HorizonTooShort);
    }
    let mid = first.len() / 2;
    Ok(AnchorPose {
        position: first[mid],
        heading: travel_heading(first, mid, None).unwrap_or(0.0),
    })
}

/// Direction of travel at index `idx` of a trajectory: the segment
/// (idx, idx+1), or (idx−1, idx) at the end, scanning backwards past
/// zero-length segments; `origin` acts as the point before index 0.
fn travel_heading(traj: &[Point2], idx: usize, origin: Option<Point2>) -> Option<f64> {
    let point_before = |i: usize| -> Option<Point2> {
        if i == 0 {
            origin
        } else {
            Some(traj[i - 1])
        }
    };
    let mut pairs: Vec<(Point2, Point2)> = Vec::new();
    if idx + 1 < traj.len() {
        pairs.push((traj[idx], traj[idx + 1]));
    }
    let mut i = idx;
    while let Some(prev) = point_before(i) {
        pairs.push((prev, traj[i]));
        if i == 0 {
            break;
        }
        i -= 1;
    }
    for (a, b) in pairs {
        let d = b - a;
        if libm::hypot(d.x, d.y) > 1e-9 {
            return Some(libm::atan2(d.y, d.x));
        }
    }
    None
}

/// Constant-velocity baseline: K identical modes extrapolating the last
/// observed velocity with uniform probabilities.
pub fn predict_cv(
    window: &ObservationWindow,
    config: &PredictorConfig,
) -> Result<PredictionSet, PredictError> {
    config.validate()?;
    let mut vehicles = Vec::with_capacity(window.vehicles.len());
    for v in &window.vehicles {
        let last = last_state(v)?;
        let path = cv_rollout(last.position(), last.vx, last.vy, config.dt, config.horizon);
        vehicles.push(uniform_modes(v, last.position(), last.psi_rad, path, config.modes)?);
    }
    PredictionSet::new(window.issue_frame(), config.horizon, config.dt, vehicles)
}

/// Constant turn-rate-and-velocity baseline. The yaw rate is the
/// least-squares slope of the unwrapped observed headings; below
/// [`OMEGA_EPS`] the rollout degenerates to the constant-velocity form
/// exactly (same arithmetic, bit for bit).
pub fn predict_ctrv(
    window: &ObservationWindow,
    config: &PredictorConfig,
) -> Result<PredictionSet, PredictError> {
    config.validate()?;
    let mut vehicles = Vec::with_capacity(window.vehicles.len());
    for v in &window.vehicles {
        let last = last_state(v)?;
        let omega = yaw_rate_lsq(&v.history, window.dt);
        let path = ctrv_rollout(
            last.position(),
            last.vx,
            last.vy,
            last.psi_rad,
            omega,
            config.dt,
            config.horizon,
        );
        vehicles.push(uniform_modes(v, last.position(), last.psi_rad, path, config.modes)?);
    }
    PredictionSet::new(window.issue_frame(), config.horizon, config.dt, vehicles)
}

/// Map-aware maneuver predictor.
///
/// Generates up to six mode hypotheses per vehicle in fixed slots:
/// keep-lane at current speed, keep-lane braking comfortably, keep-lane
/// accelerating toward the lane limit, merge left, merge right, and a CTRV
/// fallback. Infeasible merges (no adjacency, or the target lane is
/// closed) keep their slot for shape stability but carry probability 0 and
/// duplicate the keep-lane path; feasible modes are weighted by a softmax
/// over negative costs (lateral effort + end-speed deviation from the lane
/// limit + closure pressure on non-merge modes for vehicles in or feeding
/// a closed lane).
pub fn predict_maneuver(
    window: &ObservationWindow,
    map: &LaneletMap,
    config: &PredictorConfig,
) -> Result<PredictionSet, PredictError> {
    config.validate()?;
    let mut vehicles = Vec::with_capacity(window.vehicles.len());
    for v in &window.vehicles {
        vehicles.push(maneuver_vehicle(v, map, config)?);
    }
    PredictionSet::new(window.issue_frame(), config.horizon, config.dt, vehicles)
}

/// Which reference predictor to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    ConstantVelocity,
    ConstantTurnRate,
    Maneuver,
}

impl PredictorKind {
    /// Runs the predictor on one window. `map` is required only by
    /// [`PredictorKind::Maneuver`].
    pub fn run(
        self,
        window: &ObservationWindow,
        map: Option<&LaneletMap>,
        config: &PredictorConfig,
    ) -> Result<PredictionSet, PredictError> {
        match self {
            PredictorKind::ConstantVelocity => predict_cv(window, config),
            PredictorKind::ConstantTurnRate => predict_ctrv(window, config),
            PredictorKind::Maneuver => {
                let map = map.ok_or(PredictError::BadConfig(
                    "maneuver predictor requires a map",
                ))?;
                predict_maneuver(window, map, config)
            }
        }
    }
}

fn last_state(v: &WindowVehicle) -> Result<&crate::traj::TrackPoint, PredictError> {
    v.history.last().ok_or(PredictError::EmptyHistory {
        track_id: v.track_id,
    })
}

fn uniform_modes(
    v: &WindowVehicle,
    origin: Point2,
    heading0: f64,
    path: Vec<Point2>,
    k: usize,
) -> Result<VehiclePrediction, PredictError> {
    let modes = vec![path; k];
    let probs = vec![1.0 / k as f64; k];
    VehiclePrediction::new(
        v.track_id,
        v.agent_type,
        v.current().length,
        v.current().width,
        origin,
        heading0,
        modes,
        probs,
    )
}

fn cv_rollout(origin: Point2, vx: f64, vy: f64, dt: f64, f: usize) -> Vec<Point2> {
    (1..=f)
        .map(|t| {
            let tau = dt * t as f64;
            Point2::new(origin.x + vx * tau, origin.y + vy * tau)
        })
        .collect()
}

/// Closed-form constant turn-rate rollout; `omega` below [`OMEGA_EPS`]
/// falls back to [`cv_rollout`] so the reduction is exact.
fn ctrv_rollout(
    origin: Point2,
    vx: f64,
    vy: f64,
    psi: f64,
    omega: f64,
    dt: f64,
    f: usize,
) -> Vec<Point2> {
    if libm::fabs(omega) < OMEGA_EPS {
        return cv_rollout(origin, vx, vy, dt, f);
    }
    let v = libm::hypot(vx, vy);
    let theta0 = if v > 1e-9 { libm::atan2(vy, vx) } else { psi };
    let r = v / omega;
    let (sin0, cos0) = libm::sincos(theta0);
    (1..=f)
        .map(|t| {
            let theta = theta0 + omega * dt * t as f64;
            let (sin_t, cos_t) = libm::sincos(theta);
            Point2::new(origin.x + r * (sin_t - sin0), origin.y - r * (cos_t - cos0))
        })
        .collect()
}

/// Least-squares slope of the unwrapped heading sequence over time;
/// returns 0 for fewer than two samples.
fn yaw_rate_lsq(history: &[crate::traj::TrackPoint], dt: f64) -> f64 {
    let n = history.len();
    if n < 2 {
        return 0.0;
    }
    let mut unwrapped = Vec::with_capacity(n);
    let mut prev = history[0].psi_rad;
    let mut acc = prev;
    unwrapped.push(acc);
    for p in &history[1..] {
        acc += normalize_angle(p.psi_rad - prev);
        prev = p.psi_rad;
        unwrapped.push(acc);
    }
    let nf = n as f64;
    let t_mean = dt * (nf - 1.0) / 2.0;
    let psi_mean = unwrapped.iter().sum::<f64>() / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, psi) in unwrapped.iter().enumerate() {
        let t = dt * i as f64 - t_mean;
        num += t * (psi - psi_mean);
        den += t * t;
    }
    if den < 1e-12 {
        0.0
    } else {
        num / den
    }
}

/// Softmax of negative costs: exp(−c/temp) normalized. `None` entries
/// (infeasible modes) get exactly 0.
pub(crate) fn softmax_neg_costs(costs: &[Option<f64>], temp: f64) -> Vec<f64> {
    // Shift by the minimum cost for numerical stability; the softmax is
    // invariant under this.
    let min_cost = costs
        .iter()
        .flatten()
        .fold(f64::INFINITY, |a, &b| if b < a { b } else { a });
    let weights: Vec<f64> = costs
        .iter()
        .map(|c| match c {
            Some(c) => libm::exp(-(c - min_cost) / temp),
            None => 0.0,
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    if sum <= 0.0 {
        return weights;
    }
    weights.iter().map(|w| w / sum).collect()
}

/// Longitudinal speed profile for the keep/merge maneuver modes.
#[derive(Clone, Copy)]
enum SpeedProfile {
    Constant { v: f64 },
    /// Brake at `b` until standstill.
    Decelerate { v: f64, b: f64 },
    /// Approach `v_target` with acceleration `a` (or braking `b` when
    /// already above it).
    ApproachLimit { v: f64, a: f64, b: f64, v_target: f64 },
}

impl SpeedProfile {
    /// Distance traveled after `t` seconds.
    fn distance(self, t: f64) -> f64 {
        match self {
            SpeedProfile::Constant { v } => v * t,
            SpeedProfile::Decelerate { v, b } => {
                let t_stop = v / b;
                if t < t_stop {
                    v * t - 0.5 * b * t * t
                } else {
                    v * v / (2.0 * b)
                }
            }
            SpeedProfile::ApproachLimit { v, a, b, v_target } => {
                if v <= v_target {
                    let t_hit = (v_target - v) / a;
                    if t < t_hit {
                        v * t + 0.5 * a * t * t
                    } else {
                        v * t_hit + 0.5 * a * t_hit * t_hit + v_target * (t - t_hit)
                    }
                } else {
                    let t_hit = (v - v_target) / b;
                    if t < t_hit {
                        v * t - 0.5 * b * t * t
                    } else {
                        v * t_hit - 0.5 * b * t_hit * t_hit + v_target * (t - t_hit)
                    }
                }
            }
        }
    }

    /// Speed after `t` seconds.
    fn speed(self, t: f64) -> f64 {
        match self {
            SpeedProfile::Constant { v } => v,
            SpeedProfile::Decelerate { v, b } => (v - b * t).max(0.0),
            SpeedProfile::ApproachLimit { v, a, b, v_target } => {
                if v <= v_target {
                    (v + a * t).min(v_target)
                } else {
                    (v - b * t).max(v_target)
                }
            }
        }
    }
}

/// Lateral offset profile layered on top of a sampled path.
#[derive(Clone, Copy)]
enum OffsetProfile {
    Hold { n0: f64 },
    /// Decay from `n0` to 0 over `ramp` meters of longitudinal travel.
    Decay { n0: f64, ramp: f64 },
}

impl OffsetProfile {
    fn at(self, u: f64) -> f64 {
        match self {
            OffsetProfile::Hold { n0 } => n0,
            OffsetProfile::Decay { n0, ramp } => n0 * (1.0 - map::smoothstep(u / ramp)),
        }
    }
}

struct ManeuverSlot {
    strategy: MergeStrategy,
    profile: SpeedProfile,
    offset: OffsetProfile,
    cost: f64,
}

fn maneuver_vehicle(
    v: &WindowVehicle,
    map: &LaneletMap,
    config: &PredictorConfig,
) -> Result<VehiclePrediction, PredictError> {
    let last = last_state(v)?;
    let origin = last.position();
    let speed = last.speed();
    let heading_v = if speed > 0.1 {
        libm::atan2(last.vy, last.vx)
    } else {
        last.psi_rad
    };
    let proj = map
        .project(origin, heading_v)
        .map_err(|_| PredictError::OffMap { track_id: v.track_id })?;
    let lanelet = map.get(proj.lanelet_id).expect("projection returns a valid id");
    let lat0 = proj.lateral_offset;

    // Signed lateral speed relative to the lane (+ = leftward).
    let lat_rate = speed * libm::sin(normalize_angle(heading_v - proj.heading_of_lane));
    // A vehicle visibly gliding toward the centerline keeps doing so in the
    // keep modes; otherwise the current offset is held.
    let moving_inward = libm::fabs(lat_rate) > 0.15
        && libm::fabs(lat0) > 0.05
        && lat_rate * lat0 < 0.0;
    let keep_offset = if moving_inward {
        let ramp = (speed * libm::fabs(lat0) / libm::fabs(lat_rate)).clamp(5.0, 100.0);
        OffsetProfile::Decay { n0: lat0, ramp }
    } else {
        OffsetProfile::Hold { n0: lat0 }
    };
    let keep_lat_cost = if moving_inward {
        config.lat_effort_weight * libm::fabs(lat0)
    } else {
        0.0
    };

    // Closure pressure pushes probability away from staying in a lane that
    // ends ahead: applied to every non-merge mode.
    let d_taper = if lanelet.closed {
        Some(0.0)
    } else {
        lanelet.taper_start_s.map(|ts| (ts - proj.s).max(0.0))
    };
    let pressure = d_taper.map_or(0.0, |d| config.closure_weight / (d + 10.0));

    let merge_len = (speed * config.merge_duration_s).max(config.min_merge_len_m);
    let horizon_t = config.horizon as f64 * config.dt;
    let speed_dev = |target_limit: f64, profile: SpeedProfile| {
        config.speed_dev_weight * libm::fabs(profile.speed(horizon_t) - target_limit)
    };

    let mut slots: Vec<Option<ManeuverSlot>> = Vec::with_capacity(config.modes);
    for slot_idx in 0..config.modes {
        let slot = match slot_idx {
            0 => {
                let profile = SpeedProfile::Constant { v: speed };
                Some(ManeuverSlot {
                    strategy: MergeStrategy::Keep,
                    profile,
                    offset: keep_offset,
                    cost: keep_lat_cost + speed_dev(lanelet.speed_limit, profile) + pressure,
                })
            }
            1 => {
                let profile = SpeedProfile::Decelerate {
                    v: speed,
                    b: config.comfort_decel,
                };
                Some(ManeuverSlot {
                    strategy: MergeStrategy::Keep,
                    profile,
                    offset: keep_offset,
                    cost: keep_lat_cost + speed_dev(lanelet.speed_limit, profile) + pressure,
                })
            }
            2 => {
                let profile = SpeedProfile::ApproachLimit {
                    v: speed,
                    a: config.comfort_accel,
                    b: config.comfort_decel,
                    v_target: lanelet.speed_limit,
                };
                Some(ManeuverSlot {
                    strategy: MergeStrategy::Keep,
                    profile,
                    offset: keep_offset,
                    cost: keep_lat_cost + speed_dev(lanelet.speed_limit, profile) + pressure,
                })
            }
            3 | 4 => {
                let (strategy, adjacent) = if slot_idx == 3 {
                    (MergeStrategy::MergeLeft, lanelet.adjacent_left)
                } else {
                    (MergeStrategy::MergeRight, lanelet.adjacent_right)
                };
                adjacent
                    .and_then(|id| map.get(id))
                    .filter(|target| !target.closed)
                    .map(|target| {
                        let spacing = lane_spacing(map, &proj, target.id);
                        let profile = SpeedProfile::Constant { v: speed };
                        ManeuverSlot {
                            strategy,
                            profile,
                            offset: OffsetProfile::Decay {
                                n0: lat0,
                                ramp: merge_len,
                            },
                            cost: config.lat_effort_weight * spacing
                                + speed_dev(target.speed_limit, profile),
                        }
                    })
            }
            5 => None, // CTRV fallback handled below (no path sampling).
            _ => None,
        };
        slots.push(slot);
    }

    // Realize paths. The CTRV slot needs no map path; infeasible slots
    // duplicate the keep-lane trajectory later.
    let mut trajectories: Vec<Option<Vec<Point2>>> = Vec::with_capacity(config.modes);
    let mut costs: Vec<Option<f64>> = Vec::with_capacity(config.modes);
    for (slot_idx, slot) in slots.iter().enumerate() {
        if slot_idx == 5 && slot_idx < config.modes {
            let omega = yaw_rate_lsq(&v.history, config.dt);
            let path = ctrv_rollout(
                origin,
                last.vx,
                last.vy,
                last.psi_rad,
                omega,
                config.dt,
                config.horizon,
            );
            let profile = SpeedProfile::Constant { v: speed };
            trajectories.push(Some(path));
            costs.push(Some(speed_dev(lanelet.speed_limit, profile) + pressure));
            continue;
        }
        match slot {
            Some(m) => {
                let reach = m.profile.distance(horizon_t) + 2.0;
                match map.sample_path(&proj, m.strategy, reach.max(1.0), merge_len) {
                    Ok(path) => {
                        trajectories.push(Some(rollout_on_path(
                            &path, m.profile, m.offset, config.dt, config.horizon,
                        )));
                        costs.push(Some(m.cost));
                    }
                    Err(MapError::InfeasibleStrategy { .. }) => {
                        trajectories.push(None);
                        costs.push(None);
                    }
                    Err(_) => return Err(PredictError::OffMap { track_id: v.track_id }),
                }
            }
            None => {
                trajectories.push(None);
                costs.push(None);
            }
        }
    }

    let probs = softmax_neg_costs(&costs, config.softmax_temp);
    let fallback = trajectories
        .iter()
        .flatten()
        .next()
        .cloned()
        .unwrap_or_else(|| cv_rollout(origin, last.vx, last.vy, config.dt, config.horizon));
    let modes: Vec<Vec<Point2>> = trajectories
        .into_iter()
        .map(|t| t.unwrap_or_else(|| fallback.clone()))
        .collect();

    VehiclePrediction::new(
        v.track_id,
        v.agent_type,
        last.length,
        last.width,
        origin,
        last.psi_rad,
        modes,
        probs,
    )
}

/// Distance from the projection's centerline point to the adjacent lane's
/// centerline — the lateral displacement a merge must cover.
fn lane_spacing(map: &LaneletMap, proj: &crate::map::LaneProjection, target_id: u32) -> f64 {
    let src = map.get(proj.lanelet_id).expect("validated id");
    let here = src.point_at_s(proj.s);
    let target = map.get(target_id).expect("validated id");
    let mut best = f64::INFINITY;
    let cl = target.centerline();
    for i in 0..cl.len().saturating_sub(1) {
        let a = cl[i];
        let b = cl[i + 1];
        let ab = b - a;
        let len_sq = ab.x * ab.x + ab.y * ab.y;
        if len_sq < 1e-18 {
            continue;
        }
        let t = (((here.x - a.x) * ab.x + (here.y - a.y) * ab.y) / len_sq).clamp(0.0, 1.0);
        let d = here.dist(a + ab * t);
        if d < best {
            best = d;
        }
    }
    best
}

/// Samples F positions along `path` under a speed profile, displaced
/// laterally by the offset profile.
fn rollout_on_path(
    path: &[Point2],
    profile: SpeedProfile,
    offset: OffsetProfile,
    dt: f64,
    f: usize,
) -> Vec<Point2> {
    let cum = map::polyline_cum(path);
    (1..=f)
        .map(|t| {
            let u = profile.distance(dt * t as f64);
            let p = map::polyline_point_at(path, &cum, u);
            let h = map::polyline_heading_at(path, &cum, u);
            // The left normal of the travel direction is (−sin h, cos h).
            let n = offset.at(u);
            Point2::new(p.x - n * libm::sin(h), p.y + n * libm::cos(h))
        })
        .collect()
}
