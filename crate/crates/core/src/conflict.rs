//! Conflict scoring and warning generation.
//!
//! Pairwise box distances map to probabilities through an exponential
//! decay P = exp(-d/λ). A pair is a *conflict* when d < dist_threshold
//! and *high-risk* when P > prob_threshold; warnings require both. The
//! default λ is chosen so the two criteria coincide exactly at the
//! 7 m / 0.70 operating point.

use alloc::vec::Vec;

use crate::geometry::{box_points, min_point_set_distance, BoxPointSet, OrientedBox, Point2};
use crate::predict::{PredictionSet, VehiclePrediction};

pub const DEFAULT_DIST_THRESHOLD: f64 = 7.0;
pub const DEFAULT_PROB_THRESHOLD: f64 = 0.70;

/// λ such that exp(-dist_threshold/λ) = prob_threshold.
pub fn consistent_lambda(dist_threshold: f64, prob_threshold: f64) -> f64 {
    -dist_threshold / libm::log(prob_threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictError {
    InvalidLambda,
    InvalidDistanceThreshold,
    InvalidProbabilityThreshold,
}

impl core::fmt::Display for ConflictError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConflictError::InvalidLambda => write!(f, "decay constant must be finite and > 0"),
            ConflictError::InvalidDistanceThreshold => {
                write!(f, "distance threshold must be finite and > 0")
            }
            ConflictError::InvalidProbabilityThreshold => {
                write!(f, "probability threshold must lie strictly between 0 and 1")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConflictParams {
    /// Decay constant λ of P = exp(-d/λ), in meters.
    pub lambda: f64,
    /// Spatial threshold δ_d in meters; conflict iff d < δ_d.
    pub dist_threshold: f64,
    /// Probability threshold δ_P; high-risk iff P > δ_P.
    pub prob_threshold: f64,
}

impl Default for ConflictParams {
    fn default() -> Self {
        ConflictParams {
            lambda: consistent_lambda(DEFAULT_DIST_THRESHOLD, DEFAULT_PROB_THRESHOLD),
            dist_threshold: DEFAULT_DIST_THRESHOLD,
            prob_threshold: DEFAULT_PROB_THRESHOLD,
        }
    }
}

impl ConflictParams {
    pub fn validate(&self) -> Result<(), ConflictError> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(ConflictError::InvalidLambda);
        }
        if !(self.dist_threshold.is_finite() && self.dist_threshold > 0.0) {
            return Err(ConflictError::InvalidDistanceThreshold);
        }
        if !(self.prob_threshold > 0.0 && self.prob_threshold < 1.0) {
            return Err(ConflictError::InvalidProbabilityThreshold);
        }
        Ok(())
    }
}

/// P = exp(-d/λ). Strictly decreasing in d, 1 at d = 0.
pub fn conflict_probability(d: f64, lambda: f64) -> Result<f64, ConflictError> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(ConflictError::InvalidLambda);
    }
    Ok(libm::exp(-d / lambda))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictRecord {
    pub frame_id: u32,
    /// 1-based index into the prediction horizon.
    pub horizon_step: usize,
    pub track_i: u32,
    pub track_j: u32,
    pub distance_m: f64,
    pub probability: f64,
    pub is_conflict: bool,
    pub is_high_risk: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarningRecord {
    pub issue_frame: u32,
    /// Earliest horizon step at which the pair crossed both thresholds.
    pub horizon_step: usize,
    pub track_i: u32,
    pub track_j: u32,
    pub distance_m: f64,
    pub probability: f64,
}

fn make_record(
    frame_id: u32,
    horizon_step: usize,
    track_i: u32,
    track_j: u32,
    distance_m: f64,
    probability: f64,
    params: &ConflictParams,
) -> ConflictRecord {
    let (track_i, track_j) = if track_i <= track_j {
        (track_i, track_j)
    } else {
        (track_j, track_i)
    };
    ConflictRecord {
        frame_id,
        horizon_step,
        track_i,
        track_j,
        distance_m,
        probability,
        is_conflict: distance_m < params.dist_threshold,
        is_high_risk: probability > params.prob_threshold,
    }
}

/// Scores every unordered vehicle pair at one frame and horizon step.
/// Fewer than two vehicles yields an empty list.
pub fn evaluate_pairs(
    frame_id: u32,
    horizon_step: usize,
    boxes: &[(u32, OrientedBox)],
    params: &ConflictParams,
) -> Vec<ConflictRecord> {
    let sets: Vec<(u32, BoxPointSet)> = boxes
        .iter()
        .map(|(id, b)| (*id, box_points(b)))
        .collect();
    let mut records = Vec::with_capacity(sets.len().saturating_sub(1) * sets.len() / 2);
    for i in 0..sets.len() {
        for j in (i + 1)..sets.len() {
            let d = min_point_set_distance(&sets[i].1, &sets[j].1);
            let p = libm::exp(-d / params.lambda);
            records.push(make_record(
                frame_id,
                horizon_step,
                sets[i].0,
                sets[j].0,
                d,
                p,
                params,
            ));
        }
    }
    records.sort_by_key(|r| (r.track_i, r.track_j));
    records
}

/// How multi-modal predictions collapse to one pairwise distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ModePolicy {
    /// Minimum distance over all K×K mode combinations (conservative).
    #[default]
    WorstCase,
    /// Distance between each vehicle's most-probable mode only.
    BestMode,
    /// Probability-weighted mean of exp(-d/λ) over mode combinations;
    /// the recorded distance is the matching effective distance -λ·ln P.
    Expected,
}

/// Heading of motion arriving at each trajectory step, seeded by the
/// vehicle's current heading for stationary prefixes.
fn step_headings(origin: Point2, heading0: f64, traj: &[Point2]) -> Vec<f64> {
    let mut prev = origin;
    let mut heading = heading0;
    let mut out = Vec::with_capacity(traj.len());
    for p in traj {
        let dx = p.x - prev.x;
        let dy = p.y - prev.y;
        if dx * dx + dy * dy > 1e-18 {
            heading = libm::atan2(dy, dx);
        }
        out.push(heading);
        prev = *p;
    }
    out
}

/// Box point sets for one vehicle: `[mode][step]`.
fn vehicle_point_sets(v: &VehiclePrediction) -> Vec<Vec<BoxPointSet>> {
    v.modes
        .iter()
        .map(|mode| {
            let headings = step_headings(v.origin, v.heading0, mode);
            mode.iter()
                .zip(headings.iter())
                .map(|(p, h)| box_points(&OrientedBox::new(*p, *h, v.length, v.width)))
                .collect()
        })
        .collect()
}

fn argmax_prob(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, p) in probs.iter().enumerate() {
        if *p > probs[best] {
            best = i;
        }
    }
    best
}

/// Evaluates every pair at every horizon step of one prediction set and
/// issues at most one warning per pair, at the earliest step where the
/// pair is both a conflict and high-risk. Conflict records come back
/// sorted by (frame, step, i, j).
pub fn generate_warnings(
    predictions: &PredictionSet,
    params: &ConflictParams,
    mode_policy: ModePolicy,
) -> (Vec<ConflictRecord>, Vec<WarningRecord>) {
    let n = predictions.vehicles.len();
    if n < 2 {
        return (Vec::new(), Vec::new());
    }
    // Sort vehicle indices by track id so pair iteration is (i < j) in id
    // order without re-sorting the records afterwards.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| predictions.vehicles[i].track_id);

    let sets: Vec<Vec<Vec<BoxPointSet>>> = predictions
        .vehicles
        .iter()
        .map(vehicle_point_sets)
        .collect();
    let best_mode: Vec<usize> = predictions
        .vehicles
        .iter()
        .map(|v| argmax_prob(&v.mode_probs))
        .collect();

    let f = predictions.horizon;
    let mut conflicts = Vec::with_capacity(f * n * (n - 1) / 2);
    let mut warned = alloc::vec![false; n * (n - 1) / 2];
    let mut warnings = Vec::new();

    for step in 1..=f {
        let s = step - 1;
        let mut pair_idx = 0;
        for a in 0..n {
            for b in (a + 1)..n {
                let (vi, vj) = (order[a], order[b]);
                let (pi, pj) = (&predictions.vehicles[vi], &predictions.vehicles[vj]);
                let (d, p) = match mode_policy {
                    ModePolicy::WorstCase => {
                        let mut d = f64::INFINITY;
                        for mi in &sets[vi] {
                            for mj in &sets[vj] {
                                let cand = min_point_set_distance(&mi[s], &mj[s]);
                                if cand < d {
                                    d = cand;
                                }
                            }
                        }
                        (d, libm::exp(-d / params.lambda))
                    }
                    ModePolicy::BestMode => {
                        let d = min_point_set_distance(
                            &sets[vi][best_mode[vi]][s],
                            &sets[vj][best_mode[vj]][s],
                        );
                        (d, libm::exp(-d / params.lambda))
                    }
                    ModePolicy::Expected => {
                        let mut acc = 0.0;
                        for (mi, wi) in sets[vi].iter().zip(pi.mode_probs.iter()) {
                            for (mj, wj) in sets[vj].iter().zip(pj.mode_probs.iter()) {
                                let dij = min_point_set_distance(&mi[s], &mj[s]);
                                acc += wi * wj * libm::exp(-dij / params.lambda);
                            }
                        }
                        // Effective distance keeps probability
                        // reconstructible from the record alone.
                        let d = -params.lambda * libm::log(acc);
                        (d, libm::exp(-d / params.lambda))
                    }
                };
                let rec = make_record(
                    predictions.frame_id,
                    step,
                    pi.track_id,
                    pj.track_id,
                    d,
                    p,
                    params,
                );
                if rec.is_conflict && rec.is_high_risk && !warned[pair_idx] {
                    warned[pair_idx] = true;
                    warnings.push(WarningRecord {
                        issue_frame: predictions.frame_id,
                        horizon_step: step,
                        track_i: rec.track_i,
                        track_j: rec.track_j,
                        distance_m: rec.distance_m,
                        probability: rec.probability,
                    });
                }
                conflicts.push(rec);
                pair_idx += 1;
            }
        }
    }
    (conflicts, warnings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::PredictionSet;
    use crate::traj::AgentType;
    use alloc::vec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn probability_anchors() {
        let lambda = ConflictParams::default().lambda;
        assert_eq!(conflict_probability(0.0, lambda).unwrap(), 1.0);
        assert_abs_diff_eq!(
            conflict_probability(lambda, lambda).unwrap(),
            core::f64::consts::E.recip(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(conflict_probability(7.0, lambda).unwrap(), 0.70, epsilon = 1e-12);
        // λ = 7/ln(1/0.7) = 19.62571..., evaluated independently; the
        // rounded λ = 19.6180 still hits the operating point within 1e-4.
        assert_abs_diff_eq!(lambda, 19.6257128, epsilon = 1e-6);
        assert_abs_diff_eq!(
            conflict_probability(7.0, 19.6180).unwrap(),
            0.70,
            epsilon = 1e-4
        );
        assert_abs_diff_eq!(
            conflict_probability(1.0, 19.6180).unwrap(),
            0.9503,
            epsilon = 5e-4
        );
    }

    #[test]
    fn invalid_lambda_rejected() {
        assert_eq!(
            conflict_probability(1.0, 0.0).unwrap_err(),
            ConflictError::InvalidLambda
        );
        assert_eq!(
            conflict_probability(1.0, -3.0).unwrap_err(),
            ConflictError::InvalidLambda
        );
        assert_eq!(
            conflict_probability(1.0, f64::NAN).unwrap_err(),
            ConflictError::InvalidLambda
        );
        let p = ConflictParams {
            prob_threshold: 1.0,
            ..ConflictParams::default()
        };
        assert_eq!(
            p.validate().unwrap_err(),
            ConflictError::InvalidProbabilityThreshold
        );
        assert!(ConflictParams::default().validate().is_ok());
    }

    fn car_box(x: f64, y: f64, heading: f64) -> OrientedBox {
        OrientedBox::new(Point2::new(x, y), heading, 4.5, 1.8)
    }

    #[test]
    fn pair_count_is_n_choose_2() {
        let params = ConflictParams::default();
        let boxes = vec![
            (3u32, car_box(0.0, 0.0, 0.0)),
            (1u32, car_box(20.0, 0.0, 0.0)),
            (2u32, car_box(40.0, 0.0, 0.0)),
        ];
        let recs = evaluate_pairs(5, 1, &boxes, &params);
        assert_eq!(recs.len(), 3);
        let pairs: Vec<(u32, u32)> = recs.iter().map(|r| (r.track_i, r.track_j)).collect();
        assert_eq!(pairs, vec![(1, 2), (1, 3), (2, 3)]);
        assert!(recs.iter().all(|r| r.track_i < r.track_j));
        assert!(evaluate_pairs(5, 1, &boxes[..1], &params).is_empty());
        assert!(evaluate_pairs(5, 1, &[], &params).is_empty());
    }

    #[test]
    fn close_pair_flags_both_criteria() {
        let params = ConflictParams::default();
        // Bumper-to-bumper gap: centers 5.5 m apart, half-lengths 2.25 each.
        let boxes = vec![
            (1u32, car_box(0.0, 0.0, 0.0)),
            (2u32, car_box(5.5, 0.0, 0.0)),
        ];
        let recs = evaluate_pairs(1, 1, &boxes, &params);
        assert_abs_diff_eq!(recs[0].distance_m, 1.0, epsilon = 1e-12);
        assert!(recs[0].is_conflict);
        assert!(recs[0].is_high_risk);
        assert_abs_diff_eq!(recs[0].probability, 0.9503, epsilon = 5e-4);
        // Record invariant: probability is exactly exp(-d/λ).
        assert_eq!(
            recs[0].probability,
            libm::exp(-recs[0].distance_m / params.lambda)
        );
    }

    #[test]
    fn far_pair_flags_nothing() {
        let params = ConflictParams::default();
        let boxes = vec![
            (1u32, car_box(0.0, 0.0, 0.0)),
            (2u32, car_box(100.0, 0.0, 0.0)),
        ];
        let recs = evaluate_pairs(1, 1, &boxes, &params);
        assert!(!recs[0].is_conflict);
        assert!(!recs[0].is_high_risk);
    }

    #[test]
    fn default_lambda_makes_criteria_coincide() {
        let params = ConflictParams::default();
        for d in [0.0, 1.0, 6.9, 6.999, 7.0, 7.001, 10.0, 50.0] {
            let p = conflict_probability(d, params.lambda).unwrap();
            assert_eq!(
                d < params.dist_threshold,
                p > params.prob_threshold,
                "criteria disagree at d={}",
                d
            );
        }
    }

    /// Two vehicles closing head-on at 10 m/s each along x; modes are a
    /// single straight line so every policy sees the same geometry.
    fn converging_set(k_modes: usize) -> PredictionSet {
        let f = 30;
        let dt = 0.1;
        let mk = |x0: f64, vx: f64, id: u32| {
            let mode: Vec<Point2> = (1..=f)
                .map(|i| Point2::new(x0 + vx * dt * i as f64, 0.0))
                .collect();
            VehiclePrediction::new(
                id,
                AgentType::Car,
                4.5,
                1.8,
                Point2::new(x0, 0.0),
                if vx >= 0.0 { 0.0 } else { core::f64::consts::PI },
                vec![mode; k_modes],
                vec![1.0 / k_modes as f64; k_modes],
            )
            .unwrap()
        };
        PredictionSet::new(12, f, dt, vec![mk(0.0, 10.0, 1), mk(40.0, -10.0, 2)]).unwrap()
    }

    #[test]
    fn warning_at_first_dual_threshold_step() {
        let params = ConflictParams::default();
        let set = converging_set(1);
        let (conflicts, warnings) = generate_warnings(&set, &params, ModePolicy::WorstCase);
        assert_eq!(conflicts.len(), 30);
        assert_eq!(warnings.len(), 1);
        let w = &warnings[0];
        assert_eq!((w.track_i, w.track_j), (1, 2));
        assert_eq!(w.issue_frame, 12);
        // Gap closes at 20 m/s from 40 - 4.5 = 35.5 m; drops below 7 m
        // strictly after step ceil((35.5-7)/2) = 15, i.e. at step 15 the
        // gap is 5.5 m. First conflict record check:
        let first = conflicts
            .iter()
            .find(|r| r.is_conflict && r.is_high_risk)
            .unwrap();
        assert_eq!(w.horizon_step, first.horizon_step);
        assert_eq!(w.horizon_step, 15);
        assert_abs_diff_eq!(w.distance_m, 5.5, epsilon = 1e-9);
        // No duplicate warnings for later qualifying steps.
        let qualifying = conflicts.iter().filter(|r| r.is_conflict && r.is_high_risk).count();
        assert!(qualifying > 1);
    }

    /// Like `converging_set` but the vehicles pass on offset lines with a
    /// 1 m lateral box gap at closest approach, so P never exceeds ~0.95.
    fn near_miss_set() -> PredictionSet {
        let f = 30;
        let dt = 0.1;
        let mk = |x0: f64, y0: f64, vx: f64, id: u32| {
            let mode: Vec<Point2> = (1..=f)
                .map(|i| Point2::new(x0 + vx * dt * i as f64, y0))
                .collect();
            VehiclePrediction::new(
                id,
                AgentType::Car,
                4.5,
                1.8,
                Point2::new(x0, y0),
                if vx >= 0.0 { 0.0 } else { core::f64::consts::PI },
                vec![mode],
                vec![1.0],
            )
            .unwrap()
        };
        PredictionSet::new(
            12,
            f,
            dt,
            vec![mk(0.0, 0.0, 10.0, 1), mk(40.0, 2.8, -10.0, 2)],
        )
        .unwrap()
    }

    #[test]
    fn strict_probability_filter_suppresses_warnings() {
        let params = ConflictParams {
            prob_threshold: 0.99,
            ..ConflictParams::default()
        };
        let set = near_miss_set();
        let (conflicts, warnings) = generate_warnings(&set, &params, ModePolicy::WorstCase);
        assert!(conflicts.iter().any(|r| r.is_conflict));
        assert!(warnings.is_empty());
        // Sanity: with the default threshold the same scene does warn.
        let (_, w) = generate_warnings(&set, &ConflictParams::default(), ModePolicy::WorstCase);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn diverging_vehicles_urge_nothing() {
        let params = ConflictParams::default();
        let f = 10;
        let mk = |x0: f64, vx: f64, id: u32| {
            let mode: Vec<Point2> = (1..=f)
                .map(|i| Point2::new(x0 + vx * 0.1 * i as f64, 0.0))
                .collect();
            VehiclePrediction::new(
                id,
                AgentType::Car,
                4.5,
                1.8,
                Point2::new(x0, 0.0),
                0.0,
                vec![mode],
                vec![1.0],
            )
            .unwrap()
        };
        let set = PredictionSet::new(1, f, 0.1, vec![mk(0.0, -5.0, 1), mk(30.0, 5.0, 2)]).unwrap();
        let (conflicts, warnings) = generate_warnings(&set, &params, ModePolicy::WorstCase);
        assert!(conflicts.iter().all(|r| !r.is_conflict && !r.is_high_risk));
        assert!(warnings.is_empty());
    }

    #[test]
    fn records_sorted_by_step_then_pair() {
        let params = ConflictParams::default();
        let set = converging_set(2);
        let (conflicts, _) = generate_warnings(&set, &params, ModePolicy::WorstCase);
        for w in conflicts.windows(2) {
            let a = (w[0].horizon_step, w[0].track_i, w[0].track_j);
            let b = (w[1].horizon_step, w[1].track_i, w[1].track_j);
            assert!(a <= b);
        }
    }

    #[test]
    fn expected_policy_preserves_record_invariant() {
        let params = ConflictParams::default();
        // Two-mode split: one mode stays near, one far; expected P lies
        // between the per-mode extremes.
        let f = 5;
        let near: Vec<Point2> = (1..=f).map(|i| Point2::new(i as f64, 0.0)).collect();
        let far: Vec<Point2> = (1..=f).map(|i| Point2::new(i as f64, 60.0)).collect();
        let v1 = VehiclePrediction::new(
            1,
            AgentType::Car,
            4.5,
            1.8,
            Point2::new(0.0, 0.0),
            0.0,
            vec![near.clone(), far],
            vec![0.5, 0.5],
        )
        .unwrap();
        let shifted: Vec<Point2> = near.iter().map(|p| Point2::new(p.x, 3.0)).collect();
        let v2 = VehiclePrediction::new(
            2,
            AgentType::Car,
            4.5,
            1.8,
            Point2::new(0.0, 3.0),
            0.0,
            vec![shifted.clone(), shifted],
            vec![0.5, 0.5],
        )
        .unwrap();
        let set = PredictionSet::new(3, f, 0.1, vec![v1, v2]).unwrap();
        let (conflicts, _) = generate_warnings(&set, &params, ModePolicy::Expected);
        for r in &conflicts {
            assert_eq!(r.probability, libm::exp(-r.distance_m / params.lambda));
            assert!(r.probability > 0.0 && r.probability <= 1.0);
        }
        // Worst-case distance is at most the expected-policy distance.
        let (worst, _) = generate_warnings(&set, &params, ModePolicy::WorstCase);
        for (w, e) in worst.iter().zip(conflicts.iter()) {
            assert!(w.distance_m <= e.distance_m + 1e-12);
        }
    }

    #[test]
    fn best_mode_policy_uses_most_probable_mode() {
        let params = ConflictParams::default();
        let f = 4;
        let near: Vec<Point2> = (1..=f).map(|i| Point2::new(i as f64, 0.0)).collect();
        let far: Vec<Point2> = (1..=f).map(|i| Point2::new(i as f64, 80.0)).collect();
        // Most-probable mode is the far one, so best-mode sees no conflict
        // even though worst-case does.
        let v1 = VehiclePrediction::new(
            1,
            AgentType::Car,
            4.5,
            1.8,
            Point2::new(0.0, 0.0),
            0.0,
            vec![near.clone(), far],
            vec![0.2, 0.8],
        )
        .unwrap();
        let shifted: Vec<Point2> = near.iter().map(|p| Point2::new(p.x, 2.5)).collect();
        let v2 = VehiclePrediction::new(
            2,
            AgentType::Car,
            4.5,
            1.8,
            Point2::new(0.0, 2.5),
            0.0,
            vec![shifted.clone(), shifted],
            vec![0.5, 0.5],
        )
        .unwrap();
        let set = PredictionSet::new(2, f, 0.1, vec![v1, v2]).unwrap();
        let (best, warn_best) = generate_warnings(&set, &params, ModePolicy::BestMode);
        assert!(best.iter().all(|r| !r.is_conflict));
        assert!(warn_best.is_empty());
        let (_, warn_worst) = generate_warnings(&set, &params, ModePolicy::WorstCase);
        assert_eq!(warn_worst.len(), 1);
    }

    proptest! {
        #[test]
        fn probability_monotone_in_distance(
            d1 in 0.0..500.0f64,
            delta in 1e-9..100.0f64,
            // keep d/λ well clear of exp underflow so strict ordering is
            // observable in f64
            lambda in 2.0..100.0f64,
        ) {
            let p1 = conflict_probability(d1, lambda).unwrap();
            let p2 = conflict_probability(d1 + delta, lambda).unwrap();
            prop_assert!(p2 < p1);
            prop_assert!(p1 <= 1.0 && p2 > 0.0);
        }

        /// evaluate_pairs is symmetric: reversing input order changes
        /// nothing about the emitted records.
        #[test]
        fn pair_order_invariance(x in -50.0..50.0f64, y in -10.0..10.0f64, h in -3.0..3.0f64) {
            let params = ConflictParams::default();
            let a = (1u32, car_box(0.0, 0.0, 0.3));
            let b = (2u32, car_box(x, y, h));
            let fwd = evaluate_pairs(1, 1, &[a, b], &params);
            let rev = evaluate_pairs(1, 1, &[b, a], &params);
            prop_assert_eq!(fwd, rev);
        }
    }
}
