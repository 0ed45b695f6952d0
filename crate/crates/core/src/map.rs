//! Minimal lanelet-style map: polyline lane boundaries with derived
//! centerlines, adjacency/closure annotations, arc-length projection, and
//! centerline path sampling for the maneuver predictor and simulator.
//!
//! Centerlines are derived by resampling both boundaries to a common point
//! count (about one point per 0.5 m) and averaging index-matched points.
//! All queries are read-only; the map is immutable after construction.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{normalize_angle, Point2};

/// Target spacing of derived centerline points, meters.
pub const RESAMPLE_SPACING: f64 = 0.5;
/// Maximum centerline distance for projection candidates, meters.
pub const PROJECTION_CUTOFF: f64 = 10.0;
/// Weight converting heading mismatch (rad) into the projection score (m).
pub const HEADING_WEIGHT: f64 = 5.0;
/// Lateral tolerance beyond the local half-width for projections, meters.
pub const LATERAL_TOLERANCE: f64 = 2.0;
/// Default longitudinal length of a merge blend, meters.
pub const DEFAULT_MERGE_LENGTH: f64 = 40.0;

/// Raw lanelet description prior to validation/derivation (mirrors the
/// JSON map schema handled by the companion crate).
#[derive(Debug, Clone, PartialEq)]
pub struct LaneletSpec {
    pub id: u32,
    pub left: Vec<Point2>,
    pub right: Vec<Point2>,
    pub successors: Vec<u32>,
    pub adjacent_left: Option<u32>,
    pub adjacent_right: Option<u32>,
    pub speed_limit: f64,
    pub closed: bool,
    /// Arc length (from this lanelet's start) where the downstream closure
    /// taper begins; may exceed this lanelet's own length.
    pub taper_start_s: Option<f64>,
    pub taper_end_s: Option<f64>,
}

/// A validated lanelet with its derived centerline geometry.
#[derive(Debug, Clone)]
pub struct Lanelet {
    pub id: u32,
    pub left: Vec<Point2>,
    pub right: Vec<Point2>,
    pub successors: Vec<u32>,
    pub adjacent_left: Option<u32>,
    pub adjacent_right: Option<u32>,
    pub speed_limit: f64,
    pub closed: bool,
    pub taper_start_s: Option<f64>,
    pub taper_end_s: Option<f64>,
    centerline: Vec<Point2>,
    cum_s: Vec<f64>,
    half_widths: Vec<f64>,
    length: f64,
}

impl Lanelet {
    pub fn centerline(&self) -> &[Point2] {
        &self.centerline
    }

    /// Centerline arc length, meters.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Centerline point at arc length `s` (clamped to [0, length]).
    pub fn point_at_s(&self, s: f64) -> Point2 {
        sample_polyline(&self.centerline, &self.cum_s, s)
    }

    /// Centerline heading at arc length `s`.
    pub fn heading_at_s(&self, s: f64) -> f64 {
        let i = segment_index(&self.cum_s, s);
        let d = self.centerline[i + 1] - self.centerline[i];
        libm::atan2(d.y, d.x)
    }

    /// Half of the local lane width at arc length `s`.
    pub fn half_width_at(&self, s: f64) -> f64 {
        sample_scalar(&self.half_widths, &self.cum_s, s)
    }
}

/// Frenet-style projection of a point onto a lanelet centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneProjection {
    pub lanelet_id: u32,
    /// Arc length along the centerline, meters.
    pub s: f64,
    /// Signed lateral offset, meters; left of the centerline is positive.
    pub lateral_offset: f64,
    pub heading_of_lane: f64,
}

/// Lateral maneuver hypothesis for path sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MergeStrategy {
    Keep,
    MergeLeft,
    MergeRight,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapError {
    DuplicateId { id: u32 },
    UnknownLanelet { referenced_by: u32, id: u32 },
    AsymmetricAdjacency { a: u32, b: u32 },
    DegenerateBoundary { id: u32 },
    BadTaper { id: u32 },
    MissingTaper { feeder: u32, closed: u32 },
    OffMap,
    InfeasibleStrategy { lanelet: u32 },
}

impl core::fmt::Display for MapError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MapError::DuplicateId { id } => write!(f, "duplicate lanelet id {}", id),
            MapError::UnknownLanelet { referenced_by, id } => {
                write!(f, "lanelet {} references unknown lanelet {}", referenced_by, id)
            }
            MapError::AsymmetricAdjacency { a, b } => {
                write!(f, "adjacency between lanelets {} and {} is not symmetric", a, b)
            }
            MapError::DegenerateBoundary { id } => {
                write!(f, "lanelet {} has degenerate or crossing boundaries", id)
            }
            MapError::BadTaper { id } => {
                write!(f, "lanelet {}: taper_end_s must exceed taper_start_s", id)
            }
            MapError::MissingTaper { feeder, closed } => write!(
                f,
                "lanelet {} feeds closed lanelet {} but carries no taper annotation",
                feeder, closed
            ),
            MapError::OffMap => write!(f, "point projects onto no lanelet within 10 m"),
            MapError::InfeasibleStrategy { lanelet } => {
                write!(f, "maneuver infeasible from lanelet {}", lanelet)
            }
        }
    }
}

/// An immutable collection of lanelets with validated cross-references.
#[derive(Debug, Clone)]
pub struct LaneletMap {
    lanelets: Vec<Lanelet>,
}

impl LaneletMap {
    /// Validates the specs, derives centerlines, and builds the map.
    pub fn from_specs(specs: Vec<LaneletSpec>) -> Result<Self, MapError> {
        let mut lanelets: Vec<Lanelet> = Vec::with_capacity(specs.len());
        for spec in specs {
            if lanelets.iter().any(|l| l.id == spec.id) {
                return Err(MapError::DuplicateId { id: spec.id });
            }
            lanelets.push(build_lanelet(spec)?);
        }
        lanelets.sort_by_key(|l| l.id);
        let map = Self { lanelets };
        map.check_references()?;
        Ok(map)
    }

    fn check_references(&self) -> Result<(), MapError> {
        for l in &self.lanelets {
            for &succ in &l.successors {
                if self.get(succ).is_none() {
                    return Err(MapError::UnknownLanelet {
                        referenced_by: l.id,
                        id: succ,
                    });
                }
            }
            for adj in [l.adjacent_left, l.adjacent_right].into_iter().flatten() {
                if self.get(adj).is_none() {
                    return Err(MapError::UnknownLanelet {
                        referenced_by: l.id,
                        id: adj,
                    });
                }
            }
            if let Some(b) = l.adjacent_left {
                if self.get(b).unwrap().adjacent_right != Some(l.id) {
                    return Err(MapError::AsymmetricAdjacency { a: l.id, b });
                }
            }
            if let Some(b) = l.adjacent_right {
                if self.get(b).unwrap().adjacent_left != Some(l.id) {
                    return Err(MapError::AsymmetricAdjacency { a: l.id, b });
                }
            }
        }
        // Every lanelet feeding a closed one must announce the taper.
        for closed in self.lanelets.iter().filter(|l| l.closed) {
            for feeder in &self.lanelets {
                if feeder.successors.contains(&closed.id)
                    && (feeder.taper_start_s.is_none() || feeder.taper_end_s.is_none())
                {
                    return Err(MapError::MissingTaper {
                        feeder: feeder.id,
                        closed: closed.id,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, id: u32) -> Option<&Lanelet> {
        self.lanelets
            .binary_search_by_key(&id, |l| l.id)
            .ok()
            .map(|i| &self.lanelets[i])
    }

    pub fn lanelets(&self) -> &[Lanelet] {
        &self.lanelets
    }

    /// Projects a pose onto the best-matching lanelet centerline.
    ///
    /// Candidates are lanelets whose centerline passes within 10 m and
    /// whose local half-width (+2 m tolerance) covers the lateral offset;
    /// among them the score |lateral| + 5·|heading mismatch| decides, with
    /// ties going to the lowest lanelet id.
    pub fn project(&self, point: Point2, heading: f64) -> Result<LaneProjection, MapError> {
        let mut best: Option<(f64, LaneProjection)> = None;
        for l in &self.lanelets {
            let (s, closest, lane_heading) = closest_on_polyline(&l.centerline, &l.cum_s, point);
            let dist = point.dist(closest);
            if dist > PROJECTION_CUTOFF {
                continue;
            }
            let dir = (libm::cos(lane_heading), libm::sin(lane_heading));
            let rel = point - closest;
            let cross = dir.0 * rel.y - dir.1 * rel.x;
            let lateral = if cross >= 0.0 { dist } else { -dist };
            if libm::fabs(lateral) > l.half_width_at(s) + LATERAL_TOLERANCE {
                continue;
            }
            let mismatch = libm::fabs(normalize_angle(heading - lane_heading));
            let score = libm::fabs(lateral) + HEADING_WEIGHT * mismatch;
            if best.as_ref().is_none_or(|(b, _)| score < *b) {
                best = Some((
                    score,
                    LaneProjection {
                        lanelet_id: l.id,
                        s,
                        lateral_offset: lateral,
                        heading_of_lane: lane_heading,
                    },
                ));
            }
        }
        best.map(|(_, p)| p).ok_or(MapError::OffMap)
    }

    /// Samples an arc-length-parameterized path of the given length
    /// starting at `start`, following centerlines across successors.
    ///
    /// Merge strategies blend from the source centerline onto the adjacent
    /// lane's centerline with a smoothstep over `merge_length` meters of
    /// longitudinal travel; the path starts on the source centerline
    /// (`start.lateral_offset` is ignored — callers layer vehicle offsets
    /// on top). Where the map runs out of successors the path continues
    /// straight along the last heading.
    pub fn sample_path(
        &self,
        start: &LaneProjection,
        strategy: MergeStrategy,
        distance: f64,
        merge_length: f64,
    ) -> Result<Vec<Point2>, MapError> {
        let src = self.get(start.lanelet_id).ok_or(MapError::OffMap)?;
        let src_chain = self.chain_polyline(src, start.s, distance + 1.0);
        let src_cum = cumulative_lengths(&src_chain);
        let mut samples = sample_arcs(distance);

        let target = match strategy {
            MergeStrategy::Keep => {
                let pts = samples
                    .drain(..)
                    .map(|u| sample_polyline(&src_chain, &src_cum, u))
                    .collect();
                return Ok(pts);
            }
            MergeStrategy::MergeLeft => src.adjacent_left,
            MergeStrategy::MergeRight => src.adjacent_right,
        };
        let target = target
            .and_then(|id| self.get(id))
            .filter(|t| !t.closed)
            .ok_or(MapError::InfeasibleStrategy { lanelet: src.id })?;

        // Anchor the target chain at the point across from the start.
        let start_point = src.point_at_s(start.s);
        let (target_s0, _, _) = closest_on_polyline(&target.centerline, &target.cum_s, start_point);
        let tgt_chain = self.chain_polyline(target, target_s0, distance + 20.0);
        let tgt_cum = cumulative_lengths(&tgt_chain);

        let merge_length = if merge_length > 1.0 { merge_length } else { 1.0 };
        let pts = samples
            .drain(..)
            .map(|u| {
                let p_src = sample_polyline(&src_chain, &src_cum, u);
                let (_, p_tgt, _) = closest_on_polyline(&tgt_chain, &tgt_cum, p_src);
                let t = (u / merge_length).clamp(0.0, 1.0);
                let a = smoothstep(t);
                p_src + (p_tgt - p_src) * a
            })
            .collect();
        Ok(pts)
    }

    /// Concatenated centerline points from (lanelet, s) onward, following
    /// first-listed successors, extended tangentially to `needed` meters.
    fn chain_polyline(&self, start: &Lanelet, start_s: f64, needed: f64) -> Vec<Point2> {
        let mut pts: Vec<Point2> = vec![start.point_at_s(start_s)];
        let mut acc = 0.0;
        let mut current = start;
        let mut from_s = start_s;
        loop {
            let first_idx = match current.cum_s.iter().position(|&c| c > from_s + 1e-9) {
                Some(i) => i,
                None => current.centerline.len(), // start_s at/after the end
            };
            for p in &current.centerline[first_idx..] {
                let last = *pts.last().unwrap();
                let step = last.dist(*p);
                if step < 1e-9 {
                    continue;
                }
                acc += step;
                pts.push(*p);
                if acc >= needed {
                    return pts;
                }
            }
            match current.successors.first().and_then(|&id| self.get(id)) {
                Some(next) => {
                    current = next;
                    from_s = 0.0;
                }
                None => break,
            }
        }
        // Out of map: continue along the final heading.
        let dir = final_direction(&pts);
        while acc < needed {
            let last = *pts.last().unwrap();
            pts.push(last + dir * RESAMPLE_SPACING);
            acc += RESAMPLE_SPACING;
        }
        pts
    }
}

/// Cumulative arc lengths of a polyline (crate-internal reuse).
pub(crate) fn polyline_cum(pts: &[Point2]) -> Vec<f64> {
    cumulative_lengths(pts)
}

/// Point at arc length `u` along a polyline (clamped).
pub(crate) fn polyline_point_at(pts: &[Point2], cum: &[f64], u: f64) -> Point2 {
    sample_polyline(pts, cum, u)
}

/// Local heading at arc length `u` along a polyline.
pub(crate) fn polyline_heading_at(pts: &[Point2], cum: &[f64], u: f64) -> f64 {
    let i = segment_index(cum, u.clamp(0.0, *cum.last().unwrap()));
    let d = pts[i + 1] - pts[i];
    libm::atan2(d.y, d.x)
}

/// Arc-length sample stations 0, 0.5, 1.0, … ending exactly at `distance`.
fn sample_arcs(distance: f64) -> Vec<f64> {
    let mut arcs = Vec::new();
    let mut u = 0.0;
    while u < distance - 1e-9 {
        arcs.push(u);
        u += RESAMPLE_SPACING;
    }
    arcs.push(distance.max(0.0));
    arcs
}

/// Smooth 0→1 ramp with zero slope at both ends: 3t² − 2t³.
pub(crate) fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn build_lanelet(spec: LaneletSpec) -> Result<Lanelet, MapError> {
    let err = MapError::DegenerateBoundary { id: spec.id };
    if spec.left.len() < 2 || spec.right.len() < 2 {
        return Err(err);
    }
    let left_len = polyline_length(&spec.left);
    let right_len = polyline_length(&spec.right);
    if left_len < 1e-9 || right_len < 1e-9 {
        return Err(err);
    }
    if polyline_self_intersects(&spec.left)
        || polyline_self_intersects(&spec.right)
        || polylines_cross(&spec.left, &spec.right)
    {
        return Err(err);
    }
    if let (Some(a), Some(b)) = (spec.taper_start_s, spec.taper_end_s) {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(MapError::BadTaper { id: spec.id });
        }
    }

    let longest = if left_len > right_len { left_len } else { right_len };
    let n = (libm::ceil(longest / RESAMPLE_SPACING) as usize + 1).max(2);
    let left_rs = resample_polyline(&spec.left, n);
    let right_rs = resample_polyline(&spec.right, n);
    let mut centerline = Vec::with_capacity(n);
    let mut half_widths = Vec::with_capacity(n);
    for (l, r) in left_rs.iter().zip(right_rs.iter()) {
        centerline.push(Point2::new((l.x + r.x) * 0.5, (l.y + r.y) * 0.5));
        half_widths.push(l.dist(*r) * 0.5);
    }
    let cum_s = cumulative_lengths(&centerline);
    let length = *cum_s.last().unwrap();
    if length < 1e-9 {
        return Err(err);
    }
    Ok(Lanelet {
        id: spec.id,
        left: spec.left,
        right: spec.right,
        successors: spec.successors,
        adjacent_left: spec.adjacent_left,
        adjacent_right: spec.adjacent_right,
        speed_limit: spec.speed_limit,
        closed: spec.closed,
        taper_start_s: spec.taper_start_s,
        taper_end_s: spec.taper_end_s,
        centerline,
        cum_s,
        half_widths,
        length,
    })
}

fn polyline_length(pts: &[Point2]) -> f64 {
    pts.windows(2).map(|w| w[0].dist(w[1])).sum()
}

fn cumulative_lengths(pts: &[Point2]) -> Vec<f64> {
    let mut cum = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for w in pts.windows(2) {
        acc += w[0].dist(w[1]);
        cum.push(acc);
    }
    cum
}

/// Evenly resamples a polyline to exactly `n` points in arc length.
fn resample_polyline(pts: &[Point2], n: usize) -> Vec<Point2> {
    let cum = cumulative_lengths(pts);
    let total = *cum.last().unwrap();
    (0..n)
        .map(|i| sample_polyline(pts, &cum, total * i as f64 / (n - 1) as f64))
        .collect()
}

/// Index of the segment containing arc length `s` (clamped).
fn segment_index(cum: &[f64], s: f64) -> usize {
    if s <= 0.0 {
        return 0;
    }
    let last = cum.len() - 1;
    match cum.binary_search_by(|c| c.total_cmp(&s)) {
        Ok(i) => i.min(last - 1),
        Err(i) => (i - 1).min(last - 1),
    }
}

fn sample_polyline(pts: &[Point2], cum: &[f64], s: f64) -> Point2 {
    let total = *cum.last().unwrap();
    let s = s.clamp(0.0, total);
    let i = segment_index(cum, s);
    let seg = cum[i + 1] - cum[i];
    if seg < 1e-12 {
        return pts[i];
    }
    let t = (s - cum[i]) / seg;
    pts[i] + (pts[i + 1] - pts[i]) * t
}

fn sample_scalar(values: &[f64], cum: &[f64], s: f64) -> f64 {
    let total = *cum.last().unwrap();
    let s = s.clamp(0.0, total);
    let i = segment_index(cum, s);
    let seg = cum[i + 1] - cum[i];
    if seg < 1e-12 {
        return values[i];
    }
    let t = (s - cum[i]) / seg;
    values[i] + (values[i + 1] - values[i]) * t
}

/// Closest point on a polyline: returns (arc length, point, local heading).
pub(crate) fn closest_on_polyline(pts: &[Point2], cum: &[f64], p: Point2) -> (f64, Point2, f64) {
    let mut best = (f64::INFINITY, 0.0, pts[0], 0.0);
    for i in 0..pts.len() - 1 {
        let a = pts[i];
        let b = pts[i + 1];
        let ab = b - a;
        let len_sq = ab.x * ab.x + ab.y * ab.y;
        if len_sq < 1e-18 {
            continue;
        }
        let t = (((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len_sq).clamp(0.0, 1.0);
        let q = a + ab * t;
        let d = p.dist_sq(q);
        if d < best.0 {
            best = (d, cum[i] + (cum[i + 1] - cum[i]) * t, q, libm::atan2(ab.y, ab.x));
        }
    }
    (best.1, best.2, best.3)
}

fn final_direction(pts: &[Point2]) -> Point2 {
    for w in pts.windows(2).rev() {
        let d = w[1] - w[0];
        let len = libm::hypot(d.x, d.y);
        if len > 1e-9 {
            return d * (1.0 / len);
        }
    }
    Point2::new(1.0, 0.0)
}

/// Strict-interior crossing test; shared endpoints do not count, so taper
/// boundaries that converge to a point remain valid.
fn segments_cross(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> bool {
    fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
        (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
    }
    let d1 = orient(b1, b2, a1);
    let d2 = orient(b1, b2, a2);
    let d3 = orient(a1, a2, b1);
    let d4 = orient(a1, a2, b2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn polyline_self_intersects(pts: &[Point2]) -> bool {
    for i in 0..pts.len().saturating_sub(1) {
        // Skip the adjacent segment, which legitimately shares a point.
        for j in i + 2..pts.len() - 1 {
            if segments_cross(pts[i], pts[i + 1], pts[j], pts[j + 1]) {
                return true;
            }
        }
    }
    false
}

fn polylines_cross(a: &[Point2], b: &[Point2]) -> bool {
    for i in 0..a.len() - 1 {
        for j in 0..b.len() - 1 {
            if segments_cross(a[i], a[i + 1], b[j], b[j + 1]) {
                return true;
            }
        }
    }
    false
}


#[cfg(test)]
mod tests {
    use super::test_support::{two_lane_map, two_lane_specs, workzone_map};
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parallel_boundaries_yield_midline() {
        let map = two_lane_map();
        let l = map.get(2).unwrap();
        assert_abs_diff_eq!(l.length(), 300.0, epsilon = 1e-9);
        for p in l.centerline() {
            assert_abs_diff_eq!(p.y, 1.75, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(l.half_width_at(150.0), 1.75, epsilon = 1e-9);
    }

    #[test]
    fn centerline_length_close_to_boundary_average() {
        let map = workzone_map();
        for l in map.lanelets() {
            let avg = (polyline_length(&l.left) + polyline_length(&l.right)) / 2.0;
            assert!(
                (l.length() - avg).abs() / avg < 0.005,
                "lanelet {}: centerline {} vs boundary avg {}",
                l.id,
                l.length(),
                avg
            );
        }
    }

    #[test]
    fn crossing_boundaries_rejected() {
        let mut specs = two_lane_specs();
        specs[1].left = vec![Point2::new(0.0, 0.0), Point2::new(300.0, 3.5)];
        specs[1].right = vec![Point2::new(0.0, 3.5), Point2::new(300.0, 0.0)];
        assert!(matches!(
            LaneletMap::from_specs(specs),
            Err(MapError::DegenerateBoundary { id: 2 })
        ));
    }

    #[test]
    fn asymmetric_adjacency_rejected() {
        let mut specs = two_lane_specs();
        specs[1].adjacent_left = None;
        assert!(matches!(
            LaneletMap::from_specs(specs),
            Err(MapError::AsymmetricAdjacency { a: 1, b: 2 })
        ));
    }

    #[test]
    fn closed_lane_needs_taper_on_feeder() {
        let mut specs = test_support::workzone_specs();
        specs[3].taper_start_s = None;
        assert!(matches!(
            LaneletMap::from_specs(specs),
            Err(MapError::MissingTaper { feeder: 4, closed: 5 })
        ));
    }

    #[test]
    fn unknown_successor_rejected() {
        let mut specs = two_lane_specs();
        specs[0].successors = vec![99];
        assert!(matches!(
            LaneletMap::from_specs(specs),
            Err(MapError::UnknownLanelet { referenced_by: 1, id: 99 })
        ));
    }

    #[test]
    fn project_on_centerline() {
        let map = two_lane_map();
        let p = map.project(Point2::new(50.0, 1.75), 0.0).unwrap();
        assert_eq!(p.lanelet_id, 2);
        assert_abs_diff_eq!(p.s, 50.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.lateral_offset, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.heading_of_lane, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn project_sign_convention_left_positive() {
        let map = two_lane_map();
        let p = map.project(Point2::new(50.0, 2.75), 0.0).unwrap();
        assert_eq!(p.lanelet_id, 2);
        assert_abs_diff_eq!(p.lateral_offset, 1.0, epsilon = 1e-9);
        let p = map.project(Point2::new(50.0, 0.75), 0.0).unwrap();
        assert_abs_diff_eq!(p.lateral_offset, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn project_tie_breaks_to_lowest_id() {
        let map = two_lane_map();
        // Exactly between the two centerlines with a heading matching both.
        let p = map.project(Point2::new(50.0, 3.5), 0.0).unwrap();
        assert_eq!(p.lanelet_id, 1);
    }

    #[test]
    fn project_off_map() {
        let map = two_lane_map();
        assert_eq!(map.project(Point2::new(50.0, 100.0), 0.0), Err(MapError::OffMap));
    }

    #[test]
    fn keep_path_has_requested_length() {
        let map = two_lane_map();
        let start = map.project(Point2::new(10.0, 1.75), 0.0).unwrap();
        let path = map
            .sample_path(&start, MergeStrategy::Keep, 30.0, DEFAULT_MERGE_LENGTH)
            .unwrap();
        let len = polyline_length(&path);
        assert!((len - 30.0).abs() < 0.01, "path length {}", len);
        assert_abs_diff_eq!(path.last().unwrap().x, 40.0, epsilon = 0.01);
    }

    #[test]
    fn keep_path_follows_successors_and_extends_past_map() {
        let map = workzone_map();
        let start = map.project(Point2::new(10.0, 5.25), 0.0).unwrap();
        assert_eq!(start.lanelet_id, 1);
        // 1 (300 m) → 2 (180 m) → 3 (120 m) ends at x=600; ask for more.
        let path = map
            .sample_path(&start, MergeStrategy::Keep, 700.0, DEFAULT_MERGE_LENGTH)
            .unwrap();
        let end = *path.last().unwrap();
        assert_abs_diff_eq!(end.x, 710.0, epsilon = 0.05);
        assert_abs_diff_eq!(end.y, 5.25, epsilon = 1e-6);
    }

    #[test]
    fn merge_left_lands_on_target_centerline() {
        let map = two_lane_map();
        let start = map.project(Point2::new(10.0, 1.75), 0.0).unwrap();
        let path = map
            .sample_path(&start, MergeStrategy::MergeLeft, 80.0, 40.0)
            .unwrap();
        let end = *path.last().unwrap();
        assert!((end.y - 5.25).abs() < 0.05, "endpoint y {}", end.y);
        // Blend profile: at u before the ramp finishes, offset matches the
        // smoothstep fraction of the 3.5 m spacing.
        let quarter = path[20]; // u = 10 m of 40 m merge length
        let expect = 1.75 + smoothstep(0.25) * 3.5;
        assert_abs_diff_eq!(quarter.y, expect, epsilon = 0.05);
    }

    #[test]
    fn merge_profile_projects_consistently() {
        let map = two_lane_map();
        let start = map.project(Point2::new(10.0, 1.75), 0.0).unwrap();
        let path = map
            .sample_path(&start, MergeStrategy::MergeLeft, 80.0, 40.0)
            .unwrap();
        // Early in the blend the pose still projects onto the source lane
        // with the expected lateral offset.
        let u = 10.0;
        let p = map.project(path[20], 0.0).unwrap();
        assert_eq!(p.lanelet_id, 2);
        assert!((p.lateral_offset - smoothstep(u / 40.0) * 3.5).abs() < 0.1);
        // Past the ramp it projects onto the target lane on centerline.
        let p = map.project(path[path.len() - 1], 0.0).unwrap();
        assert_eq!(p.lanelet_id, 1);
        assert!(p.lateral_offset.abs() < 0.1);
    }

    #[test]
    fn merge_without_adjacency_infeasible() {
        let map = two_lane_map();
        let start = map.project(Point2::new(10.0, 5.25), 0.0).unwrap();
        assert!(matches!(
            map.sample_path(&start, MergeStrategy::MergeLeft, 50.0, 40.0),
            Err(MapError::InfeasibleStrategy { lanelet: 1 })
        ));
    }

    #[test]
    fn merge_into_closed_lane_infeasible() {
        let map = workzone_map();
        // On lanelet 2 (x in 300..480) the right neighbor is the closed taper.
        let start = map.project(Point2::new(350.0, 5.25), 0.0).unwrap();
        assert_eq!(start.lanelet_id, 2);
        assert!(matches!(
            map.sample_path(&start, MergeStrategy::MergeRight, 50.0, 40.0),
            Err(MapError::InfeasibleStrategy { lanelet: 2 })
        ));
    }

    #[test]
    fn taper_lanelet_narrows() {
        let map = workzone_map();
        let taper = map.get(5).unwrap();
        assert!(taper.half_width_at(0.0) > 1.5);
        assert!(taper.half_width_at(taper.length()) < 0.2);
    }

    #[test]
    fn smoothstep_endpoints() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert_abs_diff_eq!(smoothstep(0.5), 0.5, epsilon = 1e-12);
    }
}
