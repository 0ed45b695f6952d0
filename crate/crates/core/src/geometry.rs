//! Oriented bounding boxes and the point-set distance between them.
//!
//! A vehicle footprint is a rigid rectangle described by center, heading,
//! length, and width. Its boundary is sampled at 8 points (4 corners plus
//! 4 edge midpoints) transformed into the global frame, and the distance
//! between two vehicles is the minimum Euclidean distance over all 8x8
//! point pairs. Overlapping rectangles can therefore report a positive
//! distance; that is intentional, not a bug.

use core::f64::consts::PI;

/// A 2D point / vector in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl core::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl core::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl core::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.x * k, self.y * k)
    }
}

/// Normalizes an angle to the canonical branch (-pi, pi].
///
/// Exactly -pi maps to +pi so every angle has a single representative.
pub fn normalize_angle(rad: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let shifted = rad + PI;
    let mut r = shifted - two_pi * libm::floor(shifted / two_pi);
    if r >= two_pi {
        r -= two_pi;
    }
    if r == 0.0 {
        PI
    } else {
        r - PI
    }
}

/// Rotates the local offset `(u, v)` by `psi` radians.
///
/// Returns `(u cos psi - v sin psi, u sin psi + v cos psi)`.
pub fn rotate_point(u: f64, v: f64, psi: f64) -> (f64, f64) {
    let (s, c) = libm::sincos(psi);
    (u * c - v * s, u * s + v * c)
}

/// A rectangle with arbitrary heading representing a vehicle footprint.
///
/// Zero length/width is allowed; the box then degenerates to its center
/// point and the point-set distance reduces to the centroid distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Point2,
    /// Heading in radians, normalized to (-pi, pi].
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    /// Builds a box, normalizing the heading. Negative dimensions are a
    /// programming error.
    pub fn new(center: Point2, heading: f64, length: f64, width: f64) -> Self {
        assert!(
            length >= 0.0 && width >= 0.0,
            "box dimensions must be non-negative"
        );
        Self {
            center,
            heading: normalize_angle(heading),
            length,
            width,
        }
    }
}

/// Number of boundary points sampled per box.
pub const BOX_POINT_COUNT: usize = 8;

/// The 8 transformed boundary points of an [`OrientedBox`]: 4 corners
/// followed by the 4 edge midpoints, in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxPointSet {
    pub points: [Point2; BOX_POINT_COUNT],
}

/// Computes the 8 global-frame boundary points of `bbox`.
///
/// Local points {(+-l/2, +-w/2)} plus {(+-l/2, 0), (0, +-w/2)} are rotated
/// by the heading and translated to the center.
pub fn box_points(bbox: &OrientedBox) -> BoxPointSet {
    let hl = bbox.length * 0.5;
    let hw = bbox.width * 0.5;
    let local: [(f64, f64); BOX_POINT_COUNT] = [
        (hl, hw),
        (hl, -hw),
        (-hl, -hw),
        (-hl, hw),
        (hl, 0.0),
        (0.0, -hw),
        (-hl, 0.0),
        (0.0, hw),
    ];
    let mut points = [Point2::default(); BOX_POINT_COUNT];
    for (out, &(u, v)) in points.iter_mut().zip(local.iter()) {
        let (dx, dy) = rotate_point(u, v, bbox.heading);
        *out = Point2::new(bbox.center.x + dx, bbox.center.y + dy);
    }
    BoxPointSet { points }
}

/// Minimum Euclidean distance over all point pairs of two box point sets.
pub fn min_point_set_distance(a: &BoxPointSet, b: &BoxPointSet) -> f64 {
    let mut best = f64::INFINITY;
    for pa in &a.points {
        for pb in &b.points {
            let d = pa.dist_sq(*pb);
            if d < best {
                best = d;
            }
        }
    }
    libm::sqrt(best)
}

/// Minimum Euclidean distance between the boundary point sets of two boxes.
///
/// Symmetric in its arguments and always >= 0. For zero-size boxes this is
/// exactly the distance between the centers.
pub fn min_box_distance(a: &OrientedBox, b: &OrientedBox) -> f64 {
    min_point_set_distance(&box_points(a), &box_points(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rotate_identity() {
        let (x, y) = rotate_point(1.0, 0.0, 0.0);
        assert_eq!((x, y), (1.0, 0.0));
    }

    #[test]
    fn rotate_quarter_turn() {
        let (x, y) = rotate_point(1.0, 0.0, PI / 2.0);
        assert_abs_diff_eq!(x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rotate_half_turn_is_point_reflection() {
        for &(u, v) in &[(0.3, -2.0), (5.5, 4.25), (-1.0, 0.0)] {
            let (x, y) = rotate_point(u, v, PI);
            assert_abs_diff_eq!(x, -u, epsilon = 1e-12);
            assert_abs_diff_eq!(y, -v, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_angle_branch() {
        assert_eq!(normalize_angle(-PI), PI);
        assert_eq!(normalize_angle(PI), PI);
        assert_abs_diff_eq!(normalize_angle(3.0 * PI), PI, epsilon = 1e-12);
        assert_abs_diff_eq!(normalize_angle(-0.5), -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(normalize_angle(2.0 * PI + 0.25), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn box_points_axis_aligned() {
        let b = OrientedBox::new(Point2::new(0.0, 0.0), 0.0, 4.0, 2.0);
        let pts = box_points(&b).points;
        assert_eq!(pts[0], Point2::new(2.0, 1.0));
        assert_eq!(pts[1], Point2::new(2.0, -1.0));
        assert_eq!(pts[2], Point2::new(-2.0, -1.0));
        assert_eq!(pts[3], Point2::new(-2.0, 1.0));
        assert_eq!(pts[4], Point2::new(2.0, 0.0));
        assert_eq!(pts[5], Point2::new(0.0, -1.0));
        assert_eq!(pts[6], Point2::new(-2.0, 0.0));
        assert_eq!(pts[7], Point2::new(0.0, 1.0));
    }

    #[test]
    fn box_points_degenerate_collapse() {
        let b = OrientedBox::new(Point2::new(3.0, -1.5), 0.7, 0.0, 0.0);
        for p in box_points(&b).points {
            assert_eq!(p, b.center);
        }
    }

    // Corners for center (5,0), psi=pi/2, l=4, w=2, worked by hand from the
    // rotation: offsets (+-2, +-1) map to (-+1, +-2).
    #[test]
    fn box_points_rotated_quarter() {
        let b = OrientedBox::new(Point2::new(5.0, 0.0), PI / 2.0, 4.0, 2.0);
        let pts = box_points(&b).points;
        let expected = [(4.0, 2.0), (6.0, 2.0), (6.0, -2.0), (4.0, -2.0)];
        for (p, &(ex, ey)) in pts.iter().take(4).zip(expected.iter()) {
            assert_abs_diff_eq!(p.x, ex, epsilon = 1e-12);
            assert_abs_diff_eq!(p.y, ey, epsilon = 1e-12);
        }
    }

    #[test]
    fn corner_centroid_is_center_and_set_is_symmetric() {
        let b = OrientedBox::new(Point2::new(12.0, -4.0), 1.1, 4.5, 1.8);
        let pts = box_points(&b).points;
        let cx = pts.iter().take(4).map(|p| p.x).sum::<f64>() / 4.0;
        let cy = pts.iter().take(4).map(|p| p.y).sum::<f64>() / 4.0;
        assert_abs_diff_eq!(cx, b.center.x, epsilon = 1e-9);
        assert_abs_diff_eq!(cy, b.center.y, epsilon = 1e-9);
        // Closure under 180-degree rotation about the center: the reflected
        // set equals the original set (possibly reordered).
        for p in pts {
            let r = Point2::new(2.0 * b.center.x - p.x, 2.0 * b.center.y - p.y);
            let hit = pts.iter().any(|q| q.dist(r) < 1e-9);
            assert!(hit, "reflection of {:?} missing", p);
        }
    }

    #[test]
    fn degenerate_boxes_reduce_to_centroid_distance() {
        let a = OrientedBox::new(Point2::new(0.0, 0.0), 0.0, 0.0, 0.0);
        let b = OrientedBox::new(Point2::new(3.0, 4.0), 1.2, 0.0, 0.0);
        assert_eq!(min_box_distance(&a, &b), 5.0);
    }

    // Worked by enumerating the 64 point pairs: the closest pair is the
    // right-edge midpoint (2,0) against the left-edge midpoint (3,0).
    #[test]
    fn min_distance_axis_aligned_pair() {
        let a = OrientedBox::new(Point2::new(0.0, 0.0), 0.0, 4.0, 2.0);
        let b = OrientedBox::new(Point2::new(5.0, 0.0), 0.0, 4.0, 2.0);
        assert_abs_diff_eq!(min_box_distance(&a, &b), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn min_distance_coincident_boxes_is_zero() {
        let a = OrientedBox::new(Point2::new(1.0, 2.0), 0.4, 4.0, 2.0);
        assert_eq!(min_box_distance(&a, &a), 0.0);
    }

    #[test]
    fn min_distance_symmetric() {
        let a = OrientedBox::new(Point2::new(0.0, 0.0), 0.3, 4.0, 2.0);
        let b = OrientedBox::new(Point2::new(7.0, 2.0), -1.2, 12.0, 2.5);
        assert_eq!(min_box_distance(&a, &b), min_box_distance(&b, &a));
    }
}
