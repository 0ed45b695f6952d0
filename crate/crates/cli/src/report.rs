//! Static SVG report emission. Hand-rolled markup with fixed-precision
//! coordinates: identical input bytes in, identical SVG bytes out.
//!
//! The scatter views draw exactly one `<circle>` per conflict record and
//! nothing else circle-shaped. Tests (and downstream sanity checks) count
//! markers that way.

use std::fmt::Write as _;

use wz_sentinel_core::traj::ScenarioCase;

use crate::formats::ConflictRow;

const W: f64 = 800.0;
const H: f64 = 560.0;
const ML: f64 = 70.0; // left margin
const MR: f64 = 30.0;
const MT: f64 = 50.0;
const MB: f64 = 60.0;

fn n2(x: f64) -> String {
    format!("{:.2}", x)
}

struct Scale {
    x_max: f64,
}

impl Scale {
    fn x(&self, d: f64) -> f64 {
        ML + (d / self.x_max) * (W - ML - MR)
    }
    fn y(&self, p: f64) -> f64 {
        // probability in [0, 1], top of the plot is 1
        MT + (1.0 - p) * (H - MT - MB)
    }
}

fn marker_color(row: &ConflictRow) -> &'static str {
    if row.is_conflict && row.is_high_risk {
        "#d62728"
    } else if row.is_conflict || row.is_high_risk {
        "#ff7f0e"
    } else {
        "#1f77b4"
    }
}

/// Probability-vs-distance scatter. `dist_guide` / `prob_guide` draw the
/// classification thresholds as dashed reference lines.
pub fn scatter_svg(rows: &[ConflictRow], title: &str, dist_guide: f64, prob_guide: f64) -> String {
    let max_d = rows
        .iter()
        .map(|r| r.distance_m)
        .fold(0.0f64, f64::max)
        .max(dist_guide);
    // round the axis end up to a multiple of 5, min 10, so ticks stay tidy
    let x_max = ((max_d / 5.0).ceil() * 5.0).max(10.0);
    let s = Scale { x_max };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        W as u32, H as u32, W as u32, H as u32
    );
    let _ = writeln!(out, "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>", W as u32, H as u32);
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        n2(W / 2.0),
        title
    );

    // axes
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        n2(ML),
        n2(H - MB),
        n2(W - MR),
        n2(H - MB)
    );
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        n2(ML),
        n2(MT),
        n2(ML),
        n2(H - MB)
    );

    // x ticks: 6 of them, 0 .. x_max
    for i in 0..=5u32 {
        let d = x_max * f64::from(i) / 5.0;
        let x = s.x(d);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            n2(x),
            n2(H - MB),
            n2(x),
            n2(H - MB + 5.0)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
            n2(x),
            n2(H - MB + 20.0),
            n2(d)
        );
    }
    // y ticks at 0, 0.25, .., 1
    for i in 0..=4u32 {
        let p = f64::from(i) / 4.0;
        let y = s.y(p);
        let _ = writeln!(
            out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            n2(ML - 5.0),
            n2(y),
            n2(ML),
            n2(y)
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{}</text>",
            n2(ML - 9.0),
            n2(y + 4.0),
            n2(p)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">min box distance (m)</text>",
        n2((ML + W - MR) / 2.0),
        n2(H - 15.0)
    );
    let _ = writeln!(
        out,
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">conflict probability</text>",
        n2((MT + H - MB) / 2.0),
        n2((MT + H - MB) / 2.0)
    );

    // threshold guides
    let gx = s.x(dist_guide);
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>",
        n2(gx),
        n2(MT),
        n2(gx),
        n2(H - MB)
    );
    let gy = s.y(prob_guide);
    let _ = writeln!(
        out,
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>",
        n2(ML),
        n2(gy),
        n2(W - MR),
        n2(gy)
    );

    for row in rows {
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.7\"/>",
            n2(s.x(row.distance_m)),
            n2(s.y(row.probability)),
            marker_color(row)
        );
    }
    out.push_str("</svg>\n");
    out
}

const TRACK_PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Bird's-eye overlay of every track in a case: one polyline per vehicle,
/// square start markers, id labels. No circles, so marker-count checks on
/// the scatter views can't be confused by overlay files.
pub fn trajectory_svg(case: &ScenarioCase) -> String {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for t in &case.tracks {
        for p in &t.points {
            min_x = min_x.min(p.x);
            max_x = max_x.max(p.x);
            min_y = min_y.min(p.y);
            max_y = max_y.max(p.y);
        }
    }
    let pad = 0.05 * (max_x - min_x).max(max_y - min_y).max(10.0);
    let (x0, y0) = (min_x - pad, min_y - pad);
    let (span_x, span_y) = (max_x - min_x + 2.0 * pad, max_y - min_y + 2.0 * pad);
    let width = 900.0f64;
    let height = (width * span_y / span_x).clamp(120.0, 900.0);
    let sx = width / span_x;
    let sy = height / span_y;
    // y axis flipped: north up
    let px = |x: f64| (x - x0) * sx;
    let py = |y: f64| height - (y - y0) * sy;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        n2(width),
        n2(height),
        n2(width),
        n2(height)
    );
    let _ = writeln!(
        out,
        "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>",
        n2(width),
        n2(height)
    );
    let _ = writeln!(
        out,
        "<text x=\"10\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">case {} ({} tracks)</text>",
        case.case_id,
        case.tracks.len()
    );
    for (i, t) in case.tracks.iter().enumerate() {
        let color = TRACK_PALETTE[i % TRACK_PALETTE.len()];
        let mut points = String::new();
        for p in &t.points {
            let _ = write!(points, "{},{} ", n2(px(p.x)), n2(py(p.y)));
        }
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"/>",
            points.trim_end(),
            color
        );
        let start = &t.points[0];
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"5\" height=\"5\" fill=\"{}\"/>",
            n2(px(start.x) - 2.5),
            n2(py(start.y) - 2.5),
            color
        );
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" fill=\"{}\">{}</text>",
            n2(px(start.x) + 4.0),
            n2(py(start.y) - 4.0),
            color,
            t.track_id
        );
    }
    out.push_str("</svg>\n");
    out
}
