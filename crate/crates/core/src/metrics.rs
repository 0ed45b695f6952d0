//! Displacement-error metrics for multi-modal, multi-agent predictions.
//!
//! `ade`/`fde` score one trajectory against ground truth. `joint_metrics`
//! scores a whole scene: JointADE/JointFDE fix one mode index for every
//! vehicle simultaneously (the multi-agent benchmark convention), while
//! the scalar `ade`/`fde` fields average each vehicle's best mode picked
//! independently. The joint choice is more constrained, so
//! `min_joint_ade >= ade` always holds.

use alloc::vec::Vec;

use crate::geometry::Point2;
use crate::predict::PredictionSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricError {
    LengthMismatch { pred: usize, truth: usize },
    EmptyHorizon,
    ModeCountMismatch,
    VehicleMismatch { track_id: u32 },
    EmptyScene,
}

impl core::fmt::Display for MetricError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MetricError::LengthMismatch { pred, truth } => {
                write!(f, "prediction has {} steps but truth has {}", pred, truth)
            }
            MetricError::EmptyHorizon => write!(f, "cannot score a zero-step horizon"),
            MetricError::ModeCountMismatch => {
                write!(f, "vehicles disagree on the number of modes")
            }
            MetricError::VehicleMismatch { track_id } => {
                write!(f, "no ground truth for predicted track {}", track_id)
            }
            MetricError::EmptyScene => write!(f, "prediction set contains no vehicles"),
        }
    }
}

/// Average Euclidean displacement over the horizon.
pub fn ade(pred: &[Point2], truth: &[Point2]) -> Result<f64, MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricError::EmptyHorizon);
    }
    let total: f64 = pred.iter().zip(truth.iter()).map(|(p, t)| p.dist(*t)).sum();
    Ok(total / pred.len() as f64)
}

/// Euclidean displacement at the final step only.
pub fn fde(pred: &[Point2], truth: &[Point2]) -> Result<f64, MetricError> {
    if pred.len() != truth.len() {
        return Err(MetricError::LengthMismatch {
            pred: pred.len(),
            truth: truth.len(),
        });
    }
    match (pred.last(), truth.last()) {
        (Some(p), Some(t)) => Ok(p.dist(*t)),
        _ => Err(MetricError::EmptyHorizon),
    }
}

/// Scene-level metric report for one window (or an aggregate of windows).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    /// Mean over vehicles of the best-mode ADE (modes picked per vehicle).
    pub ade: f64,
    /// Mean over vehicles of the best-mode FDE (picked independently of
    /// the ADE choice).
    pub fde: f64,
    /// JointADE per mode index: that mode applied to all vehicles.
    pub joint_ade_per_mode: Vec<f64>,
    pub joint_fde_per_mode: Vec<f64>,
    pub min_joint_ade: f64,
    pub min_joint_fde: f64,
    pub n_agents: usize,
    pub n_windows: usize,
}

/// Scores a prediction set against per-vehicle ground-truth positions.
///
/// `truth` must cover every predicted vehicle (extra entries are ignored)
/// with exactly `horizon` positions each.
pub fn joint_metrics(
    preds: &PredictionSet,
    truth: &[(u32, Vec<Point2>)],
) -> Result<MetricReport, MetricError> {
    if preds.vehicles.is_empty() {
        return Err(MetricError::EmptyScene);
    }
    let k = preds.k();
    let n = preds.vehicles.len();
    let mut joint_ade = alloc::vec![0.0; k];
    let mut joint_fde = alloc::vec![0.0; k];
    let mut best_ade_sum = 0.0;
    let mut best_fde_sum = 0.0;

    for v in &preds.vehicles {
        if v.k() != k {
            return Err(MetricError::ModeCountMismatch);
        }
        let gt = truth
            .iter()
            .find(|(id, _)| *id == v.track_id)
            .map(|(_, pos)| pos)
            .ok_or(MetricError::VehicleMismatch {
                track_id: v.track_id,
            })?;
        let mut best_ade = f64::INFINITY;
        let mut best_fde = f64::INFINITY;
        for (m, mode) in v.modes.iter().enumerate() {
            let a = ade(mode, gt)?;
            let d = fde(mode, gt)?;
            joint_ade[m] += a;
            joint_fde[m] += d;
            if a < best_ade {
                best_ade = a;
            }
            if d < best_fde {
                best_fde = d;
            }
        }
        best_ade_sum += best_ade;
        best_fde_sum += best_fde;
    }

    for m in 0..k {
        joint_ade[m] /= n as f64;
        joint_fde[m] /= n as f64;
    }
    let min_joint_ade = joint_ade.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let min_joint_fde = joint_fde.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(MetricReport {
        ade: best_ade_sum / n as f64,
        fde: best_fde_sum / n as f64,
        joint_ade_per_mode: joint_ade,
        joint_fde_per_mode: joint_fde,
        min_joint_ade,
        min_joint_fde,
        n_agents: n,
        n_windows: 1,
    })
}

/// Unweighted mean of reports across windows; agent and window counts are
/// summed. Returns `None` for an empty slice or inconsistent mode counts.
pub fn aggregate_reports(reports: &[MetricReport]) -> Option<MetricReport> {
    let first = reports.first()?;
    let k = first.joint_ade_per_mode.len();
    if reports.iter().any(|r| r.joint_ade_per_mode.len() != k) {
        return None;
    }
    let n = reports.len() as f64;
    let mean = |f: &dyn Fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let mut joint_ade = alloc::vec![0.0; k];
    let mut joint_fde = alloc::vec![0.0; k];
    for r in reports {
        for m in 0..k {
            joint_ade[m] += r.joint_ade_per_mode[m] / n;
            joint_fde[m] += r.joint_fde_per_mode[m] / n;
        }
    }
    Some(MetricReport {
        ade: mean(&|r| r.ade),
        fde: mean(&|r| r.fde),
        joint_ade_per_mode: joint_ade,
        joint_fde_per_mode: joint_fde,
        min_joint_ade: mean(&|r| r.min_joint_ade),
        min_joint_fde: mean(&|r| r.min_joint_fde),
        n_agents: reports.iter().map(|r| r.n_agents).sum(),
        n_windows: reports.iter().map(|r| r.n_windows).sum(),
    })
}
