use serde::{Deserialize, Serialize};

use super::run::{ordering_crossing, RunReport, TrajectoryRow};
use crate::{Error, Result};

/// Vertical ordering of the falling point against the trough over a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParticleTracking {
    pub rows: Vec<TrajectoryRow>,
    /// First time the falling point is below every trough point.
    pub crossing_time: Option<f64>,
    /// Splash time of the gap detector, when the run splashed.
    pub t_star: Option<f64>,
    /// `|crossing_time - t_star|`.
    pub offset: Option<f64>,
    /// Offset within two steps.
    pub consistent: Option<bool>,
}

/// Compares the gap-based splash time with the vertical ordering crossing
/// of the falling point and the trough material points.
pub fn track_particles(run: &RunReport) -> Result<ParticleTracking> {
    if run.trajectory.is_empty() {
        return Err(Error::LandmarkLost("run has no trajectory rows".into()));
    }
    let crossing_time = ordering_crossing(&run.trajectory);
    let t_star = run.outcome.event().map(|e| e.t_star);
    let offset = match (crossing_time, t_star) {
        (Some(c), Some(t)) => Some((c - t).abs()),
        _ => None,
    };
    Ok(ParticleTracking {
        rows: run.trajectory.clone(),
        crossing_time,
        t_star,
        offset,
        consistent: offset.map(|o| o <= 2.0 * run.cfg.dt),
    })
}
