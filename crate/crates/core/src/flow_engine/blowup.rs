use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::Trajectory;

/// Singular-time estimate and the curvature growth exponent near it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUp {
    pub t_est: f64,
    /// Slope of `ln sup‖Riem‖` against `ln(T − t)`.
    pub exponent: f64,
    pub fit_points: usize,
    /// `(T − t, sup‖Riem‖)` over the whole trajectory.
    pub curve: Vec<(f64, f64)>,
}

/// Estimates the singular time and fits the blow-up exponent.
///
/// `power` selects what is extrapolated linearly to zero from the last two
/// records: `μ` (flows, where `μ` vanishes linearly) or `μ²` (waves, where it
/// vanishes like a square root), `μ` being the smallest relative eigenvalue.
pub(crate) fn blow_up_with_power(traj: &Trajectory, power: i32) -> Result<BlowUp> {
    if traj.records.len() < 2 {
        return Err(Error::EmptyTrajectory);
    }
    if !traj.termination.is_singular() {
        return Err(Error::NoSingularity);
    }
    let n = traj.records.len();
    let (a, b) = (&traj.records[n - 2], &traj.records[n - 1]);
    let (ya, yb) = (a.min_rel_eig.powi(power), b.min_rel_eig.powi(power));
    let slope = (yb - ya) / (b.t - a.t);
    if !(slope < 0.0) {
        return Err(Error::NoSingularity);
    }
    let t_est = b.t - yb / slope;

    let curve: Vec<(f64, f64)> = traj
        .records
        .iter()
        .filter(|r| r.sup_riem_norm.is_finite() && r.sup_riem_norm > 0.0 && t_est - r.t > 0.0)
        .map(|r| (t_est - r.t, r.sup_riem_norm))
        .collect();
    let closest = curve.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut width = 10.0;
    let mut window: Vec<(f64, f64)> = Vec::new();
    while width < 1e30 {
        window = curve.iter().copied().filter(|p| p.0 <= closest * width).collect();
        if window.len() >= 5 || window.len() == curve.len() {
            break;
        }
        width *= 10.0;
    }
    if window.len() < 2 {
        return Err(Error::NoSingularity);
    }
    let pts: Vec<(f64, f64)> = window.iter().map(|(d, v)| (d.ln(), v.ln())).collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1 - my), b + (p.0 - mx).powi(2)));
    Ok(BlowUp { t_est, exponent: sxy / sxx, fit_points: pts.len(), curve })
}

/// Blow-up diagnostics for flow trajectories that stopped at a collapse or curvature cap.
pub fn monitor_blow_up(traj: &Trajectory) -> Result<BlowUp> {
    blow_up_with_power(traj, 1)
}
