use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bialternate::bialternate_product;
use crate::error::{Error, Result};
use crate::evolve::Trajectory;
use crate::linalg;
use crate::tensor_kernel::CurvatureBound;

/// Which metric the sandwich is checked on, and which curvature norm bounds it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Which {
    /// `g(t)` against `g(0)`, bounded by `‖Ric‖`.
    Ricci,
    /// `G(t)` against `G(0)` on bivectors, bounded by `‖Riem‖`.
    Riemann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub pass: bool,
    /// Smallest of `μ_min − e^{−2m|t|}` and `e^{2m|t|} − μ_max` over all checks.
    pub worst_margin: f64,
    pub worst_time: f64,
    pub worst_sample: usize,
    pub m: f64,
}

/// Slack allowed for round-off in the eigenvalue comparison.
pub const SANDWICH_SLACK: f64 = 1e-12;

fn relative_matrix(which: Which, g: &DMatrix<f64>) -> DMatrix<f64> {
    match which {
        Which::Ricci => g.clone(),
        Which::Riemann => bialternate_product(g).pair_matrix(),
    }
}

/// Checks `e^{−2m|t|} g(0) ≤ g(t) ≤ e^{2m|t|} g(0)` (or the same for `G`) at every snapshot.
///
/// With `bound = None`, `m` at time `t` is the running supremum of the relevant
/// curvature norm over the records up to `t`; otherwise the given constant.
pub fn check_metric_equivalence(
    traj: &Trajectory,
    bound: Option<CurvatureBound>,
    which: Which,
) -> Result<EquivalenceReport> {
    let first = traj.snapshots.first().ok_or(Error::EmptyTrajectory)?;
    if traj.records.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let t0 = first.t;
    let base = first
        .g
        .iter()
        .enumerate()
        .map(|(s, g)| linalg::cholesky_lower_inverse(&relative_matrix(which, g), s))
        .collect::<Result<Vec<_>>>()?;
    let norm = |r: &crate::evolve::Record| match which {
        Which::Ricci => r.sup_ric_norm,
        Which::Riemann => r.sup_riem_norm,
    };
    let mut report = EquivalenceReport { pass: true, worst_margin: f64::INFINITY, worst_time: t0, worst_sample: 0, m: 0.0 };
    for snap in &traj.snapshots {
        let m = match bound {
            Some(b) => b.value(),
            None => {
                let mut running = CurvatureBound::new();
                traj.records
                    .iter()
                    .filter(|r| (r.t - t0).abs() <= (snap.t - t0).abs() * (1.0 + 1e-12))
                    .for_each(|r| running.observe(norm(r)));
                running.value()
            }
        };
        let dt = (snap.t - t0).abs();
        let (lo_bound, hi_bound) = ((-2.0 * m * dt).exp(), (2.0 * m * dt).exp());
        for (s, (g, l)) in snap.g.iter().zip(&base).enumerate() {
            let (lo, hi) = linalg::relative_eigen_range(&relative_matrix(which, g), l);
            let margin = (lo - lo_bound).min(hi_bound - hi);
            if margin < report.worst_margin {
                report.worst_margin = margin;
                report.worst_time = snap.t;
                report.worst_sample = s;
                report.m = m;
            }
        }
    }
    report.pass = report.worst_margin >= -SANDWICH_SLACK;
    Ok(report)
}
