//! First-order metric evolutions: Ricci flow, the Riemann flow through its
//! induced metric velocity, and the Riemann-type flow.

mod blowup;
mod cross_check;
mod equivalence;
mod homothety;
pub mod laws;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub(crate) use blowup::blow_up_with_power;
pub use blowup::{monitor_blow_up, BlowUp};
pub use cross_check::bialternate_cross_check;
pub use equivalence::{check_metric_equivalence, EquivalenceReport, Which};
pub use homothety::{homothety_flow_solution, HomothetySolution};
pub use laws::{
    induced_riemann_flow_rhs, ricci_flow_rhs, riemann_flow_residual, riemann_type_constants, riemann_type_flow_rhs,
};

use crate::bialternate::velocity_from_rate;
use crate::error::{Error, Result};
use crate::evolve::{integrate, Evaluation, Settings, System, Trajectory};
use crate::tensor_kernel::curvature::curvature;
use crate::tensor_kernel::field::MetricField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FlowLaw {
    Ricci,
    RiemannInduced,
    RiemannType { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub g: MetricField,
}

impl FlowState {
    pub fn new(g: MetricField) -> Self {
        FlowState { t: 0.0, g }
    }
}

struct FlowSystem(FlowLaw);

impl System for FlowSystem {
    fn second_order(&self) -> bool {
        false
    }

    fn evaluate(&self, _t: f64, g: &MetricField, _k: Option<&[DMatrix<f64>]>, with_residual: bool) -> Result<Evaluation> {
        let curv = curvature(g)?;
        let rate = curv
            .par_iter()
            .map(|c| match self.0 {
                FlowLaw::Ricci => Ok(laws::ricci_velocity(c)),
                FlowLaw::RiemannInduced => laws::induced_velocity(c),
                FlowLaw::RiemannType { alpha, beta } => {
                    velocity_from_rate(&laws::riemann_type_rate(c, alpha, beta), &c.metric, &c.inverse)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let residual = if with_residual {
            curv.par_iter().zip(&rate).map(|(c, v)| laws::eq1_residual_at(c, v)).reduce(|| 0.0, f64::max)
        } else {
            f64::NAN
        };
        Ok(Evaluation { rate, curvature: curv, residual })
    }
}

/// RK4 integration of a metric flow from `initial`.
///
/// Each record's `eq_residual` is the residual of `∂G/∂t = −2 Riem` for the
/// velocity actually used, so laws that only agree with it on special metrics
/// show how far they are from it.
pub fn integrate_flow(initial: &FlowState, law: FlowLaw, settings: &Settings) -> Result<Trajectory> {
    if !matches!(law, FlowLaw::Ricci) && initial.g.dim() < 3 {
        return Err(Error::DimensionTooSmall { required: 3, actual: initial.g.dim() });
    }
    let mut traj = integrate(&FlowSystem(law), &initial.g, None, settings)?;
    shift_times(&mut traj, initial.t);
    Ok(traj)
}

pub(crate) fn shift_times(traj: &mut Trajectory, t0: f64) {
    if t0 != 0.0 {
        traj.records.iter_mut().for_each(|r| r.t += t0);
        traj.snapshots.iter_mut().for_each(|s| s.t += t0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_kernel::chart::Chart;
    use crate::tensor_kernel::families;

    #[test]
    fn flat_metric_is_a_fixed_point_of_every_law() {
        let g = MetricField::metric_from_fn(Chart::grid(3, 8, 1.0).unwrap(), &*families::flat(3)).unwrap();
        for law in [FlowLaw::Ricci, FlowLaw::RiemannInduced, FlowLaw::RiemannType { alpha: -2.0, beta: 0.5 }] {
            let traj = integrate_flow(&FlowState::new(g.clone()), law, &Settings::new(0.1, 1.0)).unwrap();
            let last = traj.last_snapshot().unwrap();
            assert_eq!(last.t, 1.0);
            let id = nalgebra::DMatrix::<f64>::identity(3, 3);
            assert!(last.g.iter().all(|m| crate::linalg::max_abs(&(m - &id)) < 1e-12));
        }
    }

    #[test]
    fn settings_are_validated() {
        let g = MetricField::metric_from_fn(Chart::point(vec![0.0; 3], 1e-2).unwrap(), &*families::flat(3)).unwrap();
        let bad = Settings::new(-1e-3, 1.0);
        assert!(matches!(integrate_flow(&FlowState::new(g), FlowLaw::Ricci, &bad), Err(Error::InvalidSettings(_))));
    }
}
