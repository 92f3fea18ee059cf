use nalgebra::DMatrix;

use super::laws::induced_riemann_flow_rhs;
use crate::bialternate::{bialternate_product, recover_metric};
use crate::error::Result;
use crate::evolve::Settings;
use crate::linalg;
use crate::tensor_kernel::curvature::riemann;
use crate::tensor_kernel::field::MetricField;
use crate::tensor_kernel::tensor::Tensor4;

fn metrics_of(big_g: &[Tensor4]) -> Result<Vec<DMatrix<f64>>> {
    big_g.iter().map(recover_metric).collect()
}

/// Evolves `G` directly under `∂G/∂t = −2 Riem` next to the induced metric
/// flow, recovering `g` from `G` at every stage, and returns the largest relative
/// disagreement between the two metrics seen at every `recover_every`-th step.
pub fn bialternate_cross_check(initial: &MetricField, settings: &Settings, recover_every: usize) -> Result<f64> {
    settings.validate()?;
    initial.check_metric()?;
    let every = recover_every.max(1);
    let field = |g: Vec<DMatrix<f64>>| initial.with_metric_values(g);
    let g_rate = |g: &[DMatrix<f64>]| induced_riemann_flow_rhs(&field(g.to_vec())?);
    let big_rate = |t: &[Tensor4]| -> Result<Vec<Tensor4>> {
        Ok(riemann(&field(metrics_of(t)?)?)?.iter().map(|r| r.scaled(-2.0)).collect())
    };
    let add_m = |a: &[DMatrix<f64>], b: &[DMatrix<f64>], h: f64| a.iter().zip(b).map(|(x, y)| x + y * h).collect::<Vec<_>>();
    let add_t = |a: &[Tensor4], b: &[Tensor4], h: f64| a.iter().zip(b).map(|(x, y)| x.combine(1.0, y, h)).collect::<Vec<_>>();

    let mut g = initial.values();
    let mut big: Vec<Tensor4> = g.iter().map(bialternate_product).collect();
    let (mut t, mut step, mut worst) = (0.0, 0usize, 0.0_f64);
    while t < settings.t_end - 1e-12 {
        let h = settings.dt.min(settings.t_end - t);
        let k1 = g_rate(&g)?;
        let k2 = g_rate(&add_m(&g, &k1, 0.5 * h))?;
        let k3 = g_rate(&add_m(&g, &k2, 0.5 * h))?;
        let k4 = g_rate(&add_m(&g, &k3, h))?;
        let q1 = big_rate(&big)?;
        let q2 = big_rate(&add_t(&big, &q1, 0.5 * h))?;
        let q3 = big_rate(&add_t(&big, &q2, 0.5 * h))?;
        let q4 = big_rate(&add_t(&big, &q3, h))?;
        for s in 0..g.len() {
            g[s] += (&k1[s] + &k2[s] * 2.0 + &k3[s] * 2.0 + &k4[s]) * (h / 6.0);
            big[s] = big[s]
                .combine(1.0, &q1[s], h / 6.0)
                .combine(1.0, &q2[s], h / 3.0)
                .combine(1.0, &q3[s], h / 3.0)
                .combine(1.0, &q4[s], h / 6.0);
        }
        t += h;
        step += 1;
        if step % every == 0 || t >= settings.t_end - 1e-12 {
            for (gs, rec) in g.iter().zip(metrics_of(&big)?) {
                worst = worst.max(linalg::max_abs(&(rec - gs)) / linalg::max_abs(gs));
            }
        }
    }
    Ok(worst)
}
