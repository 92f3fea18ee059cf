use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bialternate::{bialternate_product, kulkarni_nomizu, velocity_from_rate};
use crate::error::{Error, Result};
use crate::tensor_kernel::curvature::{curvature, SampleCurvature};
use crate::tensor_kernel::field::MetricField;
use crate::tensor_kernel::tensor::Tensor4;

fn require_three(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { required: 3, actual: n });
    }
    Ok(())
}

/// `−2 Ric`.
pub fn ricci_velocity(c: &SampleCurvature) -> DMatrix<f64> {
    &c.ricci * -2.0
}

/// Velocity whose product with `g` has the pair trace of `−2 Riem`.
pub fn induced_velocity(c: &SampleCurvature) -> Result<DMatrix<f64>> {
    velocity_from_rate(&c.riemann.scaled(-2.0), &c.metric, &c.inverse)
}

/// `α Riem + β (∂ln𝒢/∂t) G` with `∂ln𝒢/∂t = g^{ik}(−2 R_ik) = −2R`.
pub fn riemann_type_rate(c: &SampleCurvature, alpha: f64, beta: f64) -> Tensor4 {
    let dlog_det = -2.0 * c.scalar;
    c.riemann.combine(alpha, &bialternate_product(&c.metric), beta * dlog_det)
}

/// `max |ḡ∧g + 2 Riem|` at one sample.
pub fn eq1_residual_at(c: &SampleCurvature, velocity: &DMatrix<f64>) -> f64 {
    kulkarni_nomizu(velocity, &c.metric).add(&c.riemann.scaled(2.0)).max_abs()
}

pub fn ricci_flow_rhs(g: &MetricField) -> Result<Vec<DMatrix<f64>>> {
    Ok(curvature(g)?.iter().map(ricci_velocity).collect())
}

/// Metric velocity induced by `∂G/∂t = −2 Riem` through its pair trace,
/// `ḡ = (−2 Ric + R g/(n−1))/(n−2)`.
pub fn induced_riemann_flow_rhs(g: &MetricField) -> Result<Vec<DMatrix<f64>>> {
    require_three(g.dim())?;
    curvature(g)?.iter().map(induced_velocity).collect()
}

/// The `G`-velocity `α Riem + β (∂ln𝒢/∂t) G`, one tensor per sample.
pub fn riemann_type_flow_rhs(g: &MetricField, alpha: f64, beta: f64) -> Result<Vec<Tensor4>> {
    require_three(g.dim())?;
    Ok(curvature(g)?.iter().map(|c| riemann_type_rate(c, alpha, beta)).collect())
}

/// Largest component of `∂G/∂t(ḡ) + 2 Riem(g)` over all samples.
pub fn riemann_flow_residual(g: &MetricField, velocity: &[DMatrix<f64>]) -> Result<f64> {
    if velocity.len() != g.len() {
        return Err(Error::ShapeMismatch("one velocity per sample expected".into()));
    }
    let curv = curvature(g)?;
    Ok(curv
        .par_iter()
        .zip(velocity)
        .map(|(c, v)| eq1_residual_at(c, v))
        .reduce(|| 0.0, f64::max))
}

/// The two constants for which the Riemann-type flow reproduces `ḡ = −2 Ric` on
/// three-dimensional and conformally flat metrics, in the crate's orientation.
pub fn riemann_type_constants(n: usize) -> (f64, f64) {
    let nf = n as f64;
    (-2.0 * (nf - 2.0), 1.0 / (nf - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_kernel::chart::Chart;
    use crate::tensor_kernel::families;
    use crate::linalg;

    fn sphere3() -> MetricField {
        MetricField::metric_from_fn(Chart::point(vec![0.0; 3], 1e-2).unwrap(), &*families::sphere_stereographic(3)).unwrap()
    }

    #[test]
    fn sphere_velocities() {
        let g = sphere3();
        let g0 = g.value(0).clone();
        let ricci = &ricci_flow_rhs(&g).unwrap()[0];
        assert!(linalg::max_abs(&(ricci + &g0 * 4.0)) < 1e-6 * 4.0 * 4.0);
        let induced = &induced_riemann_flow_rhs(&g).unwrap()[0];
        assert!(linalg::max_abs(&(induced + &g0)) < 1e-6 * 4.0);
    }

    #[test]
    fn induced_flow_needs_three_dimensions() {
        let g = MetricField::metric_from_fn(Chart::point(vec![0.0; 2], 1e-2).unwrap(), &*families::flat(2)).unwrap();
        assert!(matches!(induced_riemann_flow_rhs(&g), Err(Error::DimensionTooSmall { .. })));
        assert!(matches!(riemann_type_flow_rhs(&g, 1.0, 1.0), Err(Error::DimensionTooSmall { .. })));
    }

    #[test]
    fn riemann_type_matches_ricci_flow_on_sphere() {
        let g = sphere3();
        let (a, b) = riemann_type_constants(3);
        let rate = &riemann_type_flow_rhs(&g, a, b).unwrap()[0];
        let ric = &ricci_flow_rhs(&g).unwrap()[0];
        let lhs = kulkarni_nomizu(ric, g.value(0));
        assert!(lhs.sub(rate).max_abs() < 1e-6 * lhs.max_abs());
        // the opposite sign of α does not
        let wrong = &riemann_type_flow_rhs(&g, -a, b).unwrap()[0];
        assert!(lhs.sub(wrong).max_abs() > 0.1 * lhs.max_abs());
    }
}
