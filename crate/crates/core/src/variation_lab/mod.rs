//! Directional derivatives of curvature, linearized flows, and Riemann-soliton residuals.

mod soliton;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use soliton::{classify_soliton, soliton_residual, soliton_tensor, SolitonData, SolitonKind, SolitonPotential, SolitonResidual};

use crate::error::{Error, Result};
use crate::evolve::{rk4_step, Settings};
use crate::flow_engine::{induced_riemann_flow_rhs, ricci_flow_rhs};
use crate::linalg;
use crate::tensor_kernel::chart::Chart;
use crate::tensor_kernel::curvature::curvature;
use crate::tensor_kernel::field::{Field, MetricField};
use crate::tensor_kernel::tensor::Tensor4;

/// A symmetric variation `h = ∂g/∂ε` on the chart of a metric.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationField {
    field: Field,
}

impl PerturbationField {
    pub fn new(field: Field) -> Result<Self> {
        let n = field.dim();
        for s in 0..field.len() {
            let h = field.value(s);
            if h.nrows() != n || h.ncols() != n {
                return Err(Error::ShapeMismatch(format!("perturbation sample {s} is {}x{}", h.nrows(), h.ncols())));
            }
            if linalg::max_abs(&(h - h.transpose())) > 1e-12 * linalg::max_abs(h).max(1.0) {
                return Err(Error::ShapeMismatch(format!("perturbation sample {s} is not symmetric")));
            }
        }
        Ok(PerturbationField { field })
    }

    pub fn from_fn<F>(chart: Chart, f: &F) -> Result<Self>
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Sync + ?Sized,
    {
        Self::new(Field::from_fn(chart, f)?)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    /// `h^{ik} = g^{ij} h_jl g^{lk}`, so that `∂g^{ik}/∂ε = −h^{ik}`.
    pub fn raised(&self, g: &MetricField) -> Result<Vec<DMatrix<f64>>> {
        if g.chart() != self.field.chart() {
            return Err(Error::ShapeMismatch("perturbation and metric live on different charts".into()));
        }
        (0..g.len())
            .map(|s| {
                let ginv = linalg::spd_inverse(g.value(s), s)?;
                Ok(&ginv * self.field.value(s) * &ginv)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureOperator {
    Ricci,
    Riemann,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearizedLaw {
    Ricci,
    RiemannInduced,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurvatureDerivative {
    Ricci(Vec<DMatrix<f64>>),
    Riemann(Vec<Tensor4>),
}

impl CurvatureDerivative {
    pub fn max_abs(&self) -> f64 {
        match self {
            CurvatureDerivative::Ricci(v) => v.iter().map(linalg::max_abs).fold(0.0, f64::max),
            CurvatureDerivative::Riemann(v) => v.iter().map(Tensor4::max_abs).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DerivativeOptions {
    /// Step relative to `max|g| / max|h|`.
    pub eps: f64,
    /// Combine the steps `ε` and `ε/2` to cancel the `ε²` error.
    pub richardson: bool,
    pub max_halvings: u32,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        DerivativeOptions { eps: 1e-4, richardson: false, max_halvings: 20 }
    }
}

trait Linear: Sized + Send {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self;
}

impl Linear for DMatrix<f64> {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        self * a + other * b
    }
}

impl Linear for Tensor4 {
    fn lin(&self, a: f64, other: &Self, b: f64) -> Self {
        self.combine(a, other, b)
    }
}

fn sup(field: &Field) -> f64 {
    (0..field.len()).map(|s| linalg::max_abs(field.value(s))).fold(0.0, f64::max)
}

/// Central difference of a field operator `F` at `g` in direction `h`, returning
/// the derivative and the absolute step used.
fn central<T: Linear, F>(g: &MetricField, h: &PerturbationField, opts: &DerivativeOptions, op: F) -> Result<(Vec<T>, f64)>
where
    F: Fn(&MetricField) -> Result<Vec<T>>,
{
    if !(opts.eps > 0.0) {
        return Err(Error::InvalidSettings(format!("eps must be positive, got {}", opts.eps)));
    }
    let hf = h.field();
    let hn = sup(hf);
    if hn == 0.0 {
        let zero = op(g)?.iter().map(|x| x.lin(0.0, x, 0.0)).collect();
        return Ok((zero, 0.0));
    }
    let mut e = opts.eps * sup(g) / hn;
    let mut halvings = 0;
    let (plus, minus) = loop {
        let pair = g.combine(1.0, hf, e).and_then(|p| {
            p.check_metric()?;
            let m = g.combine(1.0, hf, -e)?;
            m.check_metric()?;
            Ok((p, m))
        });
        match pair {
            Ok(p) => break p,
            Err(Error::NotPositiveDefinite { .. }) if halvings < opts.max_halvings => {
                halvings += 1;
                e *= 0.5;
            }
            Err(Error::NotPositiveDefinite { .. }) => return Err(Error::PerturbationTooLarge { eps: e }),
            Err(err) => return Err(err),
        }
    };
    let diff = |p: Vec<T>, m: Vec<T>, e: f64| -> Vec<T> {
        p.iter().zip(&m).map(|(a, b)| a.lin(0.5 / e, b, -0.5 / e)).collect()
    };
    let coarse = diff(op(&plus)?, op(&minus)?, e);
    if !opts.richardson {
        return Ok((coarse, e));
    }
    // g ± (e/2)h lies between g − eh and g + eh, so it is positive definite too
    let half = 0.5 * e;
    let fine = diff(op(&g.combine(1.0, hf, half)?)?, op(&g.combine(1.0, hf, -half)?)?, half);
    Ok((fine.iter().zip(&coarse).map(|(f, c)| f.lin(4.0 / 3.0, c, -1.0 / 3.0)).collect(), e))
}

/// `(F(g + εh) − F(g − εh)) / 2ε` for `F = Ric` or `F = Riem`.
pub fn directional_curvature_derivative(
    g: &MetricField,
    h: &PerturbationField,
    which: CurvatureOperator,
    opts: &DerivativeOptions,
) -> Result<CurvatureDerivative> {
    if g.chart() != h.field().chart() {
        return Err(Error::ShapeMismatch("perturbation and metric live on different charts".into()));
    }
    Ok(match which {
        CurvatureOperator::Ricci => CurvatureDerivative::Ricci(
            central(g, h, opts, |m| Ok(curvature(m)?.into_iter().map(|c| c.ricci).collect()))?.0,
        ),
        CurvatureOperator::Riemann => CurvatureDerivative::Riemann(
            central(g, h, opts, |m| Ok(curvature(m)?.into_iter().map(|c| c.riemann).collect()))?.0,
        ),
    })
}

/// `∂h/∂t` along the linearization of a flow: the directional derivative of its
/// metric velocity, `−2 DRic(g)[h]` for Ricci flow.
pub fn linearized_flow_rhs(
    g: &MetricField,
    h: &PerturbationField,
    law: LinearizedLaw,
    opts: &DerivativeOptions,
) -> Result<Vec<DMatrix<f64>>> {
    if g.chart() != h.field().chart() {
        return Err(Error::ShapeMismatch("perturbation and metric live on different charts".into()));
    }
    let out = match law {
        LinearizedLaw::Ricci => central(g, h, opts, ricci_flow_rhs)?,
        LinearizedLaw::RiemannInduced => central(g, h, opts, induced_riemann_flow_rhs)?,
    };
    Ok(out.0)
}

/// State of a flow and its linearization at the final time.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedRun {
    pub t: f64,
    pub g: Vec<DMatrix<f64>>,
    pub h: Vec<DMatrix<f64>>,
}

/// RK4 on the pair `(g, h)` with `ġ = V(g)`, `ḣ = DV(g)[h]`, on a grid chart.
pub fn integrate_linearized(
    g0: &MetricField,
    h0: &PerturbationField,
    law: LinearizedLaw,
    settings: &Settings,
    opts: &DerivativeOptions,
) -> Result<LinearizedRun> {
    settings.validate()?;
    if !matches!(g0.chart(), Chart::Grid(_)) {
        return Err(Error::InvalidChart("linearized integration needs a grid chart".into()));
    }
    g0.check_metric()?;
    let velocity = |g: &MetricField| match law {
        LinearizedLaw::Ricci => ricci_flow_rhs(g),
        LinearizedLaw::RiemannInduced => induced_riemann_flow_rhs(g),
    };
    let deriv = |y: &Vec<Vec<DMatrix<f64>>>| -> Result<Vec<Vec<DMatrix<f64>>>> {
        let g = g0.with_metric_values(y[0].clone())?;
        let h = PerturbationField::new(Field::from_values(g0.chart().clone(), y[1].clone())?)?;
        Ok(vec![velocity(&g)?, linearized_flow_rhs(&g, &h, law, opts)?])
    };
    let mut y = vec![g0.values(), h0.field().values()];
    let mut t = 0.0;
    let end_tol = 1e-12 * settings.t_end.max(1.0);
    while t < settings.t_end - end_tol {
        let h = settings.dt.min(settings.t_end - t);
        let k1 = deriv(&y)?;
        y = rk4_step(&y, h, k1, |_, s| deriv(s))?;
        t += h;
    }
    let mut it = y.into_iter();
    let (g, h) = (it.next().unwrap_or_default(), it.next().unwrap_or_default());
    Ok(LinearizedRun { t: settings.t_end, g, h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_kernel::curvature::riemann;
    use crate::tensor_kernel::families;

    fn torus_point(n: usize) -> MetricField {
        let x: Vec<f64> = (0..n).map(|i| 0.1 + 0.13 * i as f64).collect();
        MetricField::metric_from_fn(Chart::point(x, 1e-2).unwrap(), &*families::ConformalTorus::new(0.2, 1, 5).metric(n))
            .unwrap()
    }

    fn as_perturbation(g: &MetricField) -> PerturbationField {
        PerturbationField::new(g.clone()).unwrap()
    }

    #[test]
    fn riemann_is_homogeneous_of_degree_one() {
        let g = torus_point(3);
        let opts = DerivativeOptions { richardson: true, ..Default::default() };
        let d = directional_curvature_derivative(&g, &as_perturbation(&g), CurvatureOperator::Riemann, &opts).unwrap();
        let r = &riemann(&g).unwrap()[0];
        match d {
            CurvatureDerivative::Riemann(v) => assert!(v[0].sub(r).max_abs() <= 1e-8 * r.max_abs().max(1.0)),
            _ => unreachable!(),
        }
    }

    #[test]
    fn ricci_is_scale_invariant() {
        let g = torus_point(3);
        let d = directional_curvature_derivative(&g, &as_perturbation(&g), CurvatureOperator::Ricci, &Default::default())
            .unwrap();
        assert!(d.max_abs() < 1e-8);
    }

    #[test]
    fn raised_perturbation_is_the_inverse_metric_derivative() {
        let g = torus_point(3);
        let h = PerturbationField::from_fn(g.chart().clone(), &|x: &[f64]| {
            DMatrix::from_fn(3, 3, |i, j| 0.1 * ((i + j) as f64 + x[0]).sin())
        })
        .unwrap();
        let e = 1e-5;
        let inv = |s: f64| g.combine(1.0, h.field(), s).unwrap().value(0).clone().try_inverse().unwrap();
        let fd = (inv(e) - inv(-e)) / (2.0 * e);
        assert!(linalg::max_abs(&(fd + &h.raised(&g).unwrap()[0])) < 1e-8);
    }

    #[test]
    fn oversized_perturbation_is_halved_or_rejected() {
        let g = torus_point(3);
        let big = PerturbationField::new(g.scaled(-1e6)).unwrap();
        let opts = DerivativeOptions { eps: 4.0, max_halvings: 0, ..Default::default() };
        assert!(matches!(
            directional_curvature_derivative(&g, &big, CurvatureOperator::Riemann, &opts),
            Err(Error::PerturbationTooLarge { .. })
        ));
        let opts = DerivativeOptions { eps: 4.0, max_halvings: 3, ..Default::default() };
        assert!(directional_curvature_derivative(&g, &big, CurvatureOperator::Riemann, &opts).is_ok());
    }

    #[test]
    fn einstein_scaling_direction_is_stationary_under_linearized_ricci_flow() {
        let g = MetricField::metric_from_fn(
            Chart::point(vec![0.2, -0.1, 0.3], 1e-2).unwrap(),
            &*families::sphere_stereographic(3),
        )
        .unwrap();
        let dh = linearized_flow_rhs(&g, &as_perturbation(&g), LinearizedLaw::Ricci, &Default::default()).unwrap();
        assert!(linalg::max_abs(&dh[0]) < 1e-8);
    }
}
