use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bialternate::{bialternate_product, kulkarni_nomizu};
use crate::error::{Error, Result};
use crate::tensor_kernel::curvature::sample_curvature;
use crate::tensor_kernel::field::{Field, MetricField};
use crate::tensor_kernel::norm::{norm_with_inverse, TensorRef};
use crate::tensor_kernel::tensor::Tensor4;

/// The vector field of a soliton: a potential `f` (`1×1` samples) with `V = ∇f`,
/// or covariant components `V_i` (`n×1` samples).
#[derive(Debug, Clone, PartialEq)]
pub enum SolitonPotential {
    Gradient(Field),
    Vector(Field),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonData {
    pub lambda: f64,
    pub potential: SolitonPotential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolitonKind {
    Shrinking,
    Static,
    Expanding,
}

pub fn classify_soliton(lambda: f64) -> SolitonKind {
    if lambda < 0.0 {
        SolitonKind::Shrinking
    } else if lambda > 0.0 {
        SolitonKind::Expanding
    } else {
        SolitonKind::Static
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonResidual {
    pub residual: Vec<Tensor4>,
    /// Largest component.
    pub max_abs: f64,
    /// Largest pointwise norm, measured with the metric.
    pub max_norm: f64,
}

/// `½ L_V g` at every sample: the covariant Hessian `∂_i∂_k f − Γ^l_ik ∂_l f`
/// in the gradient case, `½(∇_i V_k + ∇_k V_i)` otherwise.
pub fn soliton_tensor(g: &MetricField, potential: &SolitonPotential) -> Result<Vec<DMatrix<f64>>> {
    let (field, gradient) = match potential {
        SolitonPotential::Gradient(f) => (f, true),
        SolitonPotential::Vector(v) => (v, false),
    };
    let n = g.dim();
    if field.chart() != g.chart() {
        return Err(Error::ShapeMismatch("potential and metric live on different charts".into()));
    }
    let rows = if gradient { 1 } else { n };
    if (0..field.len()).any(|s| field.value(s).shape() != (rows, 1)) {
        return Err(Error::ShapeMismatch(format!("potential samples must be {rows}x1")));
    }
    (0..g.len())
        .into_par_iter()
        .map(|s| {
            let c = sample_curvature(&g.jet(s), s)?;
            let p = field.jet(s);
            let gamma = &c.christoffel;
            Ok(if gradient {
                DMatrix::from_fn(n, n, |i, k| {
                    let conn: f64 = (0..n).map(|l| gamma.get(l, i, k) * p.d1[l][(0, 0)]).sum();
                    p.second(i, k)[(0, 0)] - conn
                })
            } else {
                let nabla = DMatrix::from_fn(n, n, |i, k| {
                    let conn: f64 = (0..n).map(|l| gamma.get(l, i, k) * p.value[(l, 0)]).sum();
                    p.d1[i][(k, 0)] - conn
                });
                (&nabla + nabla.transpose()) * 0.5
            })
        })
        .collect()
}

/// `Riem + λ G + H∧g` with `H = ½ L_V g`; it vanishes exactly on a Riemann soliton.
pub fn soliton_residual(g: &MetricField, data: &SolitonData) -> Result<SolitonResidual> {
    let hess = soliton_tensor(g, &data.potential)?;
    let parts = (0..g.len())
        .into_par_iter()
        .map(|s| {
            let c = sample_curvature(&g.jet(s), s)?;
            let r = c
                .riemann
                .add(&bialternate_product(&c.metric).scaled(data.lambda))
                .add(&kulkarni_nomizu(&hess[s], &c.metric));
            let norm = norm_with_inverse(TensorRef::Four(&r), &c.inverse);
            Ok((r, norm))
        })
        .collect::<Result<Vec<_>>>()?;
    let max_abs = parts.iter().map(|(r, _)| r.max_abs()).fold(0.0, f64::max);
    let max_norm = parts.iter().map(|(_, n)| *n).fold(0.0, f64::max);
    Ok(SolitonResidual { residual: parts.into_iter().map(|(r, _)| r).collect(), max_abs, max_norm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_kernel::chart::Chart;
    use crate::tensor_kernel::families;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn classification_is_by_sign() {
        assert_eq!(classify_soliton(-1.0), SolitonKind::Shrinking);
        assert_eq!(classify_soliton(0.0), SolitonKind::Static);
        assert_eq!(classify_soliton(2.0), SolitonKind::Expanding);
    }

    #[test]
    fn gaussian_soliton_on_flat_space() {
        let chart = Chart::point(vec![0.3, -0.2, 0.5], 1e-2).unwrap();
        let g = MetricField::metric_from_fn(chart.clone(), &*families::flat(3)).unwrap();
        for lambda in [-2.0, 0.0, 1.5] {
            let f = Field::from_fn(chart.clone(), &move |x: &[f64]| {
                scalar(-lambda * x.iter().map(|v| v * v).sum::<f64>() / 4.0)
            })
            .unwrap();
            let r = soliton_residual(&g, &SolitonData { lambda, potential: SolitonPotential::Gradient(f) }).unwrap();
            assert!(r.max_abs <= 1e-10, "{lambda}: {}", r.max_abs);
        }
    }

    #[test]
    fn round_sphere_is_a_shrinking_soliton() {
        let chart = Chart::point(vec![0.2, 0.1, -0.3], 1e-2).unwrap();
        let g = MetricField::metric_from_fn(chart.clone(), &*families::sphere_stereographic(3)).unwrap();
        let zero = Field::from_fn(chart, &|_: &[f64]| scalar(0.0)).unwrap();
        let res = |lambda| {
            soliton_residual(&g, &SolitonData { lambda, potential: SolitonPotential::Gradient(zero.clone()) })
                .unwrap()
                .max_norm
        };
        assert!(res(-1.0) < 1e-6);
        assert!(res(1.0) > 1.0);
        assert_eq!(classify_soliton(-1.0), SolitonKind::Shrinking);
    }

    #[test]
    fn gradient_vector_field_matches_potential() {
        let chart = Chart::point(vec![0.1, 0.2, 0.3], 1e-2).unwrap();
        let g = MetricField::metric_from_fn(chart.clone(), &*families::ConformalTorus::new(0.2, 1, 2).metric(3)).unwrap();
        let f = |x: &[f64]| x[0] * x[1] + (x[2]).sin();
        let pot = Field::from_fn(chart.clone(), &|x: &[f64]| scalar(f(x))).unwrap();
        let v = Field::from_fn(chart, &|x: &[f64]| DMatrix::from_column_slice(3, 1, &[x[1], x[0], x[2].cos()])).unwrap();
        let a = &soliton_tensor(&g, &SolitonPotential::Gradient(pot)).unwrap()[0];
        let b = &soliton_tensor(&g, &SolitonPotential::Vector(v)).unwrap()[0];
        assert!((a - b).abs().max() < 1e-8);
    }
}
