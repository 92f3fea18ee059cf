use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::chart::Chart;
use super::jet::{grid_jet, point_jet, Jet};
use crate::error::{Error, Result};
use crate::linalg;

/// Matrix-valued sampler `x ↦ F(x)`; metrics return `n×n`, scalars `1×1`.
pub type FieldFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

#[derive(Debug, Clone, PartialEq)]
enum Data {
    Point(Jet),
    Grid(Vec<DMatrix<f64>>),
}

/// A matrix-valued field on a chart.
///
/// Point charts carry a full second-order jet; grid charts carry one value per
/// lattice site and differentiate on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    chart: Chart,
    data: Data,
}

/// Symmetric positive-definite metric components `g_ij`.
pub type MetricField = Field;

impl Field {
    pub fn from_fn<F>(chart: Chart, f: &F) -> Result<Self>
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Sync + ?Sized,
    {
        chart.validate()?;
        let data = match &chart {
            Chart::Point(p) => Data::Point(point_jet(f, &p.point, p.step)?),
            Chart::Grid(g) => {
                let vals = (0..g.len())
                    .into_par_iter()
                    .map(|s| {
                        let x = g.coords(s);
                        let v = f(&x);
                        if v.iter().all(|c| c.is_finite()) {
                            Ok(v)
                        } else {
                            Err(Error::StencilOutOfDomain { point: x })
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Data::Grid(vals)
            }
        };
        Ok(Field { chart, data })
    }

    /// Metric built from a sampler, checked for symmetry and positive-definiteness.
    pub fn metric_from_fn<F>(chart: Chart, f: &F) -> Result<Self>
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Sync + ?Sized,
    {
        if let Chart::Point(p) = &chart {
            chart.validate()?;
            let g0 = f(&p.point);
            if g0.iter().any(|c| !c.is_finite()) {
                return Err(Error::StencilOutOfDomain { point: p.point.clone() });
            }
            linalg::check_spd(&g0, 0)?;
        }
        let field = Field::from_fn(chart, f)?;
        field.check_metric()?;
        Ok(field)
    }

    pub fn from_jet(chart: Chart, jet: Jet) -> Result<Self> {
        chart.validate()?;
        match &chart {
            Chart::Point(p) if jet.dim() == p.point.len() => Ok(Field { chart, data: Data::Point(jet) }),
            Chart::Point(_) => Err(Error::ShapeMismatch("jet dimension differs from chart".into())),
            Chart::Grid(_) => Err(Error::ShapeMismatch("jets only describe point charts".into())),
        }
    }

    pub fn from_values(chart: Chart, values: Vec<DMatrix<f64>>) -> Result<Self> {
        chart.validate()?;
        match &chart {
            Chart::Grid(g) if g.len() == values.len() => Ok(Field { chart, data: Data::Grid(values) }),
            Chart::Grid(_) => Err(Error::ShapeMismatch("value count differs from grid size".into())),
            Chart::Point(_) => Err(Error::ShapeMismatch("point charts need a jet".into())),
        }
    }

    pub fn chart(&self) -> &Chart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn len(&self) -> usize {
        self.chart.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, sample: usize) -> &DMatrix<f64> {
        match &self.data {
            Data::Point(j) => &j.value,
            Data::Grid(v) => &v[sample],
        }
    }

    pub fn values(&self) -> Vec<DMatrix<f64>> {
        match &self.data {
            Data::Point(j) => vec![j.value.clone()],
            Data::Grid(v) => v.clone(),
        }
    }

    pub fn jet(&self, sample: usize) -> Jet {
        match (&self.chart, &self.data) {
            (_, Data::Point(j)) => j.clone(),
            (Chart::Grid(g), Data::Grid(v)) => grid_jet(g, v, sample),
            _ => unreachable!("chart and data kinds always agree"),
        }
    }

    pub fn jets(&self) -> Vec<Jet> {
        match (&self.chart, &self.data) {
            (_, Data::Point(j)) => vec![j.clone()],
            (Chart::Grid(g), Data::Grid(v)) => (0..g.len()).into_par_iter().map(|s| grid_jet(g, v, s)).collect(),
            _ => unreachable!("chart and data kinds always agree"),
        }
    }

    /// Symmetry and positive-definiteness at every sample.
    pub fn check_metric(&self) -> Result<()> {
        let n = self.dim();
        for s in 0..self.len() {
            let g = self.value(s);
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::ShapeMismatch(format!("metric sample {s} is {}x{}", g.nrows(), g.ncols())));
            }
            let asym = linalg::max_abs(&(g - g.transpose()));
            if asym > 1e-12 * linalg::max_abs(g).max(1.0) {
                return Err(Error::ShapeMismatch(format!("metric sample {s} is not symmetric")));
            }
            linalg::check_spd(g, s)?;
        }
        Ok(())
    }

    /// `a·self + b·other` on the same chart.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        if self.chart != other.chart {
            return Err(Error::ShapeMismatch("fields live on different charts".into()));
        }
        let data = match (&self.data, &other.data) {
            (Data::Point(x), Data::Point(y)) => Data::Point(x.combine(a, y, b)),
            (Data::Grid(x), Data::Grid(y)) => Data::Grid(x.iter().zip(y).map(|(p, q)| p * a + q * b).collect()),
            _ => unreachable!("chart and data kinds always agree"),
        };
        Ok(Field { chart: self.chart.clone(), data })
    }

    pub fn scaled(&self, c: f64) -> Field {
        let data = match &self.data {
            Data::Point(j) => Data::Point(j.scaled(c)),
            Data::Grid(v) => Data::Grid(v.iter().map(|m| m * c).collect()),
        };
        Field { chart: self.chart.clone(), data }
    }

    /// Replaces the sample values of a metric.
    ///
    /// Grid charts take the values as they are. On a point chart the new value
    /// `M` carries the jet along by the congruence `E = L₀⁻ᵀ Lᵀ`, with
    /// `g₀ = L₀L₀ᵀ` and `M = LLᵀ`, so that `Eᵀ g₀ E = M`. Homotheties and
    /// constant-coefficient changes are reproduced exactly.
    pub fn with_metric_values(&self, values: Vec<DMatrix<f64>>) -> Result<Field> {
        match &self.data {
            Data::Grid(_) => Field::from_values(self.chart.clone(), values),
            Data::Point(j) => {
                let [m]: [DMatrix<f64>; 1] = values
                    .try_into()
                    .map_err(|_| Error::ShapeMismatch("point chart takes exactly one value".into()))?;
                let l0_inv = linalg::cholesky_lower_inverse(&j.value, 0)?;
                linalg::check_spd(&m, 0)?;
                let l = m
                    .clone()
                    .cholesky()
                    .ok_or(Error::NotPositiveDefinite { sample: 0, min_eigenvalue: linalg::min_eigenvalue(&m) })?
                    .l();
                let e = l0_inv.transpose() * l.transpose();
                let mut jet = j.congruence(&e);
                jet.value = m;
                Ok(Field { chart: self.chart.clone(), data: Data::Point(jet) })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_checks_report_offending_sample() {
        let chart = Chart::grid(2, 8, 1.0).unwrap();
        let f = |x: &[f64]| {
            let mut m = DMatrix::identity(2, 2);
            if x[0] > 0.5 && x[1] > 0.5 {
                m[(1, 1)] = -1.0;
            }
            m
        };
        match Field::metric_from_fn(chart, &f) {
            Err(Error::NotPositiveDefinite { sample, min_eigenvalue }) => {
                assert!(sample > 0);
                assert_eq!(min_eigenvalue, -1.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn point_transport_scales_homothetically() {
        let chart = Chart::point(vec![0.3, -0.1], 1e-2).unwrap();
        let f = |x: &[f64]| DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0 + x[0] * x[0], 2.0 + x[1]]));
        let g = Field::metric_from_fn(chart, &f).unwrap();
        let scaled = g.with_metric_values(vec![g.value(0) * 0.25]).unwrap();
        let (a, b) = (g.jet(0), scaled.jet(0));
        for k in 0..2 {
            assert!(linalg::max_abs(&(&b.d1[k] - &a.d1[k] * 0.25)) < 1e-15);
        }
        assert!(linalg::max_abs(&(b.second(0, 0) - a.second(0, 0) * 0.25)) < 1e-15);
    }
}
