//! Curvature of orthogonal metrics `g = diag(H_1², …, H_n²)` from Lamé coefficients.

use nalgebra::DMatrix;

use super::chart::Chart;
use super::field::Field;
use super::jet::Jet;
use super::tensor::Tensor4;
use crate::error::{Error, Result};

struct Lame<'a> {
    jet: &'a Jet,
}

impl Lame<'_> {
    fn h(&self, i: usize) -> f64 {
        self.jet.value[(i, 0)]
    }
    fn d(&self, i: usize, a: usize) -> f64 {
        self.jet.d1[a][(i, 0)]
    }
    fn dd(&self, i: usize, a: usize, b: usize) -> f64 {
        self.jet.second(a, b)[(i, 0)]
    }

    /// `R_hiik` for distinct `h, i, k`, displayed orientation.
    fn hiik(&self, h: usize, i: usize, k: usize) -> f64 {
        -self.h(i)
            * (self.dd(i, h, k)
                - self.d(i, h) * self.d(h, k) / self.h(h)
                - self.d(i, k) * self.d(k, h) / self.h(k))
    }

    /// `R_hiih` for `h ≠ i`, displayed orientation.
    fn hiih(&self, h: usize, i: usize) -> f64 {
        let n = self.jet.dim();
        // ∂_h(∂_h H_i / H_h)
        let a = self.dd(i, h, h) / self.h(h) - self.d(i, h) * self.d(h, h) / (self.h(h) * self.h(h));
        let b = self.dd(h, i, i) / self.h(i) - self.d(h, i) * self.d(i, i) / (self.h(i) * self.h(i));
        let c: f64 = (0..n)
            .filter(|&l| l != h && l != i)
            .map(|l| self.d(h, l) * self.d(i, l) / (self.h(l) * self.h(l)))
            .sum();
        -self.h(h) * self.h(i) * (a + b + c)
    }
}

/// Displayed-orientation tensor assembled from the three Lamé component formulas.
pub fn lame_displayed_from_jet(jet: &Jet) -> Tensor4 {
    let n = jet.dim();
    let lame = Lame { jet };
    Tensor4::from_fn(n, |a, b, c, d| {
        if a == b || c == d {
            return 0.0;
        }
        if (a, b) == (d, c) {
            return lame.hiih(a, b);
        }
        if (a, b) == (c, d) {
            return -lame.hiih(a, b);
        }
        // exactly one index shared between the pairs, or none
        let shared = [a, b].into_iter().find(|x| *x == c || *x == d);
        let Some(s) = shared else { return 0.0 };
        let (h, mut sign) = if b == s { (a, 1.0) } else { (b, -1.0) };
        let k = if c == s { d } else {
            sign = -sign;
            c
        };
        sign * lame.hiik(h, s, k)
    })
}

/// Sphere-positive curvature of the orthogonal metric with coefficients `H`.
///
/// `lame` returns the column `(H_1, …, H_n)` at a point.
pub fn orthogonal_metric_curvature<F>(lame: &F, chart: Chart) -> Result<Vec<Tensor4>>
where
    F: Fn(&[f64]) -> DMatrix<f64> + Sync + ?Sized,
{
    let n = chart.dim();
    let field = Field::from_fn(chart, lame)?;
    for s in 0..field.len() {
        let v = field.value(s);
        if v.nrows() != n || v.ncols() != 1 {
            return Err(Error::ShapeMismatch(format!("expected {n} Lamé coefficients")));
        }
        if let Some(index) = (0..n).find(|&i| !(v[(i, 0)] > 0.0)) {
            return Err(Error::NonpositiveLame { sample: s, index, value: v[(index, 0)] });
        }
    }
    Ok(field.jets().iter().map(|j| lame_displayed_from_jet(j).neg()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_kernel::curvature::riemann;
    use crate::tensor_kernel::families::DiagonalLame;
    use crate::tensor_kernel::field::MetricField;

    fn cross_check(exprs: &[&str], x: Vec<f64>) {
        let d = DiagonalLame::new(exprs.iter().copied());
        let chart = Chart::point(x, 1e-2).unwrap();
        let from_lame = &orthogonal_metric_curvature(&*d.lame().unwrap(), chart.clone()).unwrap()[0];
        let g = MetricField::metric_from_fn(chart, &*d.metric().unwrap()).unwrap();
        let generic = &riemann(&g).unwrap()[0];
        let scale = generic.max_abs().max(1.0);
        assert!(from_lame.sub(generic).max_abs() < 1e-7 * scale, "{exprs:?}");
    }

    #[test]
    fn matches_generic_kernel() {
        cross_check(&["1", "x0"], vec![1.3, 0.2]);
        cross_check(&["sqrt(2 + sin(x0))", "sqrt(2 + sin(x0))", "sqrt(2 + sin(x0))"], vec![0.4, 0.1, -0.3]);
        cross_check(
            &["exp(x1*x2/3) + x0^2/5 + 1", "1 + sin(x0)*x2/4 + x1^2/7", "2 + x0*x1/3 + cos(x2)/5"],
            vec![0.3, -0.2, 0.5],
        );
    }

    #[test]
    fn distinct_indices_vanish_and_unit_coefficients_are_flat() {
        let d = DiagonalLame::new(["1", "1", "1", "1"]);
        let r = orthogonal_metric_curvature(&*d.lame().unwrap(), Chart::point(vec![0.0; 4], 1e-2).unwrap()).unwrap();
        assert_eq!(r[0].max_abs(), 0.0);
        let d = DiagonalLame::new(["1 + x1^2", "2 + x2*x3", "1 + x0", "3 + x0*x1*x2"]);
        let r = &orthogonal_metric_curvature(&*d.lame().unwrap(), Chart::point(vec![0.1, 0.2, 0.3, 0.4], 1e-2).unwrap())
            .unwrap()[0];
        assert_eq!(r.get(0, 1, 2, 3), 0.0);
        assert_eq!(r.get(3, 1, 0, 2), 0.0);
    }

    #[test]
    fn nonpositive_coefficient_is_rejected() {
        let d = DiagonalLame::new(["1", "x0"]);
        let err = orthogonal_metric_curvature(&*d.lame().unwrap(), Chart::point(vec![-0.5, 0.0], 1e-2).unwrap());
        assert!(matches!(err, Err(Error::NonpositiveLame { index: 1, .. })));
    }
}
