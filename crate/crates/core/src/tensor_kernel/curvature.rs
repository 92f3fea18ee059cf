//! Connection and curvature from metric jets.
//!
//! Two orientations of the Riemann tensor are exposed. [`riemann_displayed`]
//! evaluates
//!
//! ```text
//! R_ijkl = ½(∂_j∂_l g_ik + ∂_i∂_k g_jl − ∂_i∂_l g_jk − ∂_j∂_k g_il)
//!          − g_mn(Γ^m_jk Γ^n_il − Γ^m_jl Γ^n_ik)
//! ```
//!
//! term by term, which gives the unit sphere `R_1212 = −det g`. [`riemann`]
//! returns its negative, the orientation in which the round sphere satisfies
//! `Riem = +G`; every engine in the crate works with that one. Ricci is the
//! contraction `R_ik = g^{jl} R_ijkl`, equal to `g^{il}` applied to the
//! displayed tensor in its first and last slots, so Ricci and scalar curvature
//! agree between the two.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::field::MetricField;
use super::jet::Jet;
use super::tensor::{Connection, Tensor4};
use crate::bialternate::{bialternate_product, kulkarni_nomizu};
use crate::error::{Error, Result};
use crate::linalg;

/// Every curvature quantity at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCurvature {
    pub metric: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub christoffel: Connection,
    pub riemann: Tensor4,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

pub fn connection_from_jet(jet: &Jet, ginv: &DMatrix<f64>) -> Connection {
    let n = jet.dim();
    let mut first = vec![0.0; n * n * n];
    for l in 0..n {
        for j in 0..n {
            for k in 0..n {
                first[(l * n + j) * n + k] =
                    0.5 * (jet.d1[k][(l, j)] + jet.d1[j][(l, k)] - jet.d1[l][(j, k)]);
            }
        }
    }
    let mut second = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += ginv[(i, l)] * first[(l * n + j) * n + k];
                }
                second[(i * n + j) * n + k] = s;
            }
        }
    }
    Connection::new(n, first, second)
}

/// The displayed component formula, evaluated verbatim.
pub fn riemann_displayed_from_jet(jet: &Jet, conn: &Connection) -> Tensor4 {
    let n = jet.dim();
    let dd = |a: usize, b: usize, r: usize, c: usize| jet.second(a, b)[(r, c)];
    Tensor4::from_fn(n, |i, j, k, l| {
        let second = 0.5 * (dd(j, l, i, k) + dd(i, k, j, l) - dd(i, l, j, k) - dd(j, k, i, l));
        let mut quad = 0.0;
        for m in 0..n {
            // g_mn Γ^m_jk Γ^n_il = Γ_{n,jk} Γ^n_il after lowering the first factor
            quad += conn.lowered(m, j, k) * conn.get(m, i, l) - conn.lowered(m, j, l) * conn.get(m, i, k);
        }
        second - quad
    })
}

/// `R_ik = g^{jl} R_ijkl` and `R = g^{ik} R_ik`.
pub fn ricci_from(riemann: &Tensor4, ginv: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let ric = linalg::symmetrize(&riemann.pair_trace(ginv));
    let r = linalg::contract(ginv, &ric);
    (ric, r)
}

/// `C = Riem − (Ric∧g)/(n−2) + R·G/((n−1)(n−2))`.
pub fn weyl_from(g: &DMatrix<f64>, riemann: &Tensor4, ricci: &DMatrix<f64>, scalar: f64) -> Result<Tensor4> {
    let n = g.nrows();
    if n < 3 {
        return Err(Error::DimensionTooSmall { required: 3, actual: n });
    }
    let nf = n as f64;
    let kn = kulkarni_nomizu(ricci, g);
    let big_g = bialternate_product(g);
    Ok(riemann
        .combine(1.0, &kn, -1.0 / (nf - 2.0))
        .combine(1.0, &big_g, scalar / ((nf - 1.0) * (nf - 2.0))))
}

pub fn sample_curvature(jet: &Jet, sample: usize) -> Result<SampleCurvature> {
    let inverse = linalg::spd_inverse(&jet.value, sample)?;
    let christoffel = connection_from_jet(jet, &inverse);
    let riemann = riemann_displayed_from_jet(jet, &christoffel).neg();
    let (ricci, scalar) = ricci_from(&riemann, &inverse);
    Ok(SampleCurvature { metric: jet.value.clone(), inverse, christoffel, riemann, ricci, scalar })
}

/// Curvature at every sample, in sample order.
pub fn curvature(g: &MetricField) -> Result<Vec<SampleCurvature>> {
    if g.len() == 1 {
        return Ok(vec![sample_curvature(&g.jet(0), 0)?]);
    }
    (0..g.len())
        .into_par_iter()
        .map(|s| sample_curvature(&g.jet(s), s))
        .collect()
}

pub fn inverse_metric(g: &MetricField) -> Result<Vec<DMatrix<f64>>> {
    (0..g.len()).map(|s| linalg::spd_inverse(g.value(s), s)).collect()
}

pub fn christoffel(g: &MetricField) -> Result<Vec<Connection>> {
    (0..g.len())
        .into_par_iter()
        .map(|s| {
            let jet = g.jet(s);
            let ginv = linalg::spd_inverse(&jet.value, s)?;
            Ok(connection_from_jet(&jet, &ginv))
        })
        .collect()
}

/// Riemann tensor in the sphere-positive orientation.
pub fn riemann(g: &MetricField) -> Result<Vec<Tensor4>> {
    Ok(curvature(g)?.into_iter().map(|c| c.riemann).collect())
}

/// Riemann tensor from the displayed component formula, sign untouched.
pub fn riemann_displayed(g: &MetricField) -> Result<Vec<Tensor4>> {
    (0..g.len())
        .into_par_iter()
        .map(|s| {
            let jet = g.jet(s);
            let ginv = linalg::spd_inverse(&jet.value, s)?;
            Ok(riemann_displayed_from_jet(&jet, &connection_from_jet(&jet, &ginv)))
        })
        .collect()
}

pub fn ricci_and_scalar(g: &MetricField, riem: &[Tensor4]) -> Result<Vec<(DMatrix<f64>, f64)>> {
    if riem.len() != g.len() {
        return Err(Error::ShapeMismatch("one curvature tensor per sample expected".into()));
    }
    riem.iter()
        .enumerate()
        .map(|(s, r)| Ok(ricci_from(r, &linalg::spd_inverse(g.value(s), s)?)))
        .collect()
}

pub fn weyl(g: &MetricField, riem: &[Tensor4]) -> Result<Vec<Tensor4>> {
    if g.dim() < 3 {
        return Err(Error::DimensionTooSmall { required: 3, actual: g.dim() });
    }
    let rs = ricci_and_scalar(g, riem)?;
    riem.iter()
        .zip(rs)
        .enumerate()
        .map(|(s, (r, (ric, sc)))| weyl_from(g.value(s), r, &ric, sc))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor_kernel::chart::Chart;
    use crate::tensor_kernel::families;
    use nalgebra::DVector;

    fn point_metric<F>(x: Vec<f64>, f: F) -> MetricField
    where
        F: Fn(&[f64]) -> DMatrix<f64> + Sync,
    {
        MetricField::metric_from_fn(Chart::point(x, 1e-2).unwrap(), &f).unwrap()
    }

    #[test]
    fn christoffel_of_polar_type_metric() {
        // g = diag(1, x²) at x = 2: Γ²_12 = 1/2, Γ¹_22 = −2.
        let g = point_metric(vec![2.0, 0.3], |x| DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, x[0] * x[0]])));
        let c = &christoffel(&g).unwrap()[0];
        assert!((c.get(1, 0, 1) - 0.5).abs() < 1e-10);
        assert!((c.get(1, 1, 0) - 0.5).abs() < 1e-10);
        assert!((c.get(0, 1, 1) + 2.0).abs() < 1e-10);
        assert!(c.get(0, 0, 0).abs() < 1e-12);
        assert!(c.max_asymmetry() == 0.0);
    }

    #[test]
    fn sphere_origin_has_vanishing_connection() {
        let f = families::sphere_stereographic(2);
        let g = point_metric(vec![0.0, 0.0], move |x| f(x));
        let c = &christoffel(&g).unwrap()[0];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert!(c.get(i, j, k).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn displayed_formula_orientation_on_sphere_and_disk() {
        // Symbolic oracle: the displayed formula gives R_1212 = −det g on the
        // stereographic unit sphere and +det g on the Poincaré disk.
        let s = families::sphere_stereographic(2);
        let g = point_metric(vec![0.0, 0.0], move |x| s(x));
        let det = g.value(0).determinant();
        let disp = &riemann_displayed(&g).unwrap()[0];
        assert!((disp.get(0, 1, 0, 1) / det + 1.0).abs() < 1e-6);
        let lib = &riemann(&g).unwrap()[0];
        assert!((lib.get(0, 1, 0, 1) / det - 1.0).abs() < 1e-6);

        let p = families::hyperbolic_poincare(2);
        let g = point_metric(vec![0.0, 0.0], move |x| p(x));
        let det = g.value(0).determinant();
        let disp = &riemann_displayed(&g).unwrap()[0];
        assert!((disp.get(0, 1, 0, 1) / det - 1.0).abs() < 1e-6);
    }

    #[test]
    fn sphere_ricci_and_scalar_off_origin() {
        // Oracle: Ric = (n−1) g and R = n(n−1) on the unit sphere, any chart point.
        for n in [2usize, 3] {
            let s = families::sphere_stereographic(n);
            let x: Vec<f64> = (0..n).map(|a| 0.2 + 0.1 * a as f64).collect();
            let g = point_metric(x, move |x| s(x));
            let riem = riemann(&g).unwrap();
            let (ric, r) = &ricci_and_scalar(&g, &riem).unwrap()[0];
            let nf = n as f64;
            assert!((r - nf * (nf - 1.0)).abs() < 1e-6 * nf * nf);
            assert!(linalg::max_abs(&(ric - g.value(0) * (nf - 1.0))) < 1e-6 * linalg::max_abs(g.value(0)));
        }
    }

    #[test]
    fn weyl_needs_three_dimensions() {
        let g = point_metric(vec![0.0, 0.0], |_| DMatrix::identity(2, 2));
        let riem = riemann(&g).unwrap();
        assert_eq!(weyl(&g, &riem), Err(Error::DimensionTooSmall { required: 3, actual: 2 }));
    }
}
