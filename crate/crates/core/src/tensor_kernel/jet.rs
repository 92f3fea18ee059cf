//! Second-order jets of matrix-valued fields and the stencils that produce them.

use nalgebra::DMatrix;

use super::chart::GridChart;
use crate::error::{Error, Result};

/// Value, first and second partial derivatives of a matrix-valued field at one sample.
///
/// `d1[k]` is `∂_k F` and `d2[k * n + l]` is `∂_k ∂_l F`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: DMatrix<f64>,
    pub d1: Vec<DMatrix<f64>>,
    pub d2: Vec<DMatrix<f64>>,
}

impl Jet {
    /// A jet with vanishing derivatives.
    pub fn constant(value: DMatrix<f64>, dim: usize) -> Self {
        let z = DMatrix::zeros(value.nrows(), value.ncols());
        Jet {
            d1: vec![z.clone(); dim],
            d2: vec![z; dim * dim],
            value,
        }
    }

    /// Coordinate dimension.
    pub fn dim(&self) -> usize {
        self.d1.len()
    }

    pub fn second(&self, k: usize, l: usize) -> &DMatrix<f64> {
        &self.d2[k * self.dim() + l]
    }

    /// Applies `X ↦ Eᵀ X E` to the value and every derivative.
    pub fn congruence(&self, e: &DMatrix<f64>) -> Jet {
        let et = e.transpose();
        let f = |m: &DMatrix<f64>| &et * m * e;
        Jet {
            value: f(&self.value),
            d1: self.d1.iter().map(f).collect(),
            d2: self.d2.iter().map(f).collect(),
        }
    }

    /// `a·self + b·other`, component by component.
    pub fn combine(&self, a: f64, other: &Jet, b: f64) -> Jet {
        let f = |x: &DMatrix<f64>, y: &DMatrix<f64>| x * a + y * b;
        Jet {
            value: f(&self.value, &other.value),
            d1: self.d1.iter().zip(&other.d1).map(|(x, y)| f(x, y)).collect(),
            d2: self.d2.iter().zip(&other.d2).map(|(x, y)| f(x, y)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Jet {
        Jet {
            value: &self.value * c,
            d1: self.d1.iter().map(|m| m * c).collect(),
            d2: self.d2.iter().map(|m| m * c).collect(),
        }
    }
}

fn eval_checked<F>(f: &F, x: &[f64]) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> DMatrix<f64> + ?Sized,
{
    let v = f(x);
    if v.iter().all(|c| c.is_finite()) {
        Ok(v)
    } else {
        Err(Error::StencilOutOfDomain { point: x.to_vec() })
    }
}

fn central_jet<F>(f: &F, x: &[f64], center: &DMatrix<f64>, h: f64) -> Result<(Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)>
where
    F: Fn(&[f64]) -> DMatrix<f64> + ?Sized,
{
    let n = x.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut y = x.to_vec();
        for &(a, s) in shifts {
            y[a] += s;
        }
        eval_checked(f, &y)
    };
    let mut plus = Vec::with_capacity(n);
    let mut minus = Vec::with_capacity(n);
    for a in 0..n {
        plus.push(at(&[(a, h)])?);
        minus.push(at(&[(a, -h)])?);
    }
    let d1: Vec<_> = (0..n).map(|a| (&plus[a] - &minus[a]) / (2.0 * h)).collect();
    let mut d2 = vec![DMatrix::zeros(center.nrows(), center.ncols()); n * n];
    for a in 0..n {
        d2[a * n + a] = (&plus[a] - center * 2.0 + &minus[a]) / (h * h);
        for b in (a + 1)..n {
            let pp = at(&[(a, h), (b, h)])?;
            let pm = at(&[(a, h), (b, -h)])?;
            let mp = at(&[(a, -h), (b, h)])?;
            let mm = at(&[(a, -h), (b, -h)])?;
            let m = (pp - pm - mp + mm) / (4.0 * h * h);
            d2[b * n + a] = m.clone();
            d2[a * n + b] = m;
        }
    }
    Ok((d1, d2))
}

/// Central differences at `h` and `h/2` combined by one Richardson step.
pub fn point_jet<F>(f: &F, x: &[f64], h: f64) -> Result<Jet>
where
    F: Fn(&[f64]) -> DMatrix<f64> + ?Sized,
{
    let value = eval_checked(f, x)?;
    let (d1a, d2a) = central_jet(f, x, &value, h)?;
    let (d1b, d2b) = central_jet(f, x, &value, 0.5 * h)?;
    let rich = |a: &DMatrix<f64>, b: &DMatrix<f64>| (b * 4.0 - a) / 3.0;
    Ok(Jet {
        d1: d1a.iter().zip(&d1b).map(|(a, b)| rich(a, b)).collect(),
        d2: d2a.iter().zip(&d2b).map(|(a, b)| rich(a, b)).collect(),
        value,
    })
}

const D1: [(isize, f64); 4] = [(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)];
const D2: [(isize, f64); 5] = [
    (-2, -1.0 / 12.0),
    (-1, 16.0 / 12.0),
    (0, -30.0 / 12.0),
    (1, 16.0 / 12.0),
    (2, -1.0 / 12.0),
];

/// Fourth-order periodic central differences at one grid sample.
pub fn grid_jet(grid: &GridChart, values: &[DMatrix<f64>], sample: usize) -> Jet {
    let n = grid.dim();
    let value = values[sample].clone();
    let zero = DMatrix::zeros(value.nrows(), value.ncols());
    let mut d1 = vec![zero.clone(); n];
    let mut d2 = vec![zero; n * n];
    for a in 0..n {
        let h = grid.spacing(a);
        for &(o, w) in &D1 {
            d1[a] += &values[grid.shift(sample, a, o)] * (w / h);
        }
        for &(o, w) in &D2 {
            d2[a * n + a] += &values[grid.shift(sample, a, o)] * (w / (h * h));
        }
        for b in (a + 1)..n {
            let hb = grid.spacing(b);
            let mut m = DMatrix::zeros(value.nrows(), value.ncols());
            for &(oa, wa) in &D1 {
                let sa = grid.shift(sample, a, oa);
                for &(ob, wb) in &D1 {
                    m += &values[grid.shift(sa, b, ob)] * (wa * wb / (h * hb));
                }
            }
            d2[b * n + a] = m.clone();
            d2[a * n + b] = m;
        }
    }
    Jet { value, d1, d2 }
}
