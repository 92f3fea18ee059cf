use nalgebra::DMatrix;

use super::field::MetricField;
use super::tensor::Tensor4;
use crate::error::{Error, Result};
use crate::linalg;

/// A covariant tensor of rank 0, 2 or 4 at one sample.
#[derive(Debug, Clone, Copy)]
pub enum TensorRef<'a> {
    Scalar(f64),
    Two(&'a DMatrix<f64>),
    Four(&'a Tensor4),
}

/// `‖T‖` with one inverse metric per index, given `g^{-1}`.
pub fn norm_with_inverse(t: TensorRef<'_>, ginv: &DMatrix<f64>) -> f64 {
    match t {
        TensorRef::Scalar(s) => s.abs(),
        TensorRef::Two(a) => {
            let raised = ginv * a * ginv;
            linalg::contract(&raised, a).max(0.0).sqrt()
        }
        TensorRef::Four(r) => {
            let up = r.raised(ginv);
            up.as_slice().iter().zip(r.as_slice()).map(|(x, y)| x * y).sum::<f64>().max(0.0).sqrt()
        }
    }
}

/// Per-sample norms of a tensor field.
pub fn tensor_norm(t: &[TensorRef<'_>], g: &MetricField) -> Result<Vec<f64>> {
    if t.len() != g.len() {
        return Err(Error::ShapeMismatch("one tensor per sample expected".into()));
    }
    t.iter()
        .enumerate()
        .map(|(s, x)| Ok(norm_with_inverse(*x, &linalg::spd_inverse(g.value(s), s)?)))
        .collect()
}
