//! Connection and curvature of metric components sampled on coordinate charts.

pub mod chart;
pub mod curvature;
pub mod families;
pub mod field;
pub mod jet;
pub mod lame;
pub mod norm;
pub mod tensor;

pub use chart::{Chart, GridChart, PointChart, DEFAULT_POINT_STEP};
pub use curvature::{
    christoffel, curvature, inverse_metric, ricci_and_scalar, riemann, riemann_displayed, sample_curvature, weyl,
    SampleCurvature,
};
pub use families::Family;
pub use field::{Field, FieldFn, MetricField};
pub use jet::Jet;
pub use lame::orthogonal_metric_curvature;
pub use norm::{norm_with_inverse, tensor_norm, TensorRef};
pub use tensor::{independent_count, Connection, SymmetryDefects, Tensor4};

/// Running supremum of a curvature norm.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CurvatureBound {
    m: f64,
}

impl CurvatureBound {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, value: f64) {
        if value > self.m {
            self.m = value;
        }
    }

    pub fn value(&self) -> f64 {
        self.m
    }
}
