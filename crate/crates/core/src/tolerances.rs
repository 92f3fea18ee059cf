use serde::{Deserialize, Serialize};

/// Default tolerances; every field can be overridden from a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Purely algebraic identities.
    pub algebra: f64,
    /// Richardson-extrapolated curvature on point charts.
    pub analytic: f64,
    /// Constant `c` in the grid bound `c·h⁴`.
    pub grid_constant: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { algebra: 1e-12, analytic: 1e-6, grid_constant: 10.0 }
    }
}

impl Tolerances {
    pub fn grid(&self, h: f64) -> f64 {
        self.grid_constant * h.powi(4)
    }
}
