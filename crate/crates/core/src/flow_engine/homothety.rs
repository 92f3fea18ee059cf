use serde::{Deserialize, Serialize};

/// Exact flow of a constant-curvature metric `Riem(g₀) = λG₀`: `g(t) = (1 − λt) g₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomothetySolution {
    pub lambda: f64,
    pub f: f64,
    /// `G(t) = f² G₀`.
    pub g_scale: f64,
    /// `1/λ` when `λ > 0`.
    pub collapse_time: Option<f64>,
}

pub fn homothety_flow_solution(lambda: f64, t: f64) -> HomothetySolution {
    let f = 1.0 - lambda * t;
    HomothetySolution {
        lambda,
        f,
        g_scale: f * f,
        collapse_time: (lambda > 0.0).then(|| 1.0 / lambda),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let s = homothety_flow_solution(1.0, 0.5);
        assert_eq!((s.f, s.g_scale, s.collapse_time), (0.5, 0.25, Some(1.0)));
        let s = homothety_flow_solution(0.0, 3.0);
        assert_eq!((s.f, s.collapse_time), (1.0, None));
        assert_eq!(homothety_flow_solution(-1.0, 2.0).f, 3.0);
    }
}
