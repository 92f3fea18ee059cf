//! Named metric families.

use std::f64::consts::TAU;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::field::FieldFn;
use crate::error::{Error, Result};

pub fn flat(n: usize) -> FieldFn {
    Arc::new(move |_x: &[f64]| DMatrix::identity(n, n))
}

/// Unit sphere in stereographic coordinates, `4δ/(1+|x|²)²`.
pub fn sphere_stereographic(n: usize) -> FieldFn {
    Arc::new(move |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        DMatrix::identity(n, n) * (4.0 / ((1.0 + r2) * (1.0 + r2)))
    })
}

/// Poincaré ball, `4δ/(1−|x|²)²`; non-finite outside the unit ball.
pub fn hyperbolic_poincare(n: usize) -> FieldFn {
    Arc::new(move |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 >= 1.0 {
            return DMatrix::from_element(n, n, f64::NAN);
        }
        DMatrix::identity(n, n) * (4.0 / ((1.0 - r2) * (1.0 - r2)))
    })
}

/// `e^{2φ}δ` on the torus with a seeded trigonometric `φ` of the given mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalTorus {
    pub amplitude: f64,
    pub mode: u32,
    pub seed: u64,
    pub period: f64,
}

impl ConformalTorus {
    pub fn new(amplitude: f64, mode: u32, seed: u64) -> Self {
        ConformalTorus { amplitude, mode, seed, period: 1.0 }
    }

    /// Conformal exponent `φ`.
    pub fn potential(&self, n: usize) -> Arc<dyn Fn(&[f64]) -> f64 + Send + Sync> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.0)).collect();
        let phases: Vec<f64> = (0..=n).map(|_| rng.gen_range(0.0..TAU)).collect();
        let cross = rng.gen_range(0.25..0.5);
        let (a, k) = (self.amplitude, TAU * self.mode as f64 / self.period);
        Arc::new(move |x: &[f64]| {
            let mut phi = 0.0;
            for d in 0..n {
                phi += weights[d] * (k * x[d] + phases[d]).sin();
            }
            phi += cross * (k * (x[0] + x[1]) + phases[n]).cos();
            a * phi
        })
    }

    pub fn metric(&self, n: usize) -> FieldFn {
        let phi = self.potential(n);
        Arc::new(move |x: &[f64]| DMatrix::identity(n, n) * (2.0 * phi(x)).exp())
    }
}

/// `δ + a·S(x)` with seeded periodic symmetric `S`; generically not conformally flat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbedTorus {
    pub amplitude: f64,
    pub mode: u32,
    pub seed: u64,
    pub period: f64,
}

impl PerturbedTorus {
    pub fn new(amplitude: f64, mode: u32, seed: u64) -> Self {
        PerturbedTorus { amplitude, mode, seed, period: 1.0 }
    }

    pub fn metric(&self, n: usize) -> FieldFn {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut terms = Vec::new();
        for i in 0..n {
            for j in i..n {
                let coef = rng.gen_range(-1.0..1.0) / n as f64;
                let wave: Vec<f64> = (0..n).map(|_| rng.gen_range(-1i32..=1) as f64).collect();
                let phase = rng.gen_range(0.0..TAU);
                terms.push((i, j, coef, wave, phase));
            }
        }
        let (a, k) = (self.amplitude, TAU * self.mode as f64 / self.period);
        Arc::new(move |x: &[f64]| {
            let mut g = DMatrix::identity(n, n);
            for (i, j, coef, wave, phase) in &terms {
                let arg: f64 = wave.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + x[*i] + x[*j];
                let v = a * coef * (k * arg + phase).sin();
                g[(*i, *j)] += v;
                if i != j {
                    g[(*j, *i)] += v;
                }
            }
            g
        })
    }
}

/// Orthogonal metric `g = diag(H_1², …, H_n²)` with Lamé coefficients given as
/// expressions in `x0, x1, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalLame {
    pub exprs: Vec<String>,
}

impl DiagonalLame {
    pub fn new<S: Into<String>>(exprs: impl IntoIterator<Item = S>) -> Self {
        DiagonalLame { exprs: exprs.into_iter().map(Into::into).collect() }
    }

    pub fn dim(&self) -> usize {
        self.exprs.len()
    }

    /// Column vector `(H_1, …, H_n)`.
    pub fn lame(&self) -> Result<FieldFn> {
        let n = self.exprs.len();
        let parsed = self
            .exprs
            .iter()
            .map(|s| {
                meval::Expr::from_str(s).map_err(|e| Error::InvalidExpression { expr: s.clone(), reason: e.to_string() })
            })
            .collect::<Result<Vec<_>>>()?;
        let names: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
        let probe: Vec<(String, f64)> = names.iter().map(|v| (v.clone(), 0.1)).collect();
        for (e, s) in parsed.iter().zip(&self.exprs) {
            // unknown variables and functions show up on a trial evaluation
            if let Err(err) = e.eval_with_context((&probe, meval::Context::new())) {
                return Err(Error::InvalidExpression { expr: s.clone(), reason: err.to_string() });
            }
        }
        Ok(Arc::new(move |x: &[f64]| {
            let vars: Vec<(&str, f64)> = names.iter().map(String::as_str).zip(x.iter().copied()).collect();
            let ctx = (vars, meval::Context::new());
            DMatrix::from_iterator(
                n,
                1,
                parsed.iter().map(|e| e.eval_with_context(&ctx).unwrap_or(f64::NAN)),
            )
        }))
    }

    pub fn metric(&self) -> Result<FieldFn> {
        let h = self.lame()?;
        Ok(Arc::new(move |x: &[f64]| {
            let v = h(x);
            DMatrix::from_diagonal(&DVector::from_iterator(v.nrows(), v.iter().map(|c| c * c)))
        }))
    }
}

/// Every registered family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    Flat,
    SphereStereographic,
    HyperbolicPoincare,
    ConformalTorus(ConformalTorus),
    PerturbedTorus(PerturbedTorus),
    DiagonalLame(DiagonalLame),
}

impl Family {
    pub const NAMES: [&'static str; 6] = [
        "flat",
        "sphere-stereographic",
        "hyperbolic-poincare",
        "conformal-torus",
        "perturbed-torus",
        "diagonal-lame",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Flat => "flat",
            Family::SphereStereographic => "sphere-stereographic",
            Family::HyperbolicPoincare => "hyperbolic-poincare",
            Family::ConformalTorus(_) => "conformal-torus",
            Family::PerturbedTorus(_) => "perturbed-torus",
            Family::DiagonalLame(_) => "diagonal-lame",
        }
    }

    pub fn metric(&self, n: usize) -> Result<FieldFn> {
        Ok(match self {
            Family::Flat => flat(n),
            Family::SphereStereographic => sphere_stereographic(n),
            Family::HyperbolicPoincare => hyperbolic_poincare(n),
            Family::ConformalTorus(c) => c.metric(n),
            Family::PerturbedTorus(p) => p.metric(n),
            Family::DiagonalLame(d) => {
                if d.dim() != n {
                    return Err(Error::ShapeMismatch(format!("{} Lamé expressions for dimension {n}", d.dim())));
                }
                d.metric()?
            }
        })
    }

    /// Constant-curvature factor `λ` with `Riem = λG`, when the family has one.
    pub fn curvature_factor(&self) -> Option<f64> {
        match self {
            Family::Flat => Some(0.0),
            Family::SphereStereographic => Some(1.0),
            Family::HyperbolicPoincare => Some(-1.0),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lame_expressions_evaluate_and_reject_garbage() {
        let d = DiagonalLame::new(["1", "x0", "exp(x1)*x0"]);
        let g = d.metric().unwrap()(&[2.0, 0.0, 5.0]);
        assert_eq!(g[(1, 1)], 4.0);
        assert_eq!(g[(2, 2)], 4.0);
        assert!(DiagonalLame::new(["1", "y"]).lame().is_err());
        assert!(DiagonalLame::new(["1", "x0 +"]).lame().is_err());
    }

    #[test]
    fn seeded_families_are_reproducible() {
        let a = ConformalTorus::new(0.1, 1, 7).metric(3)(&[0.1, 0.2, 0.3]);
        let b = ConformalTorus::new(0.1, 1, 7).metric(3)(&[0.1, 0.2, 0.3]);
        let c = ConformalTorus::new(0.1, 1, 8).metric(3)(&[0.1, 0.2, 0.3]);
        assert_eq!(a, b);
        assert_ne!(a, c);
        let p = PerturbedTorus::new(0.1, 1, 3).metric(4)(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(p, p.transpose());
    }

    #[test]
    fn poincare_is_undefined_outside_ball() {
        assert!(hyperbolic_poincare(2)(&[1.0, 0.1])[(0, 0)].is_nan());
    }
}
