use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance on `f'² + f f'' + λ f` when testing a polynomial solution.
pub const POLYNOMIAL_TOLERANCE: f64 = 1e-12;

/// Largest number of points kept in a stored solution curve.
const MAX_STORED: usize = 100_000;
/// Steps are capped at this fraction of `f/|f'|` near a collapse.
const SINGULAR_FRACTION: f64 = 0.05;
/// Integration stops once `f` falls below this.
const F_STOP: f64 = 1e-4;

/// Solution of `f f'' + f'² + λ f = 0` with `f(0) = 1`, `f'(0) = v`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleOdeSolution {
    pub lambda: f64,
    pub v: f64,
    pub times: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    /// Extrapolated zero of `f`, when one is reached before `t_end`.
    pub collapse_time: Option<f64>,
    /// `f'' < 0` at every accepted step.
    pub concave: bool,
    /// `v² + 2λ/3`; zero exactly when the solution is a quadratic polynomial.
    pub polynomial_residual: f64,
}

/// `1 + v t − λ t²/6`.
pub fn wave_polynomial(lambda: f64, v: f64, t: f64) -> f64 {
    1.0 + v * t - lambda * t * t / 6.0
}

/// Constant value of `f'² + f f'' + λ f` along [`wave_polynomial`].
pub fn wave_polynomial_residual(lambda: f64, v: f64) -> f64 {
    v * v + 2.0 * lambda / 3.0
}

fn accel(lambda: f64, f: f64, fp: f64) -> f64 {
    -(fp * fp + lambda * f) / f
}

fn rk4(lambda: f64, f: f64, fp: f64, h: f64) -> Option<(f64, f64)> {
    let rhs = |f: f64, fp: f64| (f > 0.0).then(|| (fp, accel(lambda, f, fp)));
    let (a1, b1) = rhs(f, fp)?;
    let (a2, b2) = rhs(f + 0.5 * h * a1, fp + 0.5 * h * b1)?;
    let (a3, b3) = rhs(f + 0.5 * h * a2, fp + 0.5 * h * b2)?;
    let (a4, b4) = rhs(f + h * a3, fp + h * b3)?;
    let nf = f + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    let nfp = fp + h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
    (nf > 0.0 && nf.is_finite() && nfp.is_finite()).then_some((nf, nfp))
}

/// RK4 for the scale ODE of the Riemann wave on a constant-curvature metric.
///
/// `dt` may be negative to integrate backwards; `t_end` must then be negative
/// too. Near a zero of `f` the step shrinks geometrically, and the collapse
/// time is extrapolated from `F = f²`, which has `F'' = −2λf` and so crosses
/// zero linearly.
pub fn constant_curvature_wave_ode(lambda: f64, v: f64, dt: f64, t_end: f64) -> Result<ScaleOdeSolution> {
    if !(dt != 0.0 && dt.is_finite() && t_end.is_finite() && t_end * dt > 0.0) {
        return Err(Error::InvalidSettings(format!("dt = {dt} and t_end = {t_end} must be nonzero with equal signs")));
    }
    if !lambda.is_finite() || !v.is_finite() {
        return Err(Error::InvalidSettings("λ and v must be finite".into()));
    }
    let dir = dt.signum();
    let span = t_end.abs();
    let stride = ((span / dt.abs()).ceil() as usize).div_ceil(MAX_STORED).max(1);
    let (mut t, mut f, mut fp) = (0.0_f64, 1.0_f64, v);
    let mut out = ScaleOdeSolution {
        lambda,
        v,
        times: vec![0.0],
        f: vec![1.0],
        fp: vec![v],
        collapse_time: None,
        concave: accel(lambda, f, fp) < 0.0,
        polynomial_residual: wave_polynomial_residual(lambda, v),
    };
    let mut steps = 0usize;
    while dir * t < span * (1.0 - 1e-14) {
        let mut h = dt.abs().min(span - dir * t);
        // forward speed of approach to zero along the integration direction
        let approach = -dir * fp;
        if approach > 0.0 {
            h = h.min(SINGULAR_FRACTION * f / approach);
        }
        let mut halvings = 0;
        let (nf, nfp) = loop {
            match rk4(lambda, f, fp, dir * h) {
                Some(s) => break s,
                None if halvings < 60 => {
                    halvings += 1;
                    h *= 0.5;
                }
                None => return Err(Error::StepRejected { t, halvings }),
            }
        };
        t += dir * h;
        f = nf;
        fp = nfp;
        steps += 1;
        out.concave &= accel(lambda, f, fp) < 0.0;
        let collapsed = f < F_STOP;
        if steps % stride == 0 || collapsed {
            out.times.push(t);
            out.f.push(f);
            out.fp.push(fp);
        }
        if collapsed {
            // F + F'·(τ − t) = 0 with F = f², F' = 2 f f'
            out.collapse_time = Some(t - f / (2.0 * fp));
            return Ok(out);
        }
    }
    if out.times.last() != Some(&t) {
        out.times.push(t);
        out.f.push(f);
        out.fp.push(fp);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Quadrature of dt = f df / sqrt(2/3 (1 − f³)) for λ = 1, v = 0, f from 1 to 0.
    const SPHERE_REST_COLLAPSE: f64 = 1.0561830547982798;

    #[test]
    fn sphere_at_rest_collapses_at_quadrature_time() {
        let s = constant_curvature_wave_ode(1.0, 0.0, 1e-3, 2.0).unwrap();
        let t = s.collapse_time.unwrap();
        assert!((t - SPHERE_REST_COLLAPSE).abs() < 1e-6, "{t}");
        assert!(s.concave);
    }

    #[test]
    fn polynomial_residual_vanishes_on_the_curve() {
        assert_eq!(wave_polynomial_residual(-1.5, 1.0), 0.0);
        assert!(wave_polynomial_residual(1.0, 0.0) > 0.5);
        let (lambda, v) = (-1.5, 1.0);
        for t in [0.0, 0.3, 1.7] {
            let (f, fp, fpp) = (wave_polynomial(lambda, v, t), v - lambda * t / 3.0, -lambda / 3.0);
            assert!((fp * fp + f * fpp + lambda * f).abs() < POLYNOMIAL_TOLERANCE * 10.0);
        }
    }

    #[test]
    fn backwards_integration_mirrors_forwards() {
        let fw = constant_curvature_wave_ode(0.5, 0.2, 1e-3, 0.5).unwrap();
        let bw = constant_curvature_wave_ode(0.5, -0.2, -1e-3, -0.5).unwrap();
        assert_eq!(fw.f, bw.f);
        assert!(fw.fp.iter().zip(&bw.fp).all(|(a, b)| *a == -b));
    }

    #[test]
    fn bad_settings_rejected() {
        assert!(constant_curvature_wave_ode(1.0, 0.0, 1e-3, -1.0).is_err());
        assert!(constant_curvature_wave_ode(1.0, 0.0, 0.0, 1.0).is_err());
    }
}
