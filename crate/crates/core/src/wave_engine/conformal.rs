use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest admissible value of the conformal factor.
const POSITIVITY_FLOOR: f64 = 1e-8;
const MIN_POINTS: usize = 8;

/// Periodic samples of `u` on `[0, length)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalWaveField {
    pub u: Vec<f64>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalWaveSolution {
    pub length: f64,
    /// Step actually used; `t_end` is always hit exactly.
    pub dt: f64,
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub min_u: f64,
}

impl ConformalWaveSolution {
    pub fn final_field(&self) -> ConformalWaveField {
        ConformalWaveField { u: self.u.last().cloned().unwrap_or_default(), length: self.length }
    }
}

fn w_tt(w: &[f64], dx: f64, out: &mut [f64]) {
    let n = w.len();
    for i in 0..n {
        let (l, r) = (w[(i + n - 1) % n], w[(i + 1) % n]);
        let wxx = (r - 2.0 * w[i] + l) / (dx * dx);
        let wx = (r - l) / (2.0 * dx);
        out[i] = wxx - wx * wx / w[i];
    }
}

/// Solves `u_t² + u_x² + u (u_tt − u_xx) = 0` on a periodic interval.
///
/// With `w = u²/2` the equation becomes
/// `w_tt = w_xx − w_x²/w`, which is stepped with second-order leapfrog and
/// centered differences under `dt ≤ dx/2`. Snapshots of `u` are kept every
/// `stride` steps and at the end.
pub fn conformally_flat_wave_solve(
    u0: &[f64],
    u1: &[f64],
    length: f64,
    dt: f64,
    t_end: f64,
    stride: usize,
) -> Result<ConformalWaveSolution> {
    let n = u0.len();
    if n < MIN_POINTS || u1.len() != n {
        return Err(Error::ShapeMismatch(format!("need {MIN_POINTS}+ samples of u and u_t, got {n} and {}", u1.len())));
    }
    if !(length > 0.0) || !(dt > 0.0) || !(t_end > 0.0) || stride == 0 {
        return Err(Error::InvalidSettings("length, dt, t_end and stride must be positive".into()));
    }
    let dx = length / n as f64;
    let limit = 0.5 * dx;
    if dt > limit {
        return Err(Error::CflViolated { dt, limit });
    }
    let min0 = u0.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min0 >= POSITIVITY_FLOOR) {
        return Err(Error::PositivityLost { t: 0.0, min_value: min0 });
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = t_end / steps as f64;

    let mut prev: Vec<f64> = u0.iter().map(|u| 0.5 * u * u).collect();
    let mut acc = vec![0.0; n];
    w_tt(&prev, dx, &mut acc);
    // Taylor start with w_t = u u_t
    let mut cur: Vec<f64> = (0..n).map(|i| prev[i] + dt * u0[i] * u1[i] + 0.5 * dt * dt * acc[i]).collect();

    let to_u = |w: &[f64]| w.iter().map(|w| (2.0 * w.max(0.0)).sqrt()).collect::<Vec<_>>();
    let mut min_u = min0;
    let mut times = vec![0.0];
    let mut snaps = vec![u0.to_vec()];
    let check = |w: &[f64], t: f64, min_u: &mut f64| -> Result<()> {
        let m = w.iter().map(|w| if *w > 0.0 { (2.0 * w).sqrt() } else { 0.0 }).fold(f64::INFINITY, f64::min);
        *min_u = min_u.min(m);
        if !(m >= POSITIVITY_FLOOR) {
            return Err(Error::PositivityLost { t, min_value: m });
        }
        Ok(())
    };
    check(&cur, dt, &mut min_u)?;
    for step in 1..=steps {
        let t = step as f64 * dt;
        if step % stride == 0 || step == steps {
            times.push(t);
            snaps.push(to_u(&cur));
        }
        if step == steps {
            break;
        }
        w_tt(&cur, dx, &mut acc);
        for i in 0..n {
            prev[i] = 2.0 * cur[i] - prev[i] + dt * dt * acc[i];
        }
        std::mem::swap(&mut prev, &mut cur);
        check(&cur, t + dt, &mut min_u)?;
    }
    Ok(ConformalWaveSolution { length, dt, times, u: snaps, min_u })
}

/// Position of the maximum of a periodic sample, refined by a parabola through
/// the largest sample and its neighbours.
pub fn crest_position(u: &[f64], length: f64) -> f64 {
    let n = u.len();
    let i = (0..n).fold(0, |b, i| if u[i] > u[b] { i } else { b });
    let (l, c, r) = (u[(i + n - 1) % n], u[i], u[(i + 1) % n]);
    let denom = l - 2.0 * c + r;
    let shift = if denom != 0.0 { 0.5 * (l - r) / denom } else { 0.0 };
    let dx = length / n as f64;
    ((i as f64 + shift) * dx).rem_euclid(length)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_state_is_preserved() {
        let s = conformally_flat_wave_solve(&[2.0; 16], &[0.0; 16], 1.0, 0.01, 0.5, 10).unwrap();
        assert!(s.final_field().u.iter().all(|u| (u - 2.0).abs() < 1e-14));
    }

    #[test]
    fn uniform_time_dependence_is_exact_in_w() {
        // spatially constant u: (u²/2)'' = 0, so u² grows linearly
        let (u, ut, t) = (1.0, 0.5, 0.4);
        let s = conformally_flat_wave_solve(&[u; 16], &[ut; 16], 1.0, 0.02, t, 1).unwrap();
        let expect = (u * u + 2.0 * u * ut * t).sqrt();
        assert!((s.final_field().u[3] - expect).abs() < 1e-12);
    }

    #[test]
    fn cfl_and_positivity_are_enforced() {
        let u1 = vec![0.0; 16];
        assert!(matches!(
            conformally_flat_wave_solve(&[1.0; 16], &u1, 1.0, 0.04, 1.0, 1),
            Err(Error::CflViolated { .. })
        ));
        // uniform contraction: w = 1/2 − t reaches zero at t = 1/2
        assert!(matches!(
            conformally_flat_wave_solve(&[1.0; 16], &[-1.0; 16], 1.0, 0.01, 2.0, 1),
            Err(Error::PositivityLost { .. })
        ));
    }

    #[test]
    fn crest_of_a_shifted_cosine() {
        let n = 64;
        let u: Vec<f64> = (0..n).map(|i| (2.0 * PI * (i as f64 / n as f64 - 0.3)).cos()).collect();
        assert!((crest_position(&u, 1.0) - 0.3).abs() < 1e-4);
    }
}
