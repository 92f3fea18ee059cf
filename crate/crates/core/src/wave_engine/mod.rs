//! Second-order metric evolutions: the Riemann wave `∂²G/∂t² = −2 Riem`, the
//! Ricci wave, the scalar-coefficient family
//! `α ∂²G/∂t² + β ∂G/∂t + γ G + δ Riem = 0`, and two reduced problems (the
//! constant-curvature scale ODE and the conformally flat 1+1 wave).

mod conformal;
mod scale_ode;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use conformal::{conformally_flat_wave_solve, crest_position, ConformalWaveField, ConformalWaveSolution};
pub use scale_ode::{
    constant_curvature_wave_ode, wave_polynomial, wave_polynomial_residual, ScaleOdeSolution, POLYNOMIAL_TOLERANCE,
};

use crate::bialternate::{bialternate_product, kulkarni_nomizu, velocity_from_rate};
use crate::error::{Error, Result};
use crate::evolve::{integrate, Evaluation, Settings, System, Trajectory};
use crate::flow_engine::{blow_up_with_power, shift_times, BlowUp};
use crate::tensor_kernel::curvature::{curvature, SampleCurvature};
use crate::tensor_kernel::field::MetricField;
use crate::tensor_kernel::tensor::Tensor4;

/// Constant coefficients of `α ∂²G/∂t² + β ∂G/∂t + γ G + δ Riem = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl GeneralCoefficients {
    pub const fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        GeneralCoefficients { alpha, beta, gamma, delta }
    }

    /// `(0, 1, 0, 2)`: the Riemann flow.
    pub const FLOW: Self = Self::new(0.0, 1.0, 0.0, 2.0);
    /// `(1, 0, 0, 2)`: the Riemann wave.
    pub const WAVE: Self = Self::new(1.0, 0.0, 0.0, 2.0);

    pub fn is_second_order(&self) -> bool {
        self.alpha != 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WaveLaw {
    RiemannWave,
    RicciWave,
    General(GeneralCoefficients),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub t: f64,
    pub g: MetricField,
    /// `∂g/∂t`, one matrix per sample.
    pub k: Vec<DMatrix<f64>>,
}

impl WaveState {
    pub fn at_rest(g: MetricField) -> Self {
        let k = (0..g.len()).map(|_| DMatrix::zeros(g.dim(), g.dim())).collect();
        WaveState { t: 0.0, g, k }
    }
}

/// `k∧k = 2(k_ik k_jl − k_il k_jk)`, the velocity-quadratic part of `∂²G/∂t²`.
fn velocity_square(k: &DMatrix<f64>) -> Tensor4 {
    kulkarni_nomizu(k, k)
}

fn require_three(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { required: 3, actual: n });
    }
    Ok(())
}

fn riemann_accel_at(c: &SampleCurvature, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rate = c.riemann.scaled(-2.0).sub(&velocity_square(k));
    velocity_from_rate(&rate, &c.metric, &c.inverse)
}

/// `max |g̈∧g + k∧k + 2 Riem|` at one sample.
fn eq2_residual_at(c: &SampleCurvature, k: &DMatrix<f64>, accel: &DMatrix<f64>) -> f64 {
    kulkarni_nomizu(accel, &c.metric).add(&velocity_square(k)).add(&c.riemann.scaled(2.0)).max_abs()
}

/// Rate produced by the general family: an acceleration when `α ≠ 0`, else a velocity.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneralRate {
    Acceleration(Vec<DMatrix<f64>>),
    Velocity(Vec<DMatrix<f64>>),
}

fn general_at(c: &SampleCurvature, k: Option<&DMatrix<f64>>, co: &GeneralCoefficients) -> Result<DMatrix<f64>> {
    let big_g = bialternate_product(&c.metric);
    if co.alpha != 0.0 {
        let k = k.ok_or_else(|| Error::ShapeMismatch("second-order law needs a velocity".into()))?;
        let first = kulkarni_nomizu(k, &c.metric);
        let sum = first.scaled(co.beta).add(&big_g.scaled(co.gamma)).add(&c.riemann.scaled(co.delta));
        let rate = sum.scaled(-1.0 / co.alpha).sub(&velocity_square(k));
        velocity_from_rate(&rate, &c.metric, &c.inverse)
    } else if co.beta != 0.0 {
        let sum = big_g.scaled(co.gamma).add(&c.riemann.scaled(co.delta));
        velocity_from_rate(&sum.scaled(-1.0 / co.beta), &c.metric, &c.inverse)
    } else {
        Err(Error::DegenerateCoefficients)
    }
}

fn general_residual_at(
    c: &SampleCurvature,
    k: Option<&DMatrix<f64>>,
    rate: Option<&DMatrix<f64>>,
    co: &GeneralCoefficients,
) -> Result<f64> {
    let big_g = bialternate_product(&c.metric);
    let mut total = big_g.scaled(co.gamma).add(&c.riemann.scaled(co.delta));
    let missing = || Error::ShapeMismatch("residual needs the velocity and rate of the law".into());
    if co.alpha != 0.0 {
        let (k, acc) = (k.ok_or_else(missing)?, rate.ok_or_else(missing)?);
        let second = kulkarni_nomizu(acc, &c.metric).add(&velocity_square(k));
        total = second.scaled(co.alpha).add(&kulkarni_nomizu(k, &c.metric).scaled(co.beta)).add(&total);
    } else if co.beta != 0.0 {
        let v = rate.or(k).ok_or_else(missing)?;
        total = kulkarni_nomizu(v, &c.metric).scaled(co.beta).add(&total);
    }
    Ok(total.max_abs())
}

/// Acceleration from `∂²G/∂t² = −2 Riem` with `∂²G/∂t² = g̈∧g + k∧k`.
pub fn riemann_wave_accel(g: &MetricField, k: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    require_three(g.dim())?;
    check_velocity(g, k)?;
    curvature(g)?.par_iter().zip(k).map(|(c, k)| riemann_accel_at(c, k)).collect()
}

/// `∂²g/∂t² = −2 Ric`.
pub fn ricci_wave_accel(g: &MetricField) -> Result<Vec<DMatrix<f64>>> {
    Ok(curvature(g)?.iter().map(|c| &c.ricci * -2.0).collect())
}

/// Solves the general family for the highest time derivative present.
pub fn general_form_accel(
    g: &MetricField,
    k: Option<&[DMatrix<f64>]>,
    co: &GeneralCoefficients,
) -> Result<GeneralRate> {
    if co.alpha == 0.0 && co.beta == 0.0 {
        return Err(Error::DegenerateCoefficients);
    }
    require_three(g.dim())?;
    if let Some(k) = k {
        check_velocity(g, k)?;
    }
    let curv = curvature(g)?;
    let rates = curv
        .par_iter()
        .enumerate()
        .map(|(s, c)| general_at(c, k.map(|k| &k[s]), co))
        .collect::<Result<Vec<_>>>()?;
    Ok(if co.is_second_order() { GeneralRate::Acceleration(rates) } else { GeneralRate::Velocity(rates) })
}

/// `max |α ∂²G/∂t² + β ∂G/∂t + γ G + δ Riem|` over samples.
///
/// `rate` is the acceleration (`α ≠ 0`) or velocity (`α = 0`); with
/// `α = β = 0` only the algebraic part `γG + δ Riem` is evaluated.
pub fn general_form_residual(
    g: &MetricField,
    k: Option<&[DMatrix<f64>]>,
    rate: Option<&[DMatrix<f64>]>,
    co: &GeneralCoefficients,
) -> Result<f64> {
    let curv = curvature(g)?;
    curv.iter()
        .enumerate()
        .map(|(s, c)| general_residual_at(c, k.map(|k| &k[s]), rate.map(|r| &r[s]), co))
        .try_fold(0.0_f64, |m, r| Ok(m.max(r?)))
}

fn check_velocity(g: &MetricField, k: &[DMatrix<f64>]) -> Result<()> {
    if k.len() != g.len() {
        return Err(Error::ShapeMismatch("one velocity per sample expected".into()));
    }
    Ok(())
}

struct WaveSystem<'a> {
    law: WaveLaw,
    t0: f64,
    schedule: Option<&'a (dyn Fn(f64) -> GeneralCoefficients + Sync)>,
}

impl WaveSystem<'_> {
    fn coefficients(&self, t: f64) -> Option<GeneralCoefficients> {
        match (self.law, self.schedule) {
            (_, Some(f)) => Some(f(self.t0 + t)),
            (WaveLaw::General(c), None) => Some(c),
            _ => None,
        }
    }
}

impl System for WaveSystem<'_> {
    fn second_order(&self) -> bool {
        self.coefficients(0.0).is_none_or(|c| c.is_second_order())
    }

    fn evaluate(&self, t: f64, g: &MetricField, k: Option<&[DMatrix<f64>]>, with_residual: bool) -> Result<Evaluation> {
        let curv = curvature(g)?;
        let kk = |s: usize| k.map(|k| &k[s]);
        let (rate, residual): (Vec<DMatrix<f64>>, f64) = match self.coefficients(t) {
            None => {
                let k = k.ok_or_else(|| Error::ShapeMismatch("wave law needs a velocity".into()))?;
                let rate = match self.law {
                    WaveLaw::RicciWave => curv.iter().map(|c| &c.ricci * -2.0).collect(),
                    _ => curv.par_iter().zip(k).map(|(c, k)| riemann_accel_at(c, k)).collect::<Result<Vec<_>>>()?,
                };
                let residual = if with_residual {
                    curv.par_iter()
                        .enumerate()
                        .map(|(s, c)| eq2_residual_at(c, &k[s], &rate[s]))
                        .reduce(|| 0.0, f64::max)
                } else {
                    f64::NAN
                };
                (rate, residual)
            }
            Some(co) => {
                if co.is_second_order() != self.second_order() {
                    return Err(Error::InvalidSettings("coefficient α changed between zero and nonzero".into()));
                }
                let rate = curv
                    .par_iter()
                    .enumerate()
                    .map(|(s, c)| general_at(c, kk(s), &co))
                    .collect::<Result<Vec<_>>>()?;
                let residual = if with_residual {
                    let mut m = 0.0_f64;
                    for (s, c) in curv.iter().enumerate() {
                        m = m.max(general_residual_at(c, kk(s), Some(&rate[s]), &co)?);
                    }
                    m
                } else {
                    f64::NAN
                };
                (rate, residual)
            }
        };
        Ok(Evaluation { rate, curvature: curv, residual })
    }
}

/// RK4 on the first-order system `(g, k)`; a general law with `α = 0` is
/// integrated as a first-order flow and ignores `initial.k`.
pub fn integrate_wave(initial: &WaveState, law: WaveLaw, settings: &Settings) -> Result<Trajectory> {
    let sys = WaveSystem { law, t0: initial.t, schedule: None };
    run(&sys, initial, settings)
}

/// The general family with coefficients that depend on time.
pub fn integrate_general(
    initial: &WaveState,
    schedule: &(dyn Fn(f64) -> GeneralCoefficients + Sync),
    settings: &Settings,
) -> Result<Trajectory> {
    let co = schedule(initial.t);
    let sys = WaveSystem { law: WaveLaw::General(co), t0: initial.t, schedule: Some(schedule) };
    run(&sys, initial, settings)
}

fn run(sys: &WaveSystem<'_>, initial: &WaveState, settings: &Settings) -> Result<Trajectory> {
    if let Some(co) = sys.coefficients(0.0) {
        if co.alpha == 0.0 && co.beta == 0.0 {
            return Err(Error::DegenerateCoefficients);
        }
    }
    if !matches!(sys.law, WaveLaw::RicciWave) {
        require_three(initial.g.dim())?;
    }
    let k0 = sys.second_order().then(|| initial.k.clone());
    let mut traj = integrate(sys, &initial.g, k0, settings)?;
    shift_times(&mut traj, initial.t);
    Ok(traj)
}

/// Singular time and curvature exponent of a wave trajectory; the smallest
/// relative eigenvalue is extrapolated through its square, which vanishes
/// linearly at a scale-ODE collapse.
pub fn monitor_wave_blow_up(traj: &Trajectory) -> Result<BlowUp> {
    blow_up_with_power(traj, 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::tensor_kernel::chart::Chart;
    use crate::tensor_kernel::families;

    fn sphere3() -> MetricField {
        MetricField::metric_from_fn(Chart::point(vec![0.0; 3], 1e-2).unwrap(), &*families::sphere_stereographic(3)).unwrap()
    }

    #[test]
    fn scale_ode_is_the_reduction_of_the_wave_on_the_sphere() {
        // g = f g₀, k = f' g₀ ⇒ g̈ = f'' g₀ with f'' = −(f'² + λf)/f, λ = 1.
        let g0 = sphere3();
        let (f, fp) = (0.7, -0.4);
        let g = g0.with_metric_values(vec![g0.value(0) * f]).unwrap();
        let k = vec![g0.value(0) * fp];
        let acc = &riemann_wave_accel(&g, &k).unwrap()[0];
        let fpp = -(fp * fp + f) / f;
        assert!(linalg::max_abs(&(acc - g0.value(0) * fpp)) < 1e-6 * 4.0 * fpp.abs());
    }

    #[test]
    fn ricci_wave_matches_ricci_flow_velocity() {
        let g = sphere3();
        assert_eq!(ricci_wave_accel(&g).unwrap(), crate::flow_engine::ricci_flow_rhs(&g).unwrap());
    }

    #[test]
    fn general_family_reduces_to_flow_and_wave_bitwise() {
        let g = sphere3();
        let k = vec![g.value(0) * 0.3];
        match general_form_accel(&g, None, &GeneralCoefficients::FLOW).unwrap() {
            GeneralRate::Velocity(v) => assert_eq!(v, crate::flow_engine::induced_riemann_flow_rhs(&g).unwrap()),
            other => panic!("{other:?}"),
        }
        match general_form_accel(&g, Some(&k), &GeneralCoefficients::WAVE).unwrap() {
            GeneralRate::Acceleration(a) => assert_eq!(a, riemann_wave_accel(&g, &k).unwrap()),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            general_form_accel(&g, None, &GeneralCoefficients::new(0.0, 0.0, 1.0, -1.0)),
            Err(Error::DegenerateCoefficients)
        );
    }

    #[test]
    fn constant_curvature_condition_residual() {
        let sphere = sphere3();
        let co = GeneralCoefficients::new(0.0, 0.0, 1.0, -1.0);
        let scale = bialternate_product(sphere.value(0)).max_abs();
        assert!(general_form_residual(&sphere, None, None, &co).unwrap() < 1e-6 * scale);
        let torus = MetricField::metric_from_fn(
            Chart::point(vec![0.1, 0.2, 0.3], 1e-2).unwrap(),
            &*families::ConformalTorus::new(0.2, 1, 3).metric(3),
        )
        .unwrap();
        assert!(general_form_residual(&torus, None, None, &co).unwrap() > 1e-2);
    }
}
