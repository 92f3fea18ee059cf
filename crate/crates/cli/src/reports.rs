//! One-shot reports: curvature, soliton residual, linearization, recovery identity.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use serde::Serialize;

use riemlab::bialternate::{bialternate_product, recover_metric, verify_recovery_identity};
use riemlab::linalg::{self, random_spd};
use riemlab::tensor_kernel::chart::Chart;
use riemlab::tensor_kernel::curvature::{curvature, riemann_displayed, weyl};
use riemlab::tensor_kernel::families::Family;
use riemlab::tensor_kernel::field::{Field, MetricField};
use riemlab::tensor_kernel::norm::{norm_with_inverse, TensorRef};
use riemlab::variation_lab::{
    classify_soliton, directional_curvature_derivative, linearized_flow_rhs, soliton_residual, CurvatureOperator,
    DerivativeOptions, LinearizedLaw, PerturbationField, SolitonData, SolitonKind, SolitonPotential,
};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct CurvatureReport {
    pub family: String,
    pub dim: usize,
    pub samples: usize,
    /// `Riem(∂₀,∂₁,∂₀,∂₁) / G(∂₀,∂₁,∂₀,∂₁)` at the first sample.
    pub sectional_01: f64,
    /// The same ratio for the tensor evaluated with the displayed component formula.
    pub sectional_01_displayed: f64,
    pub sup_riem_norm: f64,
    pub sup_ric_norm: f64,
    pub scalar_min: f64,
    pub scalar_max: f64,
    pub max_symmetry_defect: f64,
    pub sup_weyl_norm: Option<f64>,
    pub ricci_first_sample: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn metric_on(family: &Family, chart: Chart) -> Result<MetricField, CliError> {
    let f = family.metric(chart.dim())?;
    Ok(MetricField::metric_from_fn(chart, &*f)?)
}

pub fn curvature_report(family: &Family, chart: Chart) -> Result<CurvatureReport, CliError> {
    let g = metric_on(family, chart)?;
    let curv = curvature(&g)?;
    let disp = riemann_displayed(&g)?;
    let first = &curv[0];
    let g01 = bialternate_product(&first.metric).get(0, 1, 0, 1);
    let mut report = CurvatureReport {
        family: family.name().into(),
        dim: g.dim(),
        samples: g.len(),
        sectional_01: first.riemann.get(0, 1, 0, 1) / g01,
        sectional_01_displayed: disp[0].get(0, 1, 0, 1) / g01,
        sup_riem_norm: 0.0,
        sup_ric_norm: 0.0,
        scalar_min: f64::INFINITY,
        scalar_max: f64::NEG_INFINITY,
        max_symmetry_defect: 0.0,
        sup_weyl_norm: None,
        ricci_first_sample: rows(&first.ricci),
    };
    for c in &curv {
        report.sup_riem_norm = report.sup_riem_norm.max(norm_with_inverse(TensorRef::Four(&c.riemann), &c.inverse));
        report.sup_ric_norm = report.sup_ric_norm.max(norm_with_inverse(TensorRef::Two(&c.ricci), &c.inverse));
        report.scalar_min = report.scalar_min.min(c.scalar);
        report.scalar_max = report.scalar_max.max(c.scalar);
        report.max_symmetry_defect = report.max_symmetry_defect.max(c.riemann.symmetry_defects().max());
    }
    if g.dim() >= 3 {
        let riem: Vec<_> = curv.iter().map(|c| c.riemann.clone()).collect();
        let w = weyl(&g, &riem)?;
        report.sup_weyl_norm =
            Some(w.iter().zip(&curv).map(|(w, c)| norm_with_inverse(TensorRef::Four(w), &c.inverse)).fold(0.0, f64::max));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    /// `f = 0`.
    Zero,
    /// `f = −λ|x|²/4`.
    Gaussian,
}

#[derive(Debug, Serialize)]
pub struct SolitonReport {
    pub lambda: f64,
    pub kind: SolitonKind,
    pub potential: PotentialKind,
    pub residual_max_abs: f64,
    pub residual_max_norm: f64,
}

pub fn soliton_report(family: &Family, chart: Chart, lambda: f64, potential: PotentialKind) -> Result<SolitonReport, CliError> {
    let g = metric_on(family, chart.clone())?;
    let f = Field::from_fn(chart, &move |x: &[f64]| {
        let v = match potential {
            PotentialKind::Zero => 0.0,
            PotentialKind::Gaussian => -lambda * x.iter().map(|c| c * c).sum::<f64>() / 4.0,
        };
        DMatrix::from_element(1, 1, v)
    })?;
    let r = soliton_residual(&g, &SolitonData { lambda, potential: SolitonPotential::Gradient(f) })?;
    Ok(SolitonReport {
        lambda,
        kind: classify_soliton(lambda),
        potential,
        residual_max_abs: r.max_abs,
        residual_max_norm: r.max_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    /// `h = g`.
    Metric,
    /// A seeded trigonometric symmetric field.
    Wave,
}

#[derive(Debug, Serialize)]
pub struct LinearizeReport {
    pub law: LinearizedLaw,
    pub direction: Direction,
    pub max_dric: f64,
    pub max_driem: f64,
    pub max_rhs: f64,
    /// `max|DRiem(g)[g] − Riem(g)|` when the direction is the metric itself.
    pub homogeneity_defect: Option<f64>,
}

/// Symmetric trigonometric direction, `h_ij = a_ij cos(2π(k·x) + φ_ij)` with seeded coefficients.
pub fn trig_direction(n: usize, seed: u64) -> impl Fn(&[f64]) -> DMatrix<f64> + Sync {
    let base = random_spd(n, seed);
    move |x: &[f64]| {
        let s: f64 = x.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum();
        DMatrix::from_fn(n, n, |i, j| base[(i, j)] * (TAU * s + (i + j) as f64).cos())
    }
}

pub fn linearize_report(
    family: &Family,
    chart: Chart,
    law: LinearizedLaw,
    direction: Direction,
    seed: u64,
) -> Result<LinearizeReport, CliError> {
    let g = metric_on(family, chart.clone())?;
    let h = match direction {
        Direction::Metric => PerturbationField::new(g.clone())?,
        Direction::Wave => PerturbationField::from_fn(chart, &trig_direction(g.dim(), seed))?,
    };
    let opts = DerivativeOptions { richardson: true, ..Default::default() };
    let dric = directional_curvature_derivative(&g, &h, CurvatureOperator::Ricci, &opts)?;
    let driem = directional_curvature_derivative(&g, &h, CurvatureOperator::Riemann, &opts)?;
    let rhs = linearized_flow_rhs(&g, &h, law, &opts)?;
    let homogeneity_defect = match (&driem, direction) {
        (riemlab::variation_lab::CurvatureDerivative::Riemann(d), Direction::Metric) => {
            let riem = curvature(&g)?;
            Some(d.iter().zip(&riem).map(|(a, c)| a.sub(&c.riemann).max_abs()).fold(0.0, f64::max))
        }
        _ => None,
    };
    Ok(LinearizeReport {
        law,
        direction,
        max_dric: dric.max_abs(),
        max_driem: driem.max_abs(),
        max_rhs: rhs.iter().map(linalg::max_abs).fold(0.0, f64::max),
        homogeneity_defect,
    })
}

#[derive(Debug, Serialize)]
pub struct IdentityReport {
    pub dim: usize,
    pub samples: usize,
    pub max_recovery_error: f64,
    pub max_identity_residual: f64,
    pub failures: usize,
}

/// Recovers `g` from `g⊙g` for seeded random metrics and checks the quadratic identity.
pub fn identity_report(dim: usize, samples: usize, seed: u64) -> Result<IdentityReport, CliError> {
    let mut report = IdentityReport { dim, samples, max_recovery_error: 0.0, max_identity_residual: 0.0, failures: 0 };
    for s in 0..samples as u64 {
        let g = random_spd(dim, seed.wrapping_add(s));
        let big = bialternate_product(&g);
        match recover_metric(&big) {
            Ok(r) => report.max_recovery_error = report.max_recovery_error.max(linalg::max_abs(&(r - &g))),
            Err(_) => report.failures += 1,
        }
        report.max_identity_residual = report.max_identity_residual.max(verify_recovery_identity(&g, &big, seed));
    }
    Ok(report)
}
