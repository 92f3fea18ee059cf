//! Shared fourth-order Runge–Kutta driver for first- and second-order metric evolutions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor_kernel::curvature::SampleCurvature;
use crate::tensor_kernel::field::MetricField;
use crate::tensor_kernel::norm::{norm_with_inverse, TensorRef};

/// Time stepping and stop criteria.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub dt: f64,
    pub t_end: f64,
    /// Steps between stored metric snapshots.
    pub stride: usize,
    /// Collapse when the smallest eigenvalue relative to `g(0)` drops below this.
    pub collapse_threshold: f64,
    /// Stop once `sup‖Riem‖` exceeds this.
    pub curvature_cap: Option<f64>,
    pub max_halvings: u32,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { dt: 1e-3, t_end: 1.0, stride: 10, collapse_threshold: 1e-6, curvature_cap: None, max_halvings: 20 }
    }
}

impl Settings {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Settings { dt, t_end, ..Settings::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidSettings(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidSettings(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.stride == 0 {
            return Err(Error::InvalidSettings("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-step diagnostics; the field order is the CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub t: f64,
    pub f_est: f64,
    pub min_rel_eig: f64,
    pub max_rel_eig: f64,
    pub sup_ric_norm: f64,
    pub sup_riem_norm: f64,
    pub scalar_min: f64,
    pub scalar_max: f64,
    pub eq_residual: f64,
    pub det_g_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    #[serde(rename = "t_end")]
    EndTime,
    #[serde(rename = "collapse")]
    Collapse,
    #[serde(rename = "curvature-cap")]
    CurvatureCap,
}

impl Termination {
    pub fn is_singular(&self) -> bool {
        !matches!(self, Termination::EndTime)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::EndTime => "t_end",
            Termination::Collapse => "collapse",
            Termination::CurvatureCap => "curvature-cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub g: Vec<DMatrix<f64>>,
    pub k: Option<Vec<DMatrix<f64>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: MetricField,
    pub records: Vec<Record>,
    pub snapshots: Vec<Snapshot>,
    pub termination: Termination,
    /// Step size in force at the end, after any halvings.
    pub final_dt: f64,
}

impl Trajectory {
    pub fn last_snapshot(&self) -> Option<&Snapshot> {
        self.snapshots.last()
    }

    /// Metric field of a snapshot on the initial chart.
    pub fn metric_at(&self, snap: &Snapshot) -> Result<MetricField> {
        self.initial.with_metric_values(snap.g.clone())
    }

    pub fn final_time(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.t)
    }
}

/// Rate returned by a law: velocity for first-order laws, acceleration for second-order ones.
pub(crate) struct Evaluation {
    pub rate: Vec<DMatrix<f64>>,
    pub curvature: Vec<SampleCurvature>,
    pub residual: f64,
}

pub(crate) trait System: Sync {
    fn second_order(&self) -> bool;
    fn evaluate(&self, t: f64, g: &MetricField, k: Option<&[DMatrix<f64>]>, with_residual: bool) -> Result<Evaluation>;
}

type Blocks = Vec<Vec<DMatrix<f64>>>;

fn axpy(y: &Blocks, h: f64, d: &Blocks) -> Blocks {
    y.iter()
        .zip(d)
        .map(|(yb, db)| yb.iter().zip(db).map(|(a, b)| a + b * h).collect())
        .collect()
}

/// One classical RK4 step on a block state; `f` receives the stage time offset.
pub(crate) fn rk4_step<F>(y: &Blocks, h: f64, k1: Blocks, f: F) -> Result<Blocks>
where
    F: Fn(f64, &Blocks) -> Result<Blocks>,
{
    let k2 = f(0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(h, &axpy(y, h, &k3))?;
    Ok(y.iter()
        .enumerate()
        .map(|(b, yb)| {
            yb.iter()
                .enumerate()
                .map(|(s, v)| v + (&k1[b][s] + &k2[b][s] * 2.0 + &k3[b][s] * 2.0 + &k4[b][s]) * (h / 6.0))
                .collect()
        })
        .collect())
}

pub(crate) struct Reference {
    l0_inv: Vec<DMatrix<f64>>,
}

impl Reference {
    pub fn new(g0: &MetricField) -> Result<Self> {
        let l0_inv = (0..g0.len())
            .map(|s| linalg::cholesky_lower_inverse(g0.value(s), s))
            .collect::<Result<Vec<_>>>()?;
        Ok(Reference { l0_inv })
    }

    pub fn metric_part(&self, t: f64, g: &[DMatrix<f64>]) -> Record {
        let n = g[0].nrows() as f64;
        let (mut lo, mut hi, mut f_sum, mut det_min) = (f64::INFINITY, f64::NEG_INFINITY, 0.0, f64::INFINITY);
        for (gs, l) in g.iter().zip(&self.l0_inv) {
            let (a, b) = linalg::relative_eigen_range(gs, l);
            lo = lo.min(a);
            hi = hi.max(b);
            f_sum += (l * gs * l.transpose()).trace() / n;
            det_min = det_min.min(gs.determinant());
        }
        Record {
            t,
            f_est: f_sum / g.len() as f64,
            min_rel_eig: lo,
            max_rel_eig: hi,
            sup_ric_norm: f64::NAN,
            sup_riem_norm: f64::NAN,
            scalar_min: f64::NAN,
            scalar_max: f64::NAN,
            eq_residual: f64::NAN,
            det_g_min: det_min,
        }
    }

    pub fn min_rel_eig(&self, g: &[DMatrix<f64>]) -> f64 {
        g.iter()
            .zip(&self.l0_inv)
            .map(|(gs, l)| linalg::relative_eigen_range(gs, l).0)
            .fold(f64::INFINITY, f64::min)
    }
}

pub(crate) fn curvature_record(mut rec: Record, curv: &[SampleCurvature], residual: f64) -> Record {
    let (mut ric, mut riem) = (0.0_f64, 0.0_f64);
    let (mut smin, mut smax) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in curv {
        ric = ric.max(norm_with_inverse(TensorRef::Two(&c.ricci), &c.inverse));
        riem = riem.max(norm_with_inverse(TensorRef::Four(&c.riemann), &c.inverse));
        smin = smin.min(c.scalar);
        smax = smax.max(c.scalar);
    }
    rec.sup_ric_norm = ric;
    rec.sup_riem_norm = riem;
    rec.scalar_min = smin;
    rec.scalar_max = smax;
    rec.eq_residual = residual;
    rec
}

fn is_spd_failure(e: &Error) -> bool {
    matches!(e, Error::NotPositiveDefinite { .. })
}

/// Integrates `sys` from `initial` (with initial velocity `k0` for second-order laws).
pub(crate) fn integrate<S: System>(
    sys: &S,
    initial: &MetricField,
    k0: Option<Vec<DMatrix<f64>>>,
    settings: &Settings,
) -> Result<Trajectory> {
    settings.validate()?;
    initial.check_metric()?;
    if sys.second_order() != k0.is_some() {
        return Err(Error::ShapeMismatch("initial velocity must match the order of the law".into()));
    }
    if let Some(k) = &k0 {
        if k.len() != initial.len() {
            return Err(Error::ShapeMismatch("one velocity per sample expected".into()));
        }
    }
    let reference = Reference::new(initial)?;
    let field_of = |g: &[DMatrix<f64>]| initial.with_metric_values(g.to_vec());
    let deriv = |t: f64, y: &Blocks| -> Result<Blocks> {
        let field = field_of(&y[0])?;
        let e = sys.evaluate(t, &field, y.get(1).map(Vec::as_slice), false)?;
        Ok(if sys.second_order() { vec![y[1].clone(), e.rate] } else { vec![e.rate] })
    };

    let mut y: Blocks = match k0 {
        Some(k) => vec![initial.values(), k],
        None => vec![initial.values()],
    };
    let snapshot = |t: f64, y: &Blocks| Snapshot { t, g: y[0].clone(), k: y.get(1).cloned() };
    let mut t = 0.0;
    let mut dt = settings.dt;
    let mut steps = 0usize;
    let mut records = Vec::new();
    let mut snapshots = vec![snapshot(t, &y)];
    let end_tol = 1e-12 * settings.t_end.max(1.0);

    let termination = loop {
        let field = field_of(&y[0])?;
        let e1 = sys.evaluate(t, &field, y.get(1).map(Vec::as_slice), true)?;
        let rec = curvature_record(reference.metric_part(t, &y[0]), &e1.curvature, e1.residual);
        records.push(rec);
        if settings.curvature_cap.is_some_and(|cap| rec.sup_riem_norm > cap) {
            break Termination::CurvatureCap;
        }
        if t >= settings.t_end - end_tol {
            break Termination::EndTime;
        }
        let k1: Blocks = if sys.second_order() { vec![y[1].clone(), e1.rate] } else { vec![e1.rate] };
        let mut h = dt.min(settings.t_end - t);
        let mut halvings = 0;
        let next = loop {
            let attempt = rk4_step(&y, h, k1.clone(), |c, s| deriv(t + c, s)).and_then(|ny| {
                for (s, m) in ny[0].iter().enumerate() {
                    linalg::check_spd(m, s)?;
                }
                Ok(ny)
            });
            match attempt {
                Ok(ny) => break ny,
                Err(e) if is_spd_failure(&e) => {
                    halvings += 1;
                    if halvings > settings.max_halvings {
                        return Err(Error::StepRejected { t, halvings: settings.max_halvings });
                    }
                    h *= 0.5;
                    dt = dt.min(h);
                }
                Err(e) => return Err(e),
            }
        };
        y = next;
        t += h;
        if (settings.t_end - t).abs() <= end_tol {
            t = settings.t_end;
        }
        steps += 1;
        if steps % settings.stride == 0 {
            snapshots.push(snapshot(t, &y));
        }
        if reference.min_rel_eig(&y[0]) < settings.collapse_threshold {
            let base = reference.metric_part(t, &y[0]);
            let rec = field_of(&y[0])
                .and_then(|f| sys.evaluate(t, &f, y.get(1).map(Vec::as_slice), true))
                .map(|e| curvature_record(base, &e.curvature, e.residual))
                .unwrap_or(base);
            records.push(rec);
            break Termination::Collapse;
        }
    };
    if snapshots.last().map(|s| s.t) != Some(t) {
        snapshots.push(snapshot(t, &y));
    }
    Ok(Trajectory { initial: initial.clone(), records, snapshots, termination, final_dt: dt })
}
