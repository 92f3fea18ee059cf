//! Running one scenario: integrate, write `<id>.csv` and `<id>.summary.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use riemlab::bialternate::bialternate_product;
use riemlab::evolve::{Settings, Trajectory};
use riemlab::flow_engine::{integrate_flow, monitor_blow_up, riemann_type_constants, FlowLaw, FlowState};
use riemlab::tensor_kernel::curvature::curvature;
use riemlab::tensor_kernel::families::Family;
use riemlab::tensor_kernel::field::MetricField;
use riemlab::wave_engine::{
    conformally_flat_wave_solve, constant_curvature_wave_ode, crest_position, integrate_wave, monitor_wave_blow_up,
    wave_polynomial, wave_polynomial_residual, GeneralCoefficients, WaveLaw, WaveState,
};
use riemlab::Error;

use crate::config::{LawConfig, Profile, ScenarioConfig};
use crate::CliError;

/// A stated value next to the value this code measures for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Discrepancy {
    pub id: String,
    pub stated: f64,
    pub measured: f64,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Smooth,
    Singular,
    Failed,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Smooth => 0,
            Outcome::Singular => 2,
            Outcome::Failed => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub id: String,
    pub outcome: Outcome,
    pub termination: String,
    pub t_final: Option<f64>,
    #[serde(rename = "T_est")]
    pub t_est: Option<f64>,
    pub blowup_exponent: Option<f64>,
    pub residuals: BTreeMap<String, f64>,
    pub discrepancies: Vec<Discrepancy>,
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub csv: Option<PathBuf>,
    pub config: ScenarioConfig,
}

struct Produced {
    termination: String,
    singular: bool,
    t_final: f64,
    t_est: Option<f64>,
    exponent: Option<f64>,
    residuals: BTreeMap<String, f64>,
    discrepancies: Vec<Discrepancy>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn settings(cfg: &ScenarioConfig) -> Settings {
    Settings {
        dt: cfg.integrator.dt,
        t_end: cfg.integrator.t_end,
        stride: cfg.integrator.stride,
        collapse_threshold: cfg.stop.collapse_threshold,
        curvature_cap: cfg.stop.curvature_cap,
        max_halvings: cfg.stop.max_halvings,
    }
}

/// Runs a scenario and writes its artifacts under `out_dir` (unless the file
/// names its own directory). Module errors end up in the summary.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunSummary, CliError> {
    let dir = cfg.output_dir(out_dir);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let csv_path = dir.join(format!("{}.csv", cfg.id));
    let start = Instant::now();
    let produced = produce(cfg, &csv_path);
    let wall_time_s = start.elapsed().as_secs_f64();
    let summary = match produced {
        Ok(p) => RunSummary {
            id: cfg.id.clone(),
            outcome: if p.singular { Outcome::Singular } else { Outcome::Smooth },
            termination: p.termination,
            t_final: Some(p.t_final),
            t_est: p.t_est,
            blowup_exponent: p.exponent,
            residuals: p.residuals,
            discrepancies: p.discrepancies,
            error: None,
            wall_time_s,
            csv: Some(csv_path),
            config: cfg.clone(),
        },
        Err(CliError::Model(e)) => RunSummary {
            id: cfg.id.clone(),
            outcome: Outcome::Failed,
            termination: "error".into(),
            t_final: None,
            t_est: None,
            blowup_exponent: None,
            residuals: BTreeMap::new(),
            discrepancies: Vec::new(),
            error: Some(e.to_string()),
            wall_time_s,
            csv: None,
            config: cfg.clone(),
        },
        Err(e) => return Err(e),
    };
    let path = dir.join(format!("{}.summary.json", cfg.id));
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(summary)
}

fn produce(cfg: &ScenarioConfig, csv_path: &Path) -> Result<Produced, CliError> {
    match &cfg.law {
        LawConfig::ScaleOde { lambda, v } => scale_ode(cfg, *lambda, *v, csv_path),
        LawConfig::ConformalWave { points, length, profile, amplitude, width } => {
            conformal(cfg, *points, *length, *profile, *amplitude, *width, csv_path)
        }
        _ => metric_law(cfg, csv_path),
    }
}

fn write_records(traj: &Trajectory, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &traj.records {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

pub fn initial_metric(cfg: &ScenarioConfig) -> Result<(Family, MetricField), CliError> {
    let family = cfg.family()?;
    let chart = cfg.chart.as_ref().expect("validated").to_chart()?;
    let sampler = family.metric(chart.dim())?;
    Ok((family, MetricField::metric_from_fn(chart, &*sampler)?))
}

/// `Riem/G` in the first coordinate plane at the first sample.
fn curvature_factor(g: &MetricField) -> Result<f64, CliError> {
    let c = curvature(g)?.into_iter().next().ok_or(Error::EmptyTrajectory)?;
    Ok(c.riemann.get(0, 1, 0, 1) / bialternate_product(&c.metric).get(0, 1, 0, 1))
}

/// `(1 − n) tr(g⁻¹ ∂ₜg) / R` at the first sample, i.e. `(1 − n) ∂ₜ ln det g / R`.
fn log_volume_ratio(g: &MetricField, velocity: &nalgebra::DMatrix<f64>) -> Result<f64, CliError> {
    let c = curvature(g)?.into_iter().next().ok_or(Error::EmptyTrajectory)?;
    let rate = (&c.inverse * velocity).trace();
    Ok((1.0 - g.dim() as f64) * rate / c.scalar)
}

fn is_wave(law: &LawConfig) -> bool {
    matches!(law, LawConfig::RicciWave {} | LawConfig::RiemannWave {} | LawConfig::General { .. })
}

/// Integrates a metric law from the configured initial metric.
pub fn trajectory(cfg: &ScenarioConfig) -> Result<(MetricField, Trajectory), CliError> {
    let (_, g) = initial_metric(cfg)?;
    let settings = settings(cfg);
    let traj = match cfg.law {
        LawConfig::RicciWave {} | LawConfig::RiemannWave {} | LawConfig::General { .. } => {
            let law = match cfg.law {
                LawConfig::RicciWave {} => WaveLaw::RicciWave,
                LawConfig::RiemannWave {} => WaveLaw::RiemannWave,
                LawConfig::General { alpha, beta, gamma, delta } => {
                    WaveLaw::General(GeneralCoefficients::new(alpha, beta, gamma, delta))
                }
                _ => unreachable!(),
            };
            let k = (0..g.len()).map(|s| g.value(s) * cfg.initial_velocity).collect();
            integrate_wave(&WaveState { t: 0.0, g: g.clone(), k }, law, &settings)?
        }
        LawConfig::RicciFlow {} => integrate_flow(&FlowState::new(g.clone()), FlowLaw::Ricci, &settings)?,
        LawConfig::RiemannFlow {} => integrate_flow(&FlowState::new(g.clone()), FlowLaw::RiemannInduced, &settings)?,
        LawConfig::RiemannType { alpha, beta } => {
            let (a, b) = riemann_type_constants(g.dim());
            let law = FlowLaw::RiemannType { alpha: alpha.unwrap_or(a), beta: beta.unwrap_or(b) };
            integrate_flow(&FlowState::new(g.clone()), law, &settings)?
        }
        LawConfig::ScaleOde { .. } | LawConfig::ConformalWave { .. } => {
            return Err(CliError::SchemaError { key: "law".into(), reason: "not a metric law".into() })
        }
    };
    Ok((g, traj))
}

fn metric_law(cfg: &ScenarioConfig, csv_path: &Path) -> Result<Produced, CliError> {
    let family = cfg.family()?;
    let (g, traj) = trajectory(cfg)?;
    let n = g.dim();
    let nf = n as f64;
    let mut discrepancies = Vec::new();
    let wave = is_wave(&cfg.law);
    if let LawConfig::RiemannType { alpha, .. } = cfg.law {
        let (a, _) = riemann_type_constants(n);
        discrepancies.push(Discrepancy {
            id: "riemann-type-alpha".into(),
            stated: 2.0 * (nf - 2.0),
            measured: a,
            note: format!("α that reproduces ∂g/∂t = −2 Ric; this run used α = {}", alpha.unwrap_or(a)),
        });
    }
    if matches!(cfg.law, LawConfig::RiemannFlow {}) {
        let v = riemlab::flow_engine::induced_riemann_flow_rhs(&g)?;
        let ratio = log_volume_ratio(&g, &v[0])?;
        if ratio.is_finite() {
            discrepancies.push(Discrepancy {
                id: "log-volume-rate-sign".into(),
                stated: -1.0,
                measured: ratio,
                note: "(1 − n) ∂ₜ ln det g divided by the scalar curvature".into(),
            });
        }
    }
    write_records(&traj, csv_path)?;

    let singular = traj.termination.is_singular();
    let blow = if singular {
        let b = if wave { monitor_wave_blow_up(&traj) } else { monitor_blow_up(&traj) };
        b.ok()
    } else {
        None
    };
    let mut residuals = BTreeMap::new();
    let eq = traj.records.iter().map(|r| r.eq_residual).filter(|x| x.is_finite()).fold(0.0, f64::max);
    residuals.insert("eq_residual_max".into(), eq);

    if let Some(lambda) = family.curvature_factor().filter(|l| *l != 0.0) {
        let measured = curvature_factor(&g)?;
        discrepancies.push(Discrepancy {
            id: "constant-curvature-factor".into(),
            stated: lambda * (nf - 1.0),
            measured,
            note: "λ in Riem(g₀) = λ G₀ for the unit-curvature model".into(),
        });
        if matches!(cfg.law, LawConfig::RiemannFlow {}) {
            if lambda > 0.0 {
                discrepancies.push(Discrepancy {
                    id: "sphere-collapse-time".into(),
                    stated: 1.0 / (nf - 1.0),
                    measured: blow.as_ref().map_or(f64::NAN, |b| b.t_est),
                    note: "collapse time of the Riemann flow from the unit sphere".into(),
                });
            } else if let Some(last) = traj.records.last() {
                discrepancies.push(Discrepancy {
                    id: "hyperbolic-expansion-rate".into(),
                    stated: nf - 1.0,
                    measured: (last.f_est - 1.0) / last.t,
                    note: "slope of the scale factor under the Riemann flow".into(),
                });
            }
        }
    }
    Ok(Produced {
        termination: traj.termination.as_str().into(),
        singular,
        t_final: traj.final_time(),
        t_est: blow.as_ref().map(|b| b.t_est),
        exponent: blow.as_ref().map(|b| b.exponent),
        residuals,
        discrepancies,
    })
}

#[derive(Serialize)]
struct OdeRow {
    t: f64,
    f: f64,
    fp: f64,
}

fn scale_ode(cfg: &ScenarioConfig, lambda: f64, v: f64, csv_path: &Path) -> Result<Produced, CliError> {
    let sol = constant_curvature_wave_ode(lambda, v, cfg.integrator.dt, cfg.integrator.t_end)?;
    let mut w = csv::Writer::from_path(csv_path)?;
    for (i, &t) in sol.times.iter().enumerate() {
        if i % cfg.integrator.stride == 0 || i + 1 == sol.times.len() {
            w.serialize(OdeRow { t, f: sol.f[i], fp: sol.fp[i] })?;
        }
    }
    w.flush().map_err(io_err(csv_path))?;
    let mut residuals = BTreeMap::new();
    let poly = wave_polynomial_residual(lambda, v);
    residuals.insert("polynomial_condition".into(), poly);
    let dev = sol.times.iter().zip(&sol.f).map(|(t, f)| (f - wave_polynomial(lambda, v, *t)).abs()).fold(0.0, f64::max);
    residuals.insert("polynomial_max_deviation".into(), dev);
    let mut discrepancies = Vec::new();
    if lambda < 0.0 {
        discrepancies.push(Discrepancy {
            id: "wave-polynomial-condition".into(),
            stated: 0.0,
            measured: poly,
            note: "v² + 2λ/3; the quadratic 1 + vt − λt²/6 solves the scale ODE only when this vanishes".into(),
        });
    }
    Ok(Produced {
        termination: if sol.collapse_time.is_some() { "collapse" } else { "t_end" }.into(),
        singular: sol.collapse_time.is_some(),
        t_final: *sol.times.last().unwrap_or(&0.0),
        t_est: sol.collapse_time,
        exponent: None,
        residuals,
        discrepancies,
    })
}

#[derive(Serialize)]
struct WaveRow {
    t: f64,
    min_u: f64,
    max_u: f64,
    crest_x: f64,
}

/// Initial data for the 1+1 conformal wave.
pub fn conformal_initial_data(points: usize, length: f64, profile: Profile, amplitude: f64, width: f64) -> (Vec<f64>, Vec<f64>) {
    let dx = length / points as f64;
    match profile {
        Profile::Constant => (vec![1.0 + amplitude; points], vec![0.0; points]),
        Profile::Gaussian => {
            let centre = 0.5 * length;
            let bump = |x: f64| amplitude * (-((x - centre) / width).powi(2)).exp();
            let u0: Vec<f64> = (0..points).map(|i| 1.0 + bump(i as f64 * dx)).collect();
            // u_t = −u_x moves the bump to the right at unit speed
            let u1 = (0..points)
                .map(|i| {
                    let x = i as f64 * dx - centre;
                    2.0 * x / (width * width) * bump(i as f64 * dx)
                })
                .collect();
            (u0, u1)
        }
    }
}

fn conformal(
    cfg: &ScenarioConfig,
    points: usize,
    length: f64,
    profile: Profile,
    amplitude: f64,
    width: f64,
    csv_path: &Path,
) -> Result<Produced, CliError> {
    let (u0, u1) = conformal_initial_data(points, length, profile, amplitude, width);
    let res = conformally_flat_wave_solve(&u0, &u1, length, cfg.integrator.dt, cfg.integrator.t_end, cfg.integrator.stride);
    let sol = match res {
        Ok(s) => s,
        Err(Error::PositivityLost { t, min_value }) => {
            let mut residuals = BTreeMap::new();
            residuals.insert("min_u".into(), min_value);
            fs::write(csv_path, "t,min_u,max_u,crest_x\n").map_err(io_err(csv_path))?;
            return Ok(Produced {
                termination: "positivity-lost".into(),
                singular: true,
                t_final: t,
                t_est: Some(t),
                exponent: None,
                residuals,
                discrepancies: Vec::new(),
            });
        }
        Err(e) => return Err(e.into()),
    };
    let mut w = csv::Writer::from_path(csv_path)?;
    for (t, u) in sol.times.iter().zip(&sol.u) {
        let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        w.serialize(WaveRow { t: *t, min_u: lo, max_u: hi, crest_x: crest_position(u, length) })?;
    }
    w.flush().map_err(io_err(csv_path))?;
    let mut residuals = BTreeMap::new();
    residuals.insert("min_u".into(), sol.min_u);
    Ok(Produced {
        termination: "t_end".into(),
        singular: false,
        t_final: *sol.times.last().unwrap_or(&0.0),
        t_est: None,
        exponent: None,
        residuals,
        discrepancies: Vec::new(),
    })
}
