//! Scenario files: JSON with a fixed schema, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use riemlab::tensor_kernel::chart::{Chart, DEFAULT_POINT_STEP};
use riemlab::tensor_kernel::families::{ConformalTorus, DiagonalLame, Family, PerturbedTorus};
use riemlab::Tolerances;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub chart: Option<ChartConfig>,
    pub law: LawConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub stop: StopConfig,
    /// Initial velocity of a wave as a multiple of the initial metric.
    #[serde(default)]
    pub initial_velocity: f64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub name: String,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_mode")]
    pub mode: u32,
    /// Lamé coefficient expressions in `x0, x1, …` for `diagonal-lame`.
    #[serde(default)]
    pub lame: Vec<String>,
}

fn default_amplitude() -> f64 {
    0.1
}

fn default_mode() -> u32 {
    1
}

fn default_step() -> f64 {
    DEFAULT_POINT_STEP
}

fn default_length() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChartConfig {
    Point {
        point: Vec<f64>,
        #[serde(default = "default_step")]
        h: f64,
    },
    Grid {
        dim: usize,
        points: usize,
        #[serde(default = "default_length")]
        length: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// Right-moving Gaussian bump on a unit background.
    Gaussian,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LawConfig {
    RicciFlow {},
    RiemannFlow {},
    RiemannType {
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        beta: Option<f64>,
    },
    RicciWave {},
    RiemannWave {},
    General {
        alpha: f64,
        beta: f64,
        gamma: f64,
        delta: f64,
    },
    ScaleOde {
        lambda: f64,
        v: f64,
    },
    ConformalWave {
        points: usize,
        #[serde(default = "default_length")]
        length: f64,
        profile: Profile,
        #[serde(default)]
        amplitude: f64,
        #[serde(default = "default_width")]
        width: f64,
    },
}

fn default_width() -> f64 {
    0.05
}

impl LawConfig {
    pub fn needs_metric(&self) -> bool {
        !matches!(self, LawConfig::ScaleOde { .. } | LawConfig::ConformalWave { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { dt: 1e-3, t_end: 1.0, stride: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopConfig {
    pub collapse_threshold: f64,
    pub curvature_cap: Option<f64>,
    pub max_halvings: u32,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig { collapse_threshold: 1e-6, curvature_cap: None, max_halvings: 20 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for `<id>.csv` and `<id>.summary.json`; relative paths resolve
    /// against the working directory.
    pub dir: Option<PathBuf>,
}

fn schema(key: &str, reason: impl Into<String>) -> CliError {
    CliError::SchemaError { key: key.to_string(), reason: reason.into() }
}

impl ScenarioConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            if inner.is_syntax() || inner.is_eof() {
                CliError::ParseError { path: origin.to_string(), reason: inner.to_string() }
            } else {
                let key = e.path().to_string();
                schema(if key == "." { "<root>" } else { &key }, inner.to_string())
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.id.is_empty() || !self.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(schema("id", "must be non-empty and use only letters, digits, '-', '_' or '.'"));
        }
        let i = &self.integrator;
        if !(i.dt > 0.0 && i.dt.is_finite()) {
            return Err(schema("integrator.dt", format!("must be positive, got {}", i.dt)));
        }
        if !(i.t_end > 0.0 && i.t_end.is_finite()) {
            return Err(schema("integrator.t_end", format!("must be positive, got {}", i.t_end)));
        }
        if i.stride == 0 {
            return Err(schema("integrator.stride", "must be at least 1"));
        }
        if !(self.stop.collapse_threshold > 0.0) {
            return Err(schema("stop.collapse_threshold", "must be positive"));
        }
        if self.stop.curvature_cap.is_some_and(|c| !(c > 0.0)) {
            return Err(schema("stop.curvature_cap", "must be positive"));
        }
        if !self.initial_velocity.is_finite() {
            return Err(schema("initial_velocity", "must be finite"));
        }
        match &self.law {
            LawConfig::General { alpha, beta, .. } if *alpha == 0.0 && *beta == 0.0 => {
                return Err(schema("law", "alpha and beta cannot both vanish"));
            }
            LawConfig::ConformalWave { points, length, width, .. } => {
                if *points < 8 {
                    return Err(schema("law.points", "need at least 8 points"));
                }
                if !(*length > 0.0) || !(*width > 0.0) {
                    return Err(schema("law", "length and width must be positive"));
                }
            }
            _ => {}
        }
        if self.law.needs_metric() {
            let fam = self.family.as_ref().ok_or_else(|| schema("family", "required for this law"))?;
            if !Family::NAMES.contains(&fam.name.as_str()) {
                return Err(CliError::UnknownFamily(fam.name.clone()));
            }
            let chart = self.chart.as_ref().ok_or_else(|| schema("chart", "required for this law"))?;
            chart.to_chart().map_err(|e| schema("chart", e.to_string()))?;
        }
        Ok(())
    }

    pub fn family(&self) -> Result<Family, CliError> {
        let fam = self.family.as_ref().ok_or_else(|| schema("family", "required for this law"))?;
        family_from(fam, self.seed)
    }

    pub fn output_dir(&self, fallback: &Path) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| fallback.to_path_buf())
    }
}

pub fn family_from(fam: &FamilyConfig, seed: u64) -> Result<Family, CliError> {
    Ok(match fam.name.as_str() {
        "flat" => Family::Flat,
        "sphere-stereographic" => Family::SphereStereographic,
        "hyperbolic-poincare" => Family::HyperbolicPoincare,
        "conformal-torus" => Family::ConformalTorus(ConformalTorus::new(fam.amplitude, fam.mode, seed)),
        "perturbed-torus" => Family::PerturbedTorus(PerturbedTorus::new(fam.amplitude, fam.mode, seed)),
        "diagonal-lame" => Family::DiagonalLame(DiagonalLame::new(fam.lame.iter().cloned())),
        other => return Err(CliError::UnknownFamily(other.to_string())),
    })
}

impl ChartConfig {
    pub fn to_chart(&self) -> riemlab::Result<Chart> {
        match self {
            ChartConfig::Point { point, h } => Chart::point(point.clone(), *h),
            ChartConfig::Grid { dim, points, length } => Chart::grid(*dim, *points, *length),
        }
    }
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    ScenarioConfig::from_json(&text, &path.display().to_string())
}
