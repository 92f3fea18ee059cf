use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use riemlab::tensor_kernel::chart::{Chart, DEFAULT_POINT_STEP};
use riemlab::variation_lab::LinearizedLaw;
use riemlab_cli::config::{
    family_from, ChartConfig, FamilyConfig, IntegratorConfig, LawConfig, OutputConfig, Profile, ScenarioConfig,
    StopConfig,
};
use riemlab_cli::reports::{self, Direction, PotentialKind};
use riemlab_cli::{batch_exit_code, run_many, run_scenario, CliError};

#[derive(Parser)]
#[command(name = "riemlab", version, about = "Riemann flows and waves on metric charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ManifoldArgs {
    /// flat, sphere-stereographic, hyperbolic-poincare, conformal-torus, perturbed-torus or diagonal-lame
    #[arg(long, default_value = "sphere-stereographic")]
    family: String,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Evaluation point, comma separated (defaults to the origin)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    /// Points per axis; switches to a periodic grid chart
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    length: f64,
    #[arg(long, default_value_t = DEFAULT_POINT_STEP)]
    h: f64,
    #[arg(long, default_value_t = 0.1)]
    amplitude: f64,
    #[arg(long, default_value_t = 1)]
    mode: u32,
    /// Lamé coefficient expressions in x0, x1, … (diagonal-lame only)
    #[arg(long, num_args = 1..)]
    lame: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ManifoldArgs {
    fn family_config(&self) -> FamilyConfig {
        FamilyConfig { name: self.family.clone(), amplitude: self.amplitude, mode: self.mode, lame: self.lame.clone() }
    }

    fn chart_config(&self) -> ChartConfig {
        match self.grid {
            Some(points) => ChartConfig::Grid { dim: self.dim, points, length: self.length },
            None => ChartConfig::Point { point: self.point.clone().unwrap_or_else(|| vec![0.0; self.dim]), h: self.h },
        }
    }

    fn resolve(&self) -> Result<(riemlab::tensor_kernel::families::Family, Chart), CliError> {
        Ok((family_from(&self.family_config(), self.seed)?, self.chart_config().to_chart()?))
    }
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value = "run")]
    id: String,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[arg(long, default_value_t = 1e-6)]
    collapse_threshold: f64,
    #[arg(long)]
    curvature_cap: Option<f64>,
    /// Output directory for the CSV series and summary JSON
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlowKind {
    Ricci,
    Riemann,
    RiemannType,
}

#[derive(Clone, Copy, ValueEnum)]
enum WaveKind {
    RiemannWave,
    RicciWave,
    General,
}

#[derive(Clone, Copy, ValueEnum)]
enum LinearizeKind {
    Ricci,
    RiemannInduced,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature report for a metric family on a chart
    Curvature {
        #[command(flatten)]
        manifold: ManifoldArgs,
    },
    /// Integrate a metric flow
    Flow {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "riemann")]
        law: FlowKind,
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
    },
    /// Integrate a second-order metric evolution
    Wave {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value = "riemann-wave")]
        law: WaveKind,
        /// Initial velocity as a multiple of the initial metric
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        velocity: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        gamma: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        delta: f64,
    },
    /// Scale factor ODE of the Riemann wave on a constant-curvature metric
    ScaleOde {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        v: f64,
    },
    /// Conformally flat 1+1 wave on a periodic interval
    ConformalWave {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 128)]
        points: usize,
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        #[arg(long, value_enum, default_value = "gaussian")]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0.01)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.05)]
        width: f64,
    },
    /// Riemann soliton residual
    Soliton {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[arg(long, allow_hyphen_values = true)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "zero")]
        potential: PotentialKind,
    },
    /// Directional curvature derivatives and the linearized flow velocity
    Linearize {
        #[command(flatten)]
        manifold: ManifoldArgs,
        #[arg(long, value_enum, default_value = "riemann-induced")]
        law: LinearizeKind,
        #[arg(long, value_enum, default_value = "metric")]
        direction: Direction,
    },
    /// Recover g from g⊙g for random metrics and check the recovery identity
    IdentityCheck {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run scenario files
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Scenarios run concurrently
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory for scenarios that do not name one
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Gaussian,
    Constant,
}

fn scenario(run: &RunArgs, law: LawConfig, manifold: Option<&ManifoldArgs>, velocity: f64) -> ScenarioConfig {
    ScenarioConfig {
        id: run.id.clone(),
        seed: manifold.map_or(0, |m| m.seed),
        family: manifold.map(ManifoldArgs::family_config),
        chart: manifold.map(ManifoldArgs::chart_config),
        law,
        integrator: IntegratorConfig { dt: run.dt, t_end: run.t_end, stride: run.stride },
        stop: StopConfig { collapse_threshold: run.collapse_threshold, curvature_cap: run.curvature_cap, ..Default::default() },
        initial_velocity: velocity,
        output: OutputConfig { dir: Some(run.out.clone()) },
        tolerances: Default::default(),
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("report serializes"));
}

fn single(cfg: ScenarioConfig) -> Result<i32, CliError> {
    cfg.validate()?;
    let summary = run_scenario(&cfg, &cfg.output_dir(std::path::Path::new("out")))?;
    print_json(&summary);
    Ok(summary.outcome.exit_code())
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Curvature { manifold } => {
            let (family, chart) = manifold.resolve()?;
            print_json(&reports::curvature_report(&family, chart)?);
            Ok(0)
        }
        Command::Flow { manifold, run, law, alpha, beta } => {
            let law = match law {
                FlowKind::Ricci => LawConfig::RicciFlow {},
                FlowKind::Riemann => LawConfig::RiemannFlow {},
                FlowKind::RiemannType => LawConfig::RiemannType { alpha, beta },
            };
            single(scenario(&run, law, Some(&manifold), 0.0))
        }
        Command::Wave { manifold, run, law, velocity, alpha, beta, gamma, delta } => {
            let law = match law {
                WaveKind::RiemannWave => LawConfig::RiemannWave {},
                WaveKind::RicciWave => LawConfig::RicciWave {},
                WaveKind::General => LawConfig::General { alpha, beta, gamma, delta },
            };
            single(scenario(&run, law, Some(&manifold), velocity))
        }
        Command::ScaleOde { run, lambda, v } => single(scenario(&run, LawConfig::ScaleOde { lambda, v }, None, 0.0)),
        Command::ConformalWave { run, points, length, profile, amplitude, width } => {
            let profile = match profile {
                ProfileArg::Gaussian => Profile::Gaussian,
                ProfileArg::Constant => Profile::Constant,
            };
            single(scenario(&run, LawConfig::ConformalWave { points, length, profile, amplitude, width }, None, 0.0))
        }
        Command::Soliton { manifold, lambda, potential } => {
            let (family, chart) = manifold.resolve()?;
            print_json(&reports::soliton_report(&family, chart, lambda, potential)?);
            Ok(0)
        }
        Command::Linearize { manifold, law, direction } => {
            let (family, chart) = manifold.resolve()?;
            let law = match law {
                LinearizeKind::Ricci => LinearizedLaw::Ricci,
                LinearizeKind::RiemannInduced => LinearizedLaw::RiemannInduced,
            };
            print_json(&reports::linearize_report(&family, chart, law, direction, manifold.seed)?);
            Ok(0)
        }
        Command::IdentityCheck { dim, samples, seed } => {
            let report = reports::identity_report(dim, samples, seed)?;
            print_json(&report);
            Ok(if report.failures == 0 { 0 } else { 1 })
        }
        Command::Run { configs, jobs, out } => {
            let results = run_many(&configs, &out, jobs)?;
            for (path, r) in configs.iter().zip(&results) {
                match r {
                    Ok(s) => println!("{}\t{}\t{}", s.id, s.termination, path.display()),
                    Err(e) => eprintln!("{}: {e}", path.display()),
                }
            }
            Ok(batch_exit_code(&results))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
