use thiserror::Error;

/// Errors raised by the curvature kernel and the evolution engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("metric is not positive definite at sample {sample} (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { sample: usize, min_eigenvalue: f64 },

    #[error("metric sampler returned a non-finite value at {point:?}")]
    StencilOutOfDomain { point: Vec<f64> },

    #[error("operation needs dimension >= {required}, got {actual}")]
    DimensionTooSmall { required: usize, actual: usize },

    #[error("Lame coefficient H_{index} = {value:e} is not positive at sample {sample}")]
    NonpositiveLame { sample: usize, index: usize, value: f64 },

    #[error("tensor is not a bialternate product (normalized residual {residual:e})")]
    NotInImage { residual: f64 },

    #[error("step rejected at t = {t}: positivity lost after {halvings} halvings")]
    StepRejected { t: f64, halvings: u32 },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("trajectory reached its end time without a singularity")]
    NoSingularity,

    #[error("conformal factor dropped to {min_value:e} at t = {t}")]
    PositivityLost { t: f64, min_value: f64 },

    #[error("time step {dt} exceeds the CFL bound {limit}")]
    CflViolated { dt: f64, limit: f64 },

    #[error("second- and first-order coefficients both vanish")]
    DegenerateCoefficients,

    #[error("perturbation leaves the positive-definite cone even at eps = {eps:e}")]
    PerturbationTooLarge { eps: f64 },

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid settings: {0}")]
    InvalidSettings(String),

    #[error("invalid expression `{expr}`: {reason}")]
    InvalidExpression { expr: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
