use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("grid spacing {spacing} too coarse (needs < {limit})")]
    SpacingTooCoarse { spacing: f64, limit: f64 },

    #[error("evaluation at ({re}, {im}) is outside the domain of definition")]
    EvalOutsideDomain { re: f64, im: f64 },

    #[error("expression tree depth {0} exceeds the limit of 32")]
    TreeTooDeep(usize),

    #[error("trapezoid rule did not settle: {coarse} vs {fine} (relative change {rel:e})")]
    QuadratureDivergence { coarse: String, fine: String, rel: f64 },

    #[error("least-squares system ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("fit residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("eta vanishes: minimum modulus {min_modulus:e} at ({re}, {im})")]
    EtaVanishes { min_modulus: f64, re: f64, im: f64 },

    #[error("period map not surjective: smallest/largest singular value {ratio:e}")]
    SurjectivityFailure { ratio: f64 },

    #[error("Newton iteration diverged after {} iterations (last residual {:e})", trace.len(), trace.last().copied().unwrap_or(f64::NAN))]
    NewtonDiverged { trace: Vec<f64> },

    #[error("labyrinth resolution m={m} too coarse: 2/m must be < chart collar width {width}")]
    ResolutionTooCoarse { m: u32, width: f64 },

    #[error("auxiliary metric is singular on the collar (min density {min_density:e})")]
    SingularMetricOnCollar { min_density: f64 },

    #[error("target length {target} unreachable with m <= {m_max} (best {best})")]
    TargetUnreachable { m_max: u32, best: f64, target: f64 },

    #[error("incompatible targets: {0}")]
    IncompatibleTargets(String),

    #[error("exhaustion stage {stage} failed: {cause}")]
    StageFailed { stage: usize, cause: Box<Error> },

    #[error("real period leak on cycle {cycle}: {value:e}")]
    PeriodLeak { cycle: usize, value: f64 },

    #[error("generalized Gauss map vanishes at {} sample point(s)", points.len())]
    ZeroVector { points: Vec<(f64, f64)> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}
