use thiserror::Error;

/// Which part of the gain admissibility test was violated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GainConstraint {
    /// `beta` must be strictly positive.
    BetaPositive,
    /// `2 alpha^2 + 1.5 beta` must be strictly positive.
    RegionLower,
    /// `2 alpha^2 + 1.5 beta` must be strictly below one half.
    RegionUpper,
    /// A gain is NaN or infinite.
    NonFinite,
}

impl std::fmt::Display for GainConstraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            GainConstraint::BetaPositive => "beta > 0",
            GainConstraint::RegionLower => "2 alpha^2 + 1.5 beta > 0",
            GainConstraint::RegionUpper => "2 alpha^2 + 1.5 beta < 0.5",
            GainConstraint::NonFinite => "finite gains",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum Error {
    #[error("gains outside the admissible region: violates {constraint} by {excess:.6e}")]
    OutOfAdmissibleRegion {
        constraint: GainConstraint,
        excess: f64,
    },
    #[error("gains are not admissible")]
    GainsInadmissible,
    #[error("mu1 = {mu1} is not below its bound {bound}")]
    Mu1TooLarge { mu1: f64, bound: f64 },
    #[error("Lyapunov weights (mu1 = {mu1}, mu2 = {mu2}) are outside the admissible box")]
    WeightsInadmissible { mu1: f64, mu2: f64 },
    #[error("radius {radius} exceeds the smallness radius {max}")]
    RadiusTooLarge { radius: f64, max: f64 },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("delay line needs at least one cell")]
    InvalidCellCount,
    #[error("grid needs at least 8 interior nodes, got {0}")]
    GridTooCoarse(usize),
    #[error("singular linear system at column {column}")]
    SingularSystem { column: usize },
    #[error("non-finite state at t = {time}")]
    NonFiniteState { time: f64 },
    #[error("time step {dt} does not match the delay line step {line_dt}")]
    StepMismatch { dt: f64, line_dt: f64 },
    #[error("fixed-point iteration did not converge after {iterations} iterations (last difference {last_difference:e})")]
    NoConvergence {
        iterations: usize,
        last_difference: f64,
        contraction_factors: Vec<f64>,
    },
    #[error("record comes from a nonlinear or forced run")]
    NotLinearRun,
    #[error("fit window [{start}, {end}] contains fewer than two samples")]
    EmptyWindow { start: f64, end: f64 },
    #[error("energy is not positive at t = {time}")]
    NonPositiveEnergy { time: f64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("horizon T = {horizon} must exceed the delay h = {delay}")]
    HorizonTooShort { horizon: f64, delay: f64 },
    #[error("quantity is not defined for zero initial data")]
    NotDefined,
    #[error("eigenvalue computation did not converge")]
    EigensolveFailure,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
