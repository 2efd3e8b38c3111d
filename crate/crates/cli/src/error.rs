//! Command failures and their exit codes.

use crate::config::ConfigError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("verdict failed: {0}")]
    Verdict(String),
    #[error("numerical failure: {0}")]
    Numerical(hsdelay::Error),
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verdict(_) => 1,
            CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<hsdelay::Error> for CliError {
    /// Parameter and precondition errors are configuration problems;
    /// everything raised while solving is numerical.
    fn from(e: hsdelay::Error) -> Self {
        use hsdelay::Error as E;
        match e {
            E::OutOfAdmissibleRegion { .. }
            | E::GainsInadmissible
            | E::Mu1TooLarge { .. }
            | E::WeightsInadmissible { .. }
            | E::RadiusTooLarge { .. }
            | E::InvalidParameter { .. }
            | E::InvalidCellCount
            | E::GridTooCoarse(_)
            | E::StepMismatch { .. }
            | E::HorizonTooShort { .. }
            | E::PreconditionViolated(_)
            | E::GridMismatch(_) => CliError::Config(ConfigError::Invalid(e.to_string())),
            E::SingularSystem { .. }
            | E::NonFiniteState { .. }
            | E::NoConvergence { .. }
            | E::NotLinearRun
            | E::EmptyWindow { .. }
            | E::NonPositiveEnergy { .. }
            | E::NotDefined
            | E::EigensolveFailure => CliError::Numerical(e),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output {
            path: "csv output".into(),
            message: e.to_string(),
        }
    }
}
