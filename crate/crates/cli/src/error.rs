//! Error type for the command-line front end.
//!
//! Every failure is reported to stderr as a single line of the form
//! `error[<class>]: <message>` so that wrapper scripts can match on the
//! class without parsing free-form prose. The process then exits nonzero.

use std::fmt;

use mimo_hw::circuits::CircuitError;
use mimo_hw::closed_form::ClosedFormError;
use mimo_hw::estimator::EstimatorError;
use mimo_hw::model::ModelError;
use mimo_hw::monte_carlo::MonteCarloError;
use mimo_hw::scenario::ScenarioError;

/// A command-line failure, tagged with a machine-parsable class.
#[derive(Debug)]
pub enum CliError {
    /// The config file or a flag value could not be interpreted.
    Config(String),
    /// A file or directory could not be read or written.
    Io(String),
    /// The resolved parameters violate a model invariant.
    Model(String),
    /// The pilot covariance or filter computation failed.
    Estimator(String),
    /// The Monte Carlo engine rejected its inputs.
    Simulation(String),
    /// A circuit power mapping was evaluated outside its domain.
    Circuit(String),
}

impl CliError {
    fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Model(_) => "model",
            CliError::Estimator(_) => "estimator",
            CliError::Simulation(_) => "simulation",
            CliError::Circuit(_) => "circuit",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m)
            | CliError::Io(m)
            | CliError::Model(m)
            | CliError::Estimator(m)
            | CliError::Simulation(m)
            | CliError::Circuit(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Collapse the message onto one line so the contract holds even if
        // an underlying error ever embeds a newline.
        let msg = self.message().replace('\n', " ");
        write!(f, "error[{}]: {}", self.class(), msg)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Model(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Model(e.to_string())
    }
}

impl From<EstimatorError> for CliError {
    fn from(e: EstimatorError) -> Self {
        CliError::Estimator(e.to_string())
    }
}

impl From<ClosedFormError> for CliError {
    fn from(e: ClosedFormError) -> Self {
        match e {
            ClosedFormError::Estimator(inner) => CliError::Estimator(inner.to_string()),
            other => CliError::Model(other.to_string()),
        }
    }
}

impl From<MonteCarloError> for CliError {
    fn from(e: MonteCarloError) -> Self {
        CliError::Simulation(e.to_string())
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        CliError::Circuit(e.to_string())
    }
}
