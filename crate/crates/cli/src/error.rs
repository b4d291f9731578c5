use gridsched_core::generate::GeneratorError;
use gridsched_core::io::IoError;
use gridsched_core::metrics::MetricError;
use gridsched_core::model::ModelError;
use gridsched_core::schedule::ScheduleError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

/// A failed command, classified by the exit code it maps to.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Solver(String),
    #[error(transparent)]
    Other(#[from] anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Infeasible(_) => EXIT_INFEASIBLE,
            Failure::Solver(_) => EXIT_SOLVER,
            Failure::Other(_) => EXIT_OTHER,
        }
    }

    /// Short status word used in sweep tables.
    pub fn status(&self) -> &'static str {
        match self {
            Failure::Validation(_) => "invalid",
            Failure::Infeasible(_) => "infeasible",
            Failure::Solver(_) => "solver_failure",
            Failure::Other(_) => "error",
        }
    }
}

impl From<ScheduleError> for Failure {
    fn from(e: ScheduleError) -> Self {
        match e {
            ScheduleError::Invalid(_) | ScheduleError::NonconvexPrice { .. } => {
                Failure::Validation(e.to_string())
            }
            ScheduleError::Infeasible { .. } => Failure::Infeasible(e.to_string()),
            ScheduleError::NotOptimal(_) | ScheduleError::Solver(_) => {
                Failure::Solver(e.to_string())
            }
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Read { .. } => Failure::Other(e.into()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<GeneratorError> for Failure {
    fn from(e: GeneratorError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        Failure::Other(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Other(e.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.into())
    }
}
