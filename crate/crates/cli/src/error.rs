use std::path::PathBuf;

use fefet_am::apps::AppError;
use fefet_am::array::ArrayError;
use fefet_am::encoder::EncoderError;
use fefet_am::metric::MetricError;
use fefet_am::solver::SolverError;

/// Process exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const ERROR: i32 = 1;
    /// The question had a valid answer: no encoding exists.
    pub const INFEASIBLE: i32 = 2;
    pub const VERIFY_FAILED: i32 = 3;
    pub const BUDGET_EXCEEDED: i32 = 4;
    pub const UNREADABLE_INPUT: i32 = 5;
    pub const USAGE: i32 = 64;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input {
        path: PathBuf,
        source: std::io::Error,
    },
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    Budget(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Input { .. } => exit::UNREADABLE_INPUT,
            CliError::Budget(_) => exit::BUDGET_EXCEEDED,
            CliError::Output { .. } | CliError::Failed(_) => exit::ERROR,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Input { path, source } => {
                write!(f, "cannot read {}: {source}", path.display())
            }
            CliError::Output { path, source } => {
                write!(f, "cannot write {}: {source}", path.display())
            }
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
            CliError::Failed(m) => f.write_str(m),
        }
    }
}

impl From<MetricError> for CliError {
    fn from(e: MetricError) -> Self {
        match e {
            MetricError::Io { path, source } => CliError::Input { path, source },
            MetricError::UnsupportedBits(_)
            | MetricError::MissingCustomSource
            | MetricError::UnexpectedCustomSource
            | MetricError::UnknownMetric(_) => CliError::Usage(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::BudgetExceeded { .. } | SolverError::OracleBudgetExceeded { .. } => {
                CliError::Budget(e.to_string())
            }
            SolverError::InvalidRange(_) | SolverError::ZeroFeFets => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<EncoderError> for CliError {
    fn from(e: EncoderError) -> Self {
        CliError::Failed(e.to_string())
    }
}

impl From<ArrayError> for CliError {
    fn from(e: ArrayError) -> Self {
        match e {
            ArrayError::Encoder(inner) => inner.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<AppError> for CliError {
    fn from(e: AppError) -> Self {
        match e {
            AppError::Io { path, source } => CliError::Input { path, source },
            AppError::Metric(m) => m.into(),
            AppError::Solver(s) => s.into(),
            AppError::Array(a) => a.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}
