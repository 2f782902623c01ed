use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("refinement diverged after {step} step(s); step size {eta} is not admissible")]
    Divergence { step: usize, eta: f64 },

    #[error("task `{task}`: {source}")]
    Task {
        task: String,
        #[source]
        source: Box<Error>,
    },

    #[error("pair ({0}, {1}): {2}")]
    Pair(String, String, #[source] Box<Error>),

    #[error("not a spanning tree: {0}")]
    NotSpanningTree(String),

    #[error("non-finite distance between {0} and {1}")]
    NonFiniteWeight(usize, usize),

    #[error(
        "infeasible budget: {budget} steps for {tasks} tasks (need at least one step per task)"
    )]
    InfeasibleBudget { budget: u64, tasks: usize },

    #[error("unknown metric `{0}`; valid metrics: {valid}", valid = crate::distances::Metric::NAMES.join(", "))]
    UnknownMetric(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn for_task(self, task: impl Into<String>) -> Self {
        Error::Task {
            task: task.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
