use std::path::PathBuf;

use crate::relax::TraceEntry;

/// Errors raised by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("sample count mismatch: grid holds {expected} samples, got {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("axis {axis} out of range for rank {rank}")]
    InvalidAxis { axis: usize, rank: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("operation expects the {expected} model, got {found}")]
    ModelMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("direction must have zero mean (mean = {mean:e})")]
    NonzeroMean { mean: f64 },

    #[error("unsupported potential: {0}")]
    UnsupportedPotential(String),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("uniform state is unstable (margin {margin}); the optimal constant is not defined there")]
    UnstableRegime { margin: f64 },

    #[error("estimation failed after {restarts} restarts: {detail}")]
    EstimationFailed { restarts: usize, detail: String },

    #[error("flow stalled after {} accepted steps: time step fell below {min_dt:e}", trace.len())]
    StalledFlow { trace: Vec<TraceEntry>, min_dt: f64 },

    #[error("alpha = {alpha} is resonant with the in-plane lattice at L = {length}")]
    Resonance { alpha: f64, length: f64 },

    #[error("verdicts are not monotone in a at m = {m}: {detail}")]
    NonMonotone { m: f64, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed field file: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures (as opposed to bad input) map to a distinct exit status in the CLI.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EstimationFailed { .. } | Error::StalledFlow { .. } | Error::NonMonotone { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
