use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("input space too large: 2^{inputs} patterns x {outputs} outputs exceeds cap {cap}")]
    InputSpaceTooLarge {
        inputs: usize,
        outputs: usize,
        cap: u64,
    },

    #[error("bit length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("task dimensions (I={task_i}, O={task_o}) do not match network (I={net_i}, O={net_o})")]
    TaskDimMismatch {
        task_i: usize,
        task_o: usize,
        net_i: usize,
        net_o: usize,
    },

    #[error("empty pattern sample")]
    EmptySample,

    #[error("sample size {m} exceeds input space size {m_prime}")]
    SampleTooLarge { m: u64, m_prime: u64 },

    #[error("genome decode failed: {0}")]
    Decode(String),

    #[error("network text format: {0}")]
    TextFormat(String),

    #[error("empty run list")]
    EmptyRunList,

    #[error("cumulative measure needs at least 2 defined points, got {0}")]
    TooFewPoints(usize),

    #[error("power-law fit: {0}")]
    Fit(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("resume mismatch: {0}")]
    ResumeMismatch(String),

    #[error("figure data: {0}")]
    Figure(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code this error maps to in the CLI: 2 for validation
    /// problems, 3 for resume mismatches, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResumeMismatch(_) => 3,
            Error::InvalidConfig(_)
            | Error::InvalidSpec(_)
            | Error::Figure(_)
            | Error::SampleTooLarge { .. }
            | Error::TaskDimMismatch { .. } => 2,
            _ => 1,
        }
    }
}
