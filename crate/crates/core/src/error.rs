use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("missing {hand} trials for subject {subject}, stimulus {stimulus}")]
    MissingCell {
        subject: String,
        stimulus: i64,
        hand: &'static str,
    },

    #[error("ratio {ratio} falls in no declared bin")]
    Unbinned { ratio: f64 },

    #[error(
        "degenerate design for subject {subject}: need at least two distinct predictor values"
    )]
    DegenerateDesign { subject: String },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sampling failure: {0}")]
    Sampling(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unknown {kind} '{name}' (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
