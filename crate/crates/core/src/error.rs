use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for {n} qubits")]
    QubitOutOfRange { index: usize, n: usize },

    #[error("qubit count {n} outside supported range [{min}, {max}]")]
    QubitCountUnsupported { n: usize, min: usize, max: usize },

    #[error("{gate} gate has no angle source (needs a bound angle or a parameter id)")]
    MissingAngle { gate: &'static str },

    #[error("{gate} gate cannot carry an angle")]
    UnexpectedAngle { gate: &'static str },

    #[error("{gate} gate requires a control qubit distinct from its target")]
    BadControl { gate: &'static str },

    #[error("parameter ids are not contiguous: id {missing} unused below count {count}")]
    ParamIdGap { missing: usize, count: usize },

    #[error("expected {expected} parameters, got {got}")]
    ParamCountMismatch { expected: usize, got: usize },

    #[error("vector length {got} does not match expected {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("operation requires a fully bound circuit but {count} gate(s) reference parameters")]
    UnboundParams { count: usize },

    #[error("shot count must be positive")]
    ZeroShots,

    #[error("fold factor {factor} must be odd and positive")]
    BadFoldFactor { factor: u64 },

    #[error("extrapolation needs at least two distinct fold factors")]
    DegenerateFit,

    #[error("sequence is empty")]
    EmptySequence,

    #[error("unknown residue '{token}'")]
    UnknownToken { token: char },

    #[error("{path}:{line}: {message}")]
    DataFormat {
        path: String,
        line: usize,
        message: String,
    },

    #[error("dataset has {got} record(s), need at least {needed}")]
    DatasetTooSmall { got: usize, needed: usize },

    #[error("strong fraction {actual:.4} already at or above target {target:.4}; nothing to downsample")]
    AlreadyBalanced { actual: f64, target: f64 },

    #[error("target strong fraction {value} must lie in (0, 1)")]
    BadTargetFraction { value: f64 },

    #[error("empty batch")]
    EmptyBatch,

    #[error("score {value} outside [0, 1]")]
    ScoreOutOfRange { value: f64 },

    #[error("non-finite loss at restart {restart}, epoch {epoch}")]
    NonFiniteLoss { restart: usize, epoch: usize },

    #[error("model has no {what}")]
    ModelShape { what: String },

    #[error("attribution step/permutation count must be positive")]
    ZeroSamples,

    #[error("no length-9 sequences to aggregate")]
    NoLengthNine,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("checkpoint: {0}")]
    Checkpoint(#[from] serde_json::Error),
}
