use thiserror::Error;

/// Everything that can go wrong inside the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("state is not normalized: |a0|^2 + |a1|^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("key length T must be at least 1 (got {0})")]
    KeyLength(usize),

    #[error("precision exponent t must be in 1..={max} (got {got})")]
    Precision { got: u32, max: u32 },

    #[error("key index s = {index} out of range [0, 2^{precision})")]
    KeyIndex { index: u64, precision: u32 },

    #[error("message length {len} is invalid for a {key_len}-qubit register")]
    MessageLength { len: usize, key_len: usize },

    #[error("register has {got} qubits, expected {expected}")]
    RegisterLength { got: usize, expected: usize },

    #[error("copy count must be at least 1")]
    CopyCount,

    #[error("operation requires the classical description of the register, which this holder lacks")]
    NotOwner,

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("target arrival {target} s is earlier than the longest one-way light time {needed} s")]
    ArrivalTooEarly { target: f64, needed: f64 },

    #[error("causality violation: event emitted at {emit} s while processing time {now} s")]
    Causality { emit: f64, now: f64 },

    #[error("event has negative time {0} s")]
    NegativeTime(f64),

    #[error("unknown station `{0}`")]
    UnknownStation(String),

    #[error("log contains no challenge sent by `{0}`")]
    NoChallenge(String),

    #[error("invalid protocol configuration: {0}")]
    Config(String),

    #[error("unknown attack strategy `{name}` (known: {known})")]
    UnknownStrategy { name: String, known: String },

    #[error("invalid attack parameters: {0}")]
    AttackParams(String),

    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
