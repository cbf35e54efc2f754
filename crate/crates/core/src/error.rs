use thiserror::Error;

/// Errors produced by the certification library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet mismatch: {left} vs {right} tokens")]
    AlphabetMismatch { left: u32, right: u32 },
    #[error("token {token} out of range for alphabet of size {alphabet}")]
    TokenOutOfRange { token: u32, alphabet: u32 },
    #[error("alphabet size must be at least 1")]
    InvalidAlphabet,
    #[error("{name} = {value} is outside the open interval (0, 1)")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error("invalid chunk map: {0}")]
    InvalidChunkMap(String),
    #[error("sequence length {len} exceeds the exact-enumeration cap of {cap}")]
    LengthCapExceeded { len: usize, cap: usize },
    #[error("neighborhood lower bound {bound} exceeds the enumeration cap {cap}")]
    NeighborhoodCapExceeded { bound: String, cap: u64 },
    #[error("empty input sequence")]
    EmptyInput,
    #[error("edit op set must enable at least one of del/ins/sub")]
    EmptyOpSet,
    #[error("cannot parse edit op set from {0:?}")]
    BadOpSet(String),
    #[error("class index {class} out of range for {classes} classes")]
    ClassOutOfRange { class: usize, classes: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "inconsistent LCS-distance arguments: d_lcs {d_lcs} with lengths {len_x} and {len_xt}"
    )]
    InconsistentLcsArguments {
        d_lcs: usize,
        len_x: usize,
        len_xt: usize,
    },
    #[error("base classifier query failed at sample index {sample_index}: {source}")]
    QueryFailed {
        sample_index: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("model file error: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
