use std::path::PathBuf;

/// Errors raised anywhere in the transmit, channel or receive chain.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol {0} does not carry cell-specific reference signals")]
    NotPilotSymbol(usize),

    #[error("incomplete pilot lattice: expected {expected} pilots, found {found}")]
    IncompleteLattice { expected: usize, found: usize },

    #[error("stream too short: need {needed} samples, have {available}")]
    StreamTooShort { needed: usize, available: usize },

    #[error("timing sync failed: peak-to-median ratio {ratio:.2} below {threshold:.2}")]
    SyncFailure { ratio: f64, threshold: f64 },

    #[error("no packet found: sync metric {metric:.2} below {threshold:.2}")]
    NoPacket { metric: f64, threshold: f64 },

    #[error("packet extends past the end of the series ({needed} > {available} samples)")]
    PacketTruncated { needed: usize, available: usize },

    #[error("no off-packet samples available for a noise reference")]
    NoNoiseReference,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("malformed IQ file {path}: {len} bytes, partial sample record at byte offset {offset}")]
    MalformedIq {
        path: PathBuf,
        len: u64,
        offset: u64,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
