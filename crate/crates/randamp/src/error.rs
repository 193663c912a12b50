use std::path::PathBuf;

/// Errors reported by this crate.
///
/// These are contract violations and environment failures. A statistically
/// unsuccessful protocol run is *not* an error; it is reported through
/// [`crate::protocol::Outcome::Aborted`].
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bit string lengths differ: {left} vs {right}")]
    LengthMismatch { left: u64, right: u64 },

    #[error("bit range [{start}, {start}+{len}) out of bounds for string of length {length}")]
    RangeOutOfBounds { start: u64, len: u64, length: u64 },

    #[error("bit string too long: {len} bits exceeds the 2^32 limit")]
    TooLong { len: u64 },

    #[error("parameter {name} out of range: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{n} is not an Artin prime (2 must be a primitive root modulo the block length)")]
    NotArtinPrime { n: u64 },

    #[error("failed to factor {n} while testing the order of 2")]
    FactoringFailed { n: u64 },

    #[error("no Artin prime found in [{start}, {limit})")]
    SearchBoundExceeded { start: u64, limit: u64 },

    #[error("no transform plan for block length {n}: {reason}")]
    PlanUnavailable { n: u64, reason: String },

    #[error("setting (x,y,z)=({x},{y},{z}) was never observed; every input triple must occur at least once")]
    MissingSetting { x: u8, y: u8, z: u8 },

    #[error("replayed inputs disagree with the recorded log at round {round}: log has ({lx},{ly},{lz}), oracle produced ({ox},{oy},{oz})")]
    ReplayInputMismatch { round: u64, lx: u8, ly: u8, lz: u8, ox: u8, oy: u8, oz: u8 },

    #[error("bit source exhausted after {consumed} bits; {requested} more requested")]
    SourceExhausted { consumed: u64, requested: u64 },

    #[error("nonce {nonce} was already used by an aborted run; aborted configurations must not be re-run verbatim")]
    NonceReused { nonce: u64 },

    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: PathBuf, reason: String },

    #[error("certificate field {field} is malformed: {reason}")]
    MalformedCertificate { field: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    pub(crate) fn corrupt(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::CorruptFile { path: path.into(), reason: reason.into() }
    }
}
