//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by signal construction, tag transforms and the sweep harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sample rate must be positive, got {0} Hz")]
    BadSampleRate(f64),

    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },

    #[error("frequency {freq_hz} Hz is at or beyond Nyquist ({nyquist_hz} Hz); it would alias")]
    Aliasing { freq_hz: f64, nyquist_hz: f64 },

    #[error("operation requires a non-empty buffer")]
    EmptyBuffer,

    #[error("buffer too short: {required} samples required, {actual} available")]
    BufferTooShort { required: usize, actual: usize },

    #[error("sample rate mismatch: {left} Hz vs {right} Hz")]
    RateMismatch { left: f64, right: f64 },

    #[error("buffer length mismatch: {left} vs {right} samples")]
    LengthMismatch { left: usize, right: usize },

    #[error("bit value {value} at index {index} is not 0 or 1")]
    BadBit { value: u8, index: usize },

    #[error("operation requires a non-empty bit stream")]
    EmptyBitStream,

    #[error("{bits} bits cannot be grouped into symbols of {per_symbol} bits")]
    BitGrouping { bits: usize, per_symbol: usize },

    #[error("bit count {0} is odd; I/Q mapping needs an even count")]
    OddBitCount(usize),

    #[error("reflection denominator Z_T + Z_A is degenerate (magnitude {magnitude})")]
    DegenerateDenominator { magnitude: f64 },

    #[error("antenna resistance must be positive, got {0} ohm")]
    BadAntennaResistance(f64),

    #[error("|gamma| = {0} exceeds 1; a passive tag cannot amplify")]
    ReflectionGain(f64),

    #[error("phase index k = {k} out of range for M = {m}")]
    PhaseIndex { k: usize, m: usize },

    #[error("tag profile start offset is unresolved; resolve the random offset before embedding")]
    OffsetUnresolved,

    #[error("decode window overrun: {required} bits required from offset, {available} available")]
    WindowOverrun { required: usize, available: usize },

    #[error("offset sync failed: best agreement {best:.3} below floor {floor:.3}")]
    SyncFailure { best: f64, floor: f64 },

    #[error("no points to plot")]
    EmptyPoints,

    #[error("not a RWIQ file: {0}")]
    BadIqFile(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
