//! Error type shared across the crate.

use thiserror::Error;

/// Convenience alias used by every fallible operation in this crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A file header failed structural validation (bad magic, version, or field values).
    #[error("malformed header: {0}")]
    MalformedHeader(String),

    /// A file ended before the payload its header promised.
    #[error("truncated payload: expected {expected} more byte(s) in {context}")]
    TruncatedPayload { context: String, expected: u64 },

    /// A sample exceeds the representable range of the declared bit depth.
    #[error("sample {value} exceeds 2^{bit_depth} - 1")]
    DepthOverflow { value: u16, bit_depth: u16 },

    /// Underlying I/O failure.
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),

    /// Bit depths disagree where they must match (stack homogeneity, pgm8 export).
    #[error("bit depth mismatch: {0}")]
    DepthMismatch(String),

    /// Dimensions disagree where they must match.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A calibration reference stack holds fewer frames than required.
    #[error("too few frames: {got} given, {needed} required")]
    TooFewFrames { got: usize, needed: usize },

    /// Bad-pixel fraction at or above the usability limit.
    #[error("too many bad pixels: {flagged} of {total} ({percent:.2}%) flagged, sensor unusable")]
    TooManyBadPixels {
        flagged: usize,
        total: usize,
        percent: f64,
    },

    /// Shutterless calibration with ambient references closer than 1 degree C.
    #[error("degenerate ambient spacing: |{t_amb_2} - {t_amb_1}| < 1 degree C")]
    DegenerateAmbient { t_amb_1: f64, t_amb_2: f64 },

    /// A temporal-denoise state was reused with different parameters.
    #[error("temporal denoise state parameters do not match call parameters")]
    StateParamMismatch,

    /// A pipeline or file configuration is structurally invalid.
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    /// A frame stack must hold at least one frame.
    #[error("empty frame stack")]
    EmptyStack,

    /// A value violates a documented parameter or type invariant.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}
