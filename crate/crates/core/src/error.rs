use std::io;

use thiserror::Error;

use crate::dictionary::FormatError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("NaN in input vector; rank order is undefined")]
    NanInput,

    #[error("code {code} out of range for subsample size {m}")]
    CodeOutOfRange { code: u16, m: usize },

    #[error("dictionary smaller than K ({frames} frames, K = {k})")]
    DictionaryTooSmall { frames: usize, k: usize },

    #[error("sample rate mismatch: expected {expected} Hz, got {got} Hz")]
    SampleRateMismatch { expected: u32, got: u32 },

    #[error("zero-energy signal: {0}")]
    ZeroEnergy(&'static str),

    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("unsupported WAV: {0}")]
    UnsupportedWav(String),

    #[error(transparent)]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error(transparent)]
    Io(#[from] io::Error),
}
