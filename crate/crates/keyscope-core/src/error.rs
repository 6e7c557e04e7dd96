//! Error type shared by all core modules.

use alloc::string::String;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    /// Tensor or layer shapes do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// Invalid configuration value (frequencies, ratios, probabilities...).
    #[error("configuration error: {0}")]
    Config(String),

    /// A value outside its documented range (e.g. pitch shift semitones).
    #[error("range error: {0}")]
    Range(String),

    /// A key label string that does not match the label grammar.
    #[error("label error: cannot parse key label {0:?}")]
    Label(String),

    /// Input audio shorter than one analysis frame.
    #[error("too short: clip has {got} samples, need at least {need}")]
    TooShort { got: usize, need: usize },

    /// Sample rates other than 44100 Hz are rejected outright.
    #[error("resample unsupported: got {0} Hz, expected 44100 Hz")]
    ResampleUnsupported(u32),

    /// Dataset-level problem (duplicate ids, missing features...).
    #[error("data error: {0}")]
    Data(String),

    /// Training diverged; carries where it happened.
    #[error("non-finite loss at epoch {epoch}, batch {batch} (lr {lr})")]
    NonFiniteLoss { epoch: usize, batch: usize, lr: f64 },

    /// Malformed serialized model state.
    #[error("load error: {0}")]
    Load(String),
}

pub type Result<T> = core::result::Result<T, CoreError>;
