//! Core engine for musical key classification.
//!
//! Everything in this crate is pure computation over in-memory data: the
//! log-frequency spectrogram frontend, a small CNN engine with reverse-mode
//! gradients for the two key-classification architectures, snippet-based
//! training, and MIREX-style evaluation. File formats, audio decoding and
//! the command line live in the companion `keyscope` crate.
//!
//! The crate is `no_std` (with `alloc`), so the classifier can run in
//! embedded or sandboxed hosts; enable the `std` feature to use the
//! platform float intrinsics instead of `libm`.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod dataset;
pub mod duration;
pub mod error;
pub mod frontend;
pub mod key;
pub mod mirex;
pub mod model;
pub mod ops;
pub mod optim;
pub mod rng;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::CoreError;
pub use frontend::{AudioClip, FilterBank, LogFreqSpectrogram};
pub use key::{KeyLabel, Mode};
pub use mirex::{classify_relation, score, RelationCategory, ScoreBreakdown};
pub use model::{ArchitectureConfig, ArchitectureKind, Model, ModelState, Prediction};
pub use rng::RngStream;
pub use tensor::Tensor;
pub use train::{fit, FitOutcome, FitReport, TrainConfig, TrainItem};

/// Number of key classes: 12 tonics for each of the two modes.
pub const N_CLASSES: usize = 24;
