//! Host-side companion to `keyscope-core`: WAV decoding, feature
//! caches, model checkpoints, manifests, report writers and the
//! command-line front end.

pub mod error;

pub use error::{AppError, Result};

/// Entry point shared by the binary; returns the process exit code.
pub fn run() -> i32 {
    0
}
