//! Audio frontend: PCM clips, the log-frequency filterbank, and the
//! log-magnitude spectrogram with pitch-shift augmentation.

pub mod fft;
mod filterbank;
mod spectrogram;

pub use filterbank::{build_filterbank, FilterBank, FilterBankParams};
pub use spectrogram::{
    compute_spectrogram, frame_count, shift_pitch, LogFreqSpectrogram, BINS_PER_SEMITONE,
    FRAME_RATE, FRAME_SIZE, HOP_SIZE, SHIFT_MAX, SHIFT_MIN,
};

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods cover std builds
use num_traits::Float;

use crate::error::{CoreError, Result};

pub const SAMPLE_RATE: u32 = 44100;

/// Mono PCM audio at exactly 44100 Hz, amplitudes in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    /// Wrap samples, enforcing the fixed 44100 Hz rate. Other rates
    /// are rejected rather than resampled.
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(CoreError::ResampleUnsupported(sample_rate));
        }
        if samples.is_empty() {
            return Err(CoreError::Data("audio clip has no samples".into()));
        }
        Ok(AudioClip {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Cut out `[offset_s, offset_s + duration_s)`, clamped to the
    /// clip's end. `duration_s = 0` means everything after the offset.
    pub fn segment(&self, offset_s: f64, duration_s: f64) -> Result<AudioClip> {
        if offset_s < 0.0 || duration_s < 0.0 {
            return Err(CoreError::Range(format!(
                "negative segment bounds: offset {} duration {}",
                offset_s, duration_s
            )));
        }
        let start = (offset_s * self.sample_rate as f64).round() as usize;
        if start >= self.samples.len() {
            return Err(CoreError::Data(format!(
                "segment offset {} s is past the end of a {:.2} s clip",
                offset_s,
                self.duration_s()
            )));
        }
        let end = if duration_s == 0.0 {
            self.samples.len()
        } else {
            let want = (duration_s * self.sample_rate as f64).round() as usize;
            (start + want).min(self.samples.len())
        };
        AudioClip::new(self.samples[start..end].to_vec(), self.sample_rate)
    }
}
