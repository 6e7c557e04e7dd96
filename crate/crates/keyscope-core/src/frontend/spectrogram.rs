//! The log-magnitude log-frequency spectrogram and its pitch-shift
//! augmentation.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods cover std builds
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::frontend::fft::Fft;
use crate::frontend::{AudioClip, FilterBank};
use crate::tensor::Tensor;

pub const FRAME_SIZE: usize = 8192;
/// 44100 samples/s divided by 5 frames/s.
pub const HOP_SIZE: usize = 8820;
pub const FRAME_RATE: f64 = 5.0;
/// Augmentation range in semitones.
pub const SHIFT_MIN: i32 = -4;
pub const SHIFT_MAX: i32 = 7;
/// 24 bins per octave puts two bins on every semitone.
pub const BINS_PER_SEMITONE: usize = 2;

/// Frames-by-bins matrix of log(1 + magnitude) values, 5 frames/s.
#[derive(Debug, Clone, PartialEq)]
pub struct LogFreqSpectrogram {
    /// Time-major: frame t occupies `values[t*n_bins .. (t+1)*n_bins]`.
    pub values: Vec<f32>,
    pub n_frames: usize,
    pub n_bins: usize,
}

impl LogFreqSpectrogram {
    pub fn from_values(values: Vec<f32>, n_frames: usize, n_bins: usize) -> Result<Self> {
        if n_frames == 0 || n_bins == 0 || values.len() != n_frames * n_bins {
            return Err(CoreError::Shape(format!(
                "{} values cannot form a {}x{} spectrogram",
                values.len(),
                n_frames,
                n_bins
            )));
        }
        Ok(LogFreqSpectrogram {
            values,
            n_frames,
            n_bins,
        })
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.values[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn frame_rate(&self) -> f64 {
        FRAME_RATE
    }

    /// Network input layout: batch 1, channel 1, frequency as height,
    /// time as width.
    pub fn to_input_tensor(&self) -> Tensor<f32> {
        let mut data = Vec::with_capacity(self.values.len());
        for bin in 0..self.n_bins {
            for t in 0..self.n_frames {
                data.push(self.values[t * self.n_bins + bin]);
            }
        }
        Tensor::from_vec(&[1, 1, self.n_bins, self.n_frames], data).unwrap()
    }
}

/// Number of full analysis frames in a clip of `n_samples` samples,
/// or `None` when not even one frame fits.
pub fn frame_count(n_samples: usize) -> Option<usize> {
    if n_samples < FRAME_SIZE {
        return None;
    }
    Some((n_samples - FRAME_SIZE) / HOP_SIZE + 1)
}

/// Compute the spectrogram: Hann-windowed 8192-sample frames every
/// 8820 samples, real-FFT magnitudes projected through the filterbank,
/// then log(1 + x) compression.
pub fn compute_spectrogram(clip: &AudioClip, fb: &FilterBank) -> Result<LogFreqSpectrogram> {
    if fb.n_fft() != FRAME_SIZE {
        return Err(CoreError::Config(format!(
            "filterbank FFT length {} does not match the frame size {}",
            fb.n_fft(),
            FRAME_SIZE
        )));
    }
    let samples = clip.samples();
    let n_frames = frame_count(samples.len()).ok_or(CoreError::TooShort {
        got: samples.len(),
        need: FRAME_SIZE,
    })?;

    let fft = Fft::new(FRAME_SIZE)?;
    let window: Vec<f64> = (0..FRAME_SIZE)
        .map(|i| {
            0.5 * (1.0 - (2.0 * core::f64::consts::PI * i as f64 / FRAME_SIZE as f64).cos())
        })
        .collect();

    let n_bins = fb.n_bins();
    let mut values = Vec::with_capacity(n_frames * n_bins);
    let mut frame = alloc::vec![0.0f64; FRAME_SIZE];
    for t in 0..n_frames {
        let start = t * HOP_SIZE;
        for (i, slot) in frame.iter_mut().enumerate() {
            *slot = samples[start + i] * window[i];
        }
        let mags = fft.real_magnitude(&frame)?;
        let projected = fb.project(&mags)?;
        values.extend(projected.iter().map(|&v| v.ln_1p() as f32));
    }
    LogFreqSpectrogram::from_values(values, n_frames, n_bins)
}

/// Translate the spectrogram along the frequency axis by whole
/// semitones (two bins each), zero-filling the vacated edge. The
/// label moves with it: shift by +s pairs with transposing the tonic
/// up by s.
pub fn shift_pitch(spec: &LogFreqSpectrogram, semitones: i32) -> Result<LogFreqSpectrogram> {
    if !(SHIFT_MIN..=SHIFT_MAX).contains(&semitones) {
        return Err(CoreError::Range(format!(
            "pitch shift {} outside [{}, {}]",
            semitones, SHIFT_MIN, SHIFT_MAX
        )));
    }
    let delta = semitones as i64 * BINS_PER_SEMITONE as i64;
    if delta.unsigned_abs() as usize >= spec.n_bins {
        return Err(CoreError::Range(format!(
            "shift of {} bins exceeds the {}-bin axis",
            delta, spec.n_bins
        )));
    }
    let mut values = alloc::vec![0.0f32; spec.values.len()];
    let n_bins = spec.n_bins as i64;
    for t in 0..spec.n_frames {
        let row = t * spec.n_bins;
        for k in 0..n_bins {
            let src = k - delta;
            if (0..n_bins).contains(&src) {
                values[row + k as usize] = spec.values[row + src as usize];
            }
        }
    }
    LogFreqSpectrogram::from_values(values, spec.n_frames, spec.n_bins)
}
