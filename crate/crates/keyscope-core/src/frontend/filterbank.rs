//! Triangular filterbank mapping FFT magnitude bins onto a
//! logarithmic frequency axis with a fixed number of bins per octave.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods cover std builds
use num_traits::Float;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterBankParams {
    pub f_min: f64,
    pub f_max: f64,
    pub bins_per_octave: usize,
    pub n_fft: usize,
    pub sample_rate: f64,
}

impl Default for FilterBankParams {
    fn default() -> Self {
        FilterBankParams {
            f_min: 65.0,
            f_max: 2100.0,
            bins_per_octave: 24,
            n_fft: 8192,
            sample_rate: 44_100.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    n_fft: usize,
    sample_rate: f64,
    centers: Vec<f64>,
    /// Per log-frequency bin: sparse (FFT bin, weight) pairs.
    weights: Vec<Vec<(usize, f64)>>,
}

/// Build the triangular filterbank.
///
/// Centers follow f_k = f_min * 2^(k / bins_per_octave) for as many k
/// as stay at or below f_max. Each triangle rises from the previous
/// center to a peak of 1 at its own center and falls to the next
/// center, extrapolating virtual neighbours at the edges. Where the
/// FFT grid is too coarse to land inside a narrow triangle, the
/// nearest FFT bin stands in with weight 1 so no row is empty.
pub fn build_filterbank(params: FilterBankParams) -> Result<FilterBank> {
    let FilterBankParams {
        f_min,
        f_max,
        bins_per_octave,
        n_fft,
        sample_rate,
    } = params;
    if !(f_min > 0.0 && f_min < f_max && f_max < sample_rate / 2.0) {
        return Err(CoreError::Config(format!(
            "need 0 < f_min < f_max < Nyquist, got {} / {} / {}",
            f_min,
            f_max,
            sample_rate / 2.0
        )));
    }
    if bins_per_octave == 0 || n_fft < 2 {
        return Err(CoreError::Config(
            "bins_per_octave and n_fft must be positive".into(),
        ));
    }
    let n_bins = ((f_max / f_min).log2() * bins_per_octave as f64).floor() as usize + 1;
    let center = |k: i64| f_min * 2f64.powf(k as f64 / bins_per_octave as f64);
    let centers: Vec<f64> = (0..n_bins as i64).map(center).collect();

    let bin_hz = sample_rate / n_fft as f64;
    let n_mag = n_fft / 2 + 1;
    let mut weights = Vec::with_capacity(n_bins);
    for k in 0..n_bins as i64 {
        let lo = center(k - 1);
        let mid = center(k);
        let hi = center(k + 1);
        let mut row: Vec<(usize, f64)> = Vec::new();
        let first = (lo / bin_hz).ceil() as usize;
        let last = ((hi / bin_hz).floor() as usize).min(n_mag - 1);
        for i in first..=last.min(n_mag - 1) {
            let f = i as f64 * bin_hz;
            let w = if f <= mid {
                (f - lo) / (mid - lo)
            } else {
                (hi - f) / (hi - mid)
            };
            if w > 0.0 {
                row.push((i, w));
            }
        }
        if row.is_empty() {
            let nearest = (mid / bin_hz).round() as usize;
            row.push((nearest.min(n_mag - 1), 1.0));
        }
        weights.push(row);
    }
    Ok(FilterBank {
        n_fft,
        sample_rate,
        centers,
        weights,
    })
}

impl FilterBank {
    pub fn n_bins(&self) -> usize {
        self.centers.len()
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Project an FFT magnitude spectrum (n_fft/2 + 1 values) onto the
    /// log-frequency bins.
    pub fn project(&self, magnitudes: &[f64]) -> Result<Vec<f64>> {
        let want = self.n_fft / 2 + 1;
        if magnitudes.len() != want {
            return Err(CoreError::Shape(format!(
                "magnitude spectrum has {} bins, filterbank expects {}",
                magnitudes.len(),
                want
            )));
        }
        Ok(self
            .weights
            .iter()
            .map(|row| row.iter().map(|&(i, w)| magnitudes[i] * w).sum())
            .collect())
    }
}
