//! Iterative radix-2 FFT in 64-bit floats, with precomputed twiddle
//! factors so repeated frames of the same length reuse one plan.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods cover std builds
use num_traits::Float;

use crate::error::{CoreError, Result};

pub struct Fft {
    n: usize,
    /// e^(-2*pi*i*k/n) for k in 0..n/2.
    twiddle_re: Vec<f64>,
    twiddle_im: Vec<f64>,
    /// Bit-reversal permutation of 0..n.
    rev: Vec<u32>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(CoreError::Config(format!(
                "FFT length {} is not a power of two >= 2",
                n
            )));
        }
        let half = n / 2;
        let mut twiddle_re = Vec::with_capacity(half);
        let mut twiddle_im = Vec::with_capacity(half);
        for k in 0..half {
            let angle = -2.0 * core::f64::consts::PI * k as f64 / n as f64;
            twiddle_re.push(angle.cos());
            twiddle_im.push(angle.sin());
        }
        let bits = n.trailing_zeros();
        let rev = (0..n as u32)
            .map(|i| i.reverse_bits() >> (32 - bits))
            .collect();
        Ok(Fft {
            n,
            twiddle_re,
            twiddle_im,
            rev,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// In-place forward transform of a complex signal.
    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) -> Result<()> {
        if re.len() != self.n || im.len() != self.n {
            return Err(CoreError::Shape(format!(
                "FFT buffers have lengths {}/{}, plan expects {}",
                re.len(),
                im.len(),
                self.n
            )));
        }
        for i in 0..self.n {
            let j = self.rev[i] as usize;
            if j > i {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.n {
            let half = len / 2;
            let step = self.n / len;
            for start in (0..self.n).step_by(len) {
                let mut tw = 0;
                for i in start..start + half {
                    let j = i + half;
                    let wr = self.twiddle_re[tw];
                    let wi = self.twiddle_im[tw];
                    let xr = re[j] * wr - im[j] * wi;
                    let xi = re[j] * wi + im[j] * wr;
                    re[j] = re[i] - xr;
                    im[j] = im[i] - xi;
                    re[i] += xr;
                    im[i] += xi;
                    tw += step;
                }
            }
            len *= 2;
        }
        Ok(())
    }

    /// Magnitude spectrum of a real signal: n/2 + 1 values covering
    /// 0 Hz through Nyquist.
    pub fn real_magnitude(&self, frame: &[f64]) -> Result<Vec<f64>> {
        if frame.len() != self.n {
            return Err(CoreError::Shape(format!(
                "frame has {} samples, FFT plan expects {}",
                frame.len(),
                self.n
            )));
        }
        let mut re = frame.to_vec();
        let mut im = vec![0.0; self.n];
        self.forward(&mut re, &mut im)?;
        Ok((0..=self.n / 2)
            .map(|k| (re[k] * re[k] + im[k] * im[k]).sqrt())
            .collect())
    }
}
