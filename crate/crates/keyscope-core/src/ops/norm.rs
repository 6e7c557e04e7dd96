//! Batch normalization over `(batch, height, width)` per channel.
//!
//! Train mode normalizes with batch statistics and folds them into the
//! running estimates; inference uses the running estimates only, so it is
//! deterministic and independent of batch composition.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods cover std builds
use num_traits::Float;
use super::Element;
use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

/// What the backward pass needs from a training-mode forward.
pub struct BnCache<T> {
    pub xhat: Tensor<T>,
    pub inv_std: Vec<T>,
}

fn check_channels<T: Element>(input: &Tensor<T>, gamma: &[T]) -> Result<(usize, usize, usize, usize)> {
    let (b, c, h, w) = input.dims4()?;
    if gamma.len() != c {
        return Err(CoreError::Shape(format!(
            "batchnorm: input has {} channels, state has {}",
            c,
            gamma.len()
        )));
    }
    Ok((b, c, h, w))
}

#[allow(clippy::too_many_arguments)]
pub fn batchnorm_train<T: Element>(
    input: &Tensor<T>,
    gamma: &[T],
    beta: &[T],
    running_mean: &mut [T],
    running_var: &mut [T],
    momentum: f64,
    eps: f64,
) -> Result<(Tensor<T>, BnCache<T>)> {
    let (b, c, h, w) = check_channels(input, gamma)?;
    let plane = h * w;
    let m = (b * plane) as f64;

    let mut out = Tensor::zeros(input.shape());
    let mut xhat = Tensor::zeros(input.shape());
    let mut inv_std = vec![T::zero(); c];

    let x = input.data();
    for ch in 0..c {
        let mut sum = 0.0f64;
        let mut sq = 0.0f64;
        for ib in 0..b {
            let p = &x[(ib * c + ch) * plane..][..plane];
            for &v in p {
                let v = v.to_f64().unwrap();
                sum += v;
                sq += v * v;
            }
        }
        let mean = sum / m;
        let var = (sq / m - mean * mean).max(0.0);
        let istd = 1.0 / (var + eps).sqrt();

        running_mean[ch] = T::from(
            (1.0 - momentum) * running_mean[ch].to_f64().unwrap() + momentum * mean,
        )
        .unwrap();
        running_var[ch] =
            T::from((1.0 - momentum) * running_var[ch].to_f64().unwrap() + momentum * var).unwrap();

        let mean_t = T::from(mean).unwrap();
        let istd_t = T::from(istd).unwrap();
        inv_std[ch] = istd_t;
        let g = gamma[ch];
        let bt = beta[ch];
        for ib in 0..b {
            let src = &x[(ib * c + ch) * plane..][..plane];
            let xh = &mut xhat.data_mut()[(ib * c + ch) * plane..][..plane];
            for (o, &v) in xh.iter_mut().zip(src) {
                *o = (v - mean_t) * istd_t;
            }
        }
        for ib in 0..b {
            let off = (ib * c + ch) * plane;
            for i in 0..plane {
                let xh = xhat.data()[off + i];
                out.data_mut()[off + i] = g * xh + bt;
            }
        }
    }
    Ok((out, BnCache { xhat, inv_std }))
}

pub fn batchnorm_infer<T: Element>(
    input: &Tensor<T>,
    gamma: &[T],
    beta: &[T],
    running_mean: &[T],
    running_var: &[T],
    eps: f64,
) -> Result<Tensor<T>> {
    let (b, c, h, w) = check_channels(input, gamma)?;
    let plane = h * w;
    let mut out = Tensor::zeros(input.shape());
    let x = input.data();
    let y = out.data_mut();
    for ch in 0..c {
        let istd = T::from(1.0 / (running_var[ch].to_f64().unwrap() + eps).sqrt()).unwrap();
        let mean = running_mean[ch];
        let g = gamma[ch];
        let bt = beta[ch];
        for ib in 0..b {
            let off = (ib * c + ch) * plane;
            let src = &x[off..][..plane];
            let dst = &mut y[off..][..plane];
            for (o, &v) in dst.iter_mut().zip(src) {
                *o = g * (v - mean) * istd + bt;
            }
        }
    }
    Ok(out)
}

/// Backward through the training-mode normalization (batch statistics are
/// part of the differentiated function).
pub fn batchnorm_backward<T: Element>(
    cache: &BnCache<T>,
    gamma: &[T],
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Vec<T>, Vec<T>)> {
    let (b, c, h, w) = check_channels(grad_out, gamma)?;
    if cache.xhat.shape() != grad_out.shape() {
        return Err(CoreError::Shape(format!(
            "batchnorm backward: cache shape {:?} vs gradient {:?}",
            cache.xhat.shape(),
            grad_out.shape()
        )));
    }
    let plane = h * w;
    let m = (b * plane) as f64;

    let mut grad_in = Tensor::zeros(grad_out.shape());
    let mut grad_gamma = vec![T::zero(); c];
    let mut grad_beta = vec![T::zero(); c];

    let g = grad_out.data();
    let xh = cache.xhat.data();
    for ch in 0..c {
        // reductions over the channel
        let mut sum_g = 0.0f64;
        let mut sum_gx = 0.0f64;
        for ib in 0..b {
            let off = (ib * c + ch) * plane;
            for i in 0..plane {
                let gv = g[off + i].to_f64().unwrap();
                sum_g += gv;
                sum_gx += gv * xh[off + i].to_f64().unwrap();
            }
        }
        grad_beta[ch] = T::from(sum_g).unwrap();
        grad_gamma[ch] = T::from(sum_gx).unwrap();

        let gam = gamma[ch].to_f64().unwrap();
        let istd = cache.inv_std[ch].to_f64().unwrap();
        let k = gam * istd;
        let mean_g = sum_g / m;
        let mean_gx = sum_gx / m;
        let gi = grad_in.data_mut();
        for ib in 0..b {
            let off = (ib * c + ch) * plane;
            for i in 0..plane {
                let gv = g[off + i].to_f64().unwrap();
                let xv = xh[off + i].to_f64().unwrap();
                gi[off + i] = T::from(k * (gv - mean_g - xv * mean_gx)).unwrap();
            }
        }
    }
    Ok((grad_in, grad_gamma, grad_beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn standardized_input() -> Tensor<f64> {
        // two channels, each already zero-mean unit-variance
        let mut rng = RngStream::new(11);
        let mut t = Tensor::zeros(&[2, 2, 3, 4]);
        let plane = 12;
        for ch in 0..2 {
            let mut vals = vec![0.0f64; 2 * plane];
            for v in vals.iter_mut() {
                *v = rng.next_f64() - 0.5;
            }
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64;
            let s = var.sqrt();
            for v in vals.iter_mut() {
                *v = (*v - m) / s;
            }
            for ib in 0..2 {
                for i in 0..plane {
                    t.data_mut()[(ib * 2 + ch) * plane + i] = vals[ib * plane + i];
                }
            }
        }
        t
    }

    #[test]
    fn standardized_input_passes_through() {
        let x = standardized_input();
        let gamma = vec![1.0; 2];
        let beta = vec![0.0; 2];
        let mut rm = vec![0.0; 2];
        let mut rv = vec![1.0; 2];
        let (y, _) = batchnorm_train(&x, &gamma, &beta, &mut rm, &mut rv, 0.1, 1e-5).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn affine_params_apply() {
        let x = standardized_input();
        let gamma = vec![2.0; 2];
        let beta = vec![3.0; 2];
        let mut rm = vec![0.0; 2];
        let mut rv = vec![1.0; 2];
        let (y, _) = batchnorm_train(&x, &gamma, &beta, &mut rm, &mut rv, 0.1, 1e-5).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - (2.0 * b + 3.0)).abs() < 5e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn infer_is_deterministic_and_pure() {
        let x = standardized_input();
        let gamma = vec![1.5; 2];
        let beta = vec![-0.5; 2];
        let rm = vec![0.1; 2];
        let rv = vec![0.9; 2];
        let a = batchnorm_infer(&x, &gamma, &beta, &rm, &rv, 1e-5).unwrap();
        let b = batchnorm_infer(&x, &gamma, &beta, &rm, &rv, 1e-5).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn fresh_state_infer_is_identity_scaled() {
        // initialized stats (mean 0, var 1) with gamma 1, beta 0: output ~ input
        let x = standardized_input();
        let y = batchnorm_infer(&x, &[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], &[1.0, 1.0], 0.0)
            .unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn running_stats_update_rule() {
        let x = Tensor::<f64>::filled(&[1, 1, 2, 2], 4.0);
        let mut rm = vec![0.0];
        let mut rv = vec![1.0];
        batchnorm_train(&x, &[1.0], &[0.0], &mut rm, &mut rv, 0.1, 1e-5).unwrap();
        // batch mean 4, batch var 0
        assert!((rm[0] - 0.4).abs() < 1e-12);
        assert!((rv[0] - 0.9).abs() < 1e-12);
    }
}
