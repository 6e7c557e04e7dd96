//! Pooling: non-overlapping 2x2 max, global average, and time-axis average.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Element;
use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

/// 2x2 max pool with stride 2; odd trailing row/column dropped. Returns
/// the pooled tensor and, per output element, the flat input offset of
/// the maximum (first occurrence wins ties) for gradient routing.
pub fn maxpool2x2_forward<T: Element>(input: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let (b, c, h, w) = input.dims4()?;
    if h < 2 || w < 2 {
        return Err(CoreError::Shape(format!(
            "maxpool2x2: spatial extents {}x{} below 2x2",
            h, w
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[b, c, oh, ow]);
    let mut argmax = vec![0usize; b * c * oh * ow];
    let x = input.data();
    let y = out.data_mut();
    for p in 0..b * c {
        let in_off = p * h * w;
        let out_off = p * oh * ow;
        for r in 0..oh {
            for col in 0..ow {
                let base = in_off + (2 * r) * w + 2 * col;
                // row-major scan keeps the first max on ties
                let cand = [base, base + 1, base + w, base + w + 1];
                let mut best = cand[0];
                for &i in &cand[1..] {
                    if x[i] > x[best] {
                        best = i;
                    }
                }
                y[out_off + r * ow + col] = x[best];
                argmax[out_off + r * ow + col] = best;
            }
        }
    }
    Ok((out, argmax))
}

pub fn maxpool2x2_backward<T: Element>(
    input_shape: &[usize],
    argmax: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    if argmax.len() != grad_out.len() {
        return Err(CoreError::Shape(format!(
            "maxpool backward: {} argmax entries for {} gradients",
            argmax.len(),
            grad_out.len()
        )));
    }
    let mut grad_in = Tensor::zeros(input_shape);
    let gi = grad_in.data_mut();
    for (&idx, &g) in argmax.iter().zip(grad_out.data()) {
        gi[idx] += g;
    }
    Ok(grad_in)
}

/// Mean over all spatial positions, per channel: `(B, C, H, W) -> (B, C, 1, 1)`.
pub fn global_avg_pool_forward<T: Element>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, h, w) = input.dims4()?;
    let plane = h * w;
    let mut out = Tensor::zeros(&[b, c, 1, 1]);
    let x = input.data();
    let y = out.data_mut();
    for p in 0..b * c {
        let mut acc = 0.0f64;
        for &v in &x[p * plane..][..plane] {
            acc += v.to_f64().unwrap();
        }
        y[p] = T::from(acc / plane as f64).unwrap();
    }
    Ok(out)
}

pub fn global_avg_pool_backward<T: Element>(
    input_shape: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (b, c, h, w) = match input_shape {
        [b, c, h, w] => (*b, *c, *h, *w),
        _ => return Err(CoreError::Shape(format!("bad input shape {:?}", input_shape))),
    };
    if grad_out.shape() != [b, c, 1, 1] {
        return Err(CoreError::Shape(format!(
            "global_avg_pool backward: gradient shape {:?}",
            grad_out.shape()
        )));
    }
    let plane = h * w;
    let scale = T::from(1.0 / plane as f64).unwrap();
    let mut grad_in = Tensor::zeros(input_shape);
    let gi = grad_in.data_mut();
    for p in 0..b * c {
        let g = grad_out.data()[p] * scale;
        for v in &mut gi[p * plane..][..plane] {
            *v = g;
        }
    }
    Ok(grad_in)
}

/// Mean over the time axis only: `(B, C, H, W) -> (B, C, H, 1)`.
pub fn time_avg_pool_forward<T: Element>(input: &Tensor<T>) -> Result<Tensor<T>> {
    let (b, c, h, w) = input.dims4()?;
    let mut out = Tensor::zeros(&[b, c, h, 1]);
    let x = input.data();
    let y = out.data_mut();
    for p in 0..b * c {
        for r in 0..h {
            let row = &x[(p * h + r) * w..][..w];
            let mut acc = 0.0f64;
            for &v in row {
                acc += v.to_f64().unwrap();
            }
            y[p * h + r] = T::from(acc / w as f64).unwrap();
        }
    }
    Ok(out)
}

pub fn time_avg_pool_backward<T: Element>(
    input_shape: &[usize],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (b, c, h, w) = match input_shape {
        [b, c, h, w] => (*b, *c, *h, *w),
        _ => return Err(CoreError::Shape(format!("bad input shape {:?}", input_shape))),
    };
    if grad_out.shape() != [b, c, h, 1] {
        return Err(CoreError::Shape(format!(
            "time_avg_pool backward: gradient shape {:?}",
            grad_out.shape()
        )));
    }
    let scale = T::from(1.0 / w as f64).unwrap();
    let mut grad_in = Tensor::zeros(input_shape);
    let gi = grad_in.data_mut();
    for p in 0..b * c {
        for r in 0..h {
            let g = grad_out.data()[p * h + r] * scale;
            for v in &mut gi[(p * h + r) * w..][..w] {
                *v = g;
            }
        }
    }
    Ok(grad_in)
}
