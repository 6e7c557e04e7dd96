//! Dropout on complete feature maps, not individual units.
//!
//! Inverted formulation: surviving maps are scaled by `1/(1-p)` during
//! training, so inference is the identity.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Element;
use crate::error::{CoreError, Result};
use crate::rng::RngStream;
use crate::tensor::Tensor;

/// Training-mode forward. The returned mask holds one scale factor per
/// `(batch, channel)` map: `0` for dropped maps, `1/(1-p)` for kept ones.
pub fn spatial_dropout_forward<T: Element>(
    input: &Tensor<T>,
    p: f64,
    rng: &mut RngStream,
) -> Result<(Tensor<T>, Vec<T>)> {
    if !(0.0..1.0).contains(&p) {
        return Err(CoreError::Config(format!(
            "dropout probability {} outside [0, 1)",
            p
        )));
    }
    let (b, c, h, w) = input.dims4()?;
    let plane = h * w;
    if p == 0.0 {
        return Ok((input.clone(), vec![T::one(); b * c]));
    }
    let keep_scale = T::from(1.0 / (1.0 - p)).unwrap();
    let mut mask = vec![T::zero(); b * c];
    for m in mask.iter_mut() {
        if rng.next_f64() >= p {
            *m = keep_scale;
        }
    }
    let mut out = Tensor::zeros(input.shape());
    let x = input.data();
    let y = out.data_mut();
    for (map, &scale) in mask.iter().enumerate() {
        if scale == T::zero() {
            continue;
        }
        let src = &x[map * plane..][..plane];
        let dst = &mut y[map * plane..][..plane];
        for (o, &v) in dst.iter_mut().zip(src) {
            *o = v * scale;
        }
    }
    Ok((out, mask))
}

pub fn spatial_dropout_backward<T: Element>(
    mask: &[T],
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (b, c, h, w) = grad_out.dims4()?;
    if mask.len() != b * c {
        return Err(CoreError::Shape(format!(
            "dropout backward: {} mask entries for {} maps",
            mask.len(),
            b * c
        )));
    }
    let plane = h * w;
    let mut grad_in = Tensor::zeros(grad_out.shape());
    let g = grad_out.data();
    let gi = grad_in.data_mut();
    for (map, &scale) in mask.iter().enumerate() {
        if scale == T::zero() {
            continue;
        }
        let src = &g[map * plane..][..plane];
        let dst = &mut gi[map * plane..][..plane];
        for (o, &v) in dst.iter_mut().zip(src) {
            *o = v * scale;
        }
    }
    Ok(grad_in)
}
