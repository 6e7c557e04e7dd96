//! Affine map over rows: `out[r] = W * in[r] + b`.
//!
//! KeyNet applies this frame-wise across time (each spectrogram frame is
//! one row) and once more for the final classifier.

use alloc::format;

use super::Element;
use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

pub fn dense_forward<T: Element>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (rows, in_dim) = input.dims2()?;
    let (out_dim, w_in) = weight.dims2()?;
    if w_in != in_dim {
        return Err(CoreError::Shape(format!(
            "dense: input features {} do not match weight input {}",
            in_dim, w_in
        )));
    }
    if bias.shape() != [out_dim] {
        return Err(CoreError::Shape(format!(
            "dense: bias shape {:?} does not match {} outputs",
            bias.shape(),
            out_dim
        )));
    }

    let mut out = Tensor::zeros(&[rows, out_dim]);
    let x = input.data();
    let w = weight.data();
    let b = bias.data();
    let y = out.data_mut();
    for r in 0..rows {
        let xr = &x[r * in_dim..][..in_dim];
        let yr = &mut y[r * out_dim..][..out_dim];
        for o in 0..out_dim {
            let wr = &w[o * in_dim..][..in_dim];
            let mut acc = T::zero();
            for (&wv, &xv) in wr.iter().zip(xr) {
                acc += wv * xv;
            }
            yr[o] = acc + b[o];
        }
    }
    Ok(out)
}

pub fn dense_backward<T: Element>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (rows, in_dim) = input.dims2()?;
    let (out_dim, _) = weight.dims2()?;
    if grad_out.shape() != [rows, out_dim] {
        return Err(CoreError::Shape(format!(
            "dense backward: gradient shape {:?} does not match [{}, {}]",
            grad_out.shape(),
            rows,
            out_dim
        )));
    }

    let mut grad_in = Tensor::zeros(&[rows, in_dim]);
    let mut grad_w = Tensor::zeros(&[out_dim, in_dim]);
    let mut grad_b = Tensor::zeros(&[out_dim]);

    let x = input.data();
    let w = weight.data();
    let g = grad_out.data();
    let gi = grad_in.data_mut();
    let gw = grad_w.data_mut();
    let gb = grad_b.data_mut();

    for r in 0..rows {
        let xr = &x[r * in_dim..][..in_dim];
        let gr = &g[r * out_dim..][..out_dim];
        let gir = &mut gi[r * in_dim..][..in_dim];
        for o in 0..out_dim {
            let gv = gr[o];
            gb[o] += gv;
            if gv == T::zero() {
                continue;
            }
            let wr = &w[o * in_dim..][..in_dim];
            let gwr = &mut gw[o * in_dim..][..in_dim];
            for i in 0..in_dim {
                gir[i] += gv * wr[i];
                gwr[i] += gv * xr[i];
            }
        }
    }
    Ok((grad_in, grad_w, grad_b))
}
