//! 2-D convolution with "same" zero padding and stride 1.
//!
//! Kernels are `(out_channels, in_channels, kh, kw)` with odd spatial
//! extents (the architectures use 5x5, 3x3 and 1x1). Inner loops run over
//! contiguous width slices so they vectorise.

use alloc::format;
use num_traits::Float;

use super::Element;
use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

fn check_shapes<T: Float>(input: &Tensor<T>, kernel: &Tensor<T>, bias: &Tensor<T>) -> Result<()> {
    let (_, ci, _, _) = input.dims4()?;
    let (co, kci, kh, kw) = kernel.dims4()?;
    if kci != ci {
        return Err(CoreError::Shape(format!(
            "conv2d: input has {} channels, kernel expects {}",
            ci, kci
        )));
    }
    if kh % 2 == 0 || kw % 2 == 0 {
        return Err(CoreError::Shape(format!(
            "conv2d: kernel spatial size must be odd, got {}x{}",
            kh, kw
        )));
    }
    if bias.shape() != [co] {
        return Err(CoreError::Shape(format!(
            "conv2d: bias shape {:?} does not match {} output channels",
            bias.shape(),
            co
        )));
    }
    Ok(())
}

pub fn conv2d_forward<T: Element>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>> {
    check_shapes(input, kernel, bias)?;
    let (b, ci, h, w) = input.dims4()?;
    let (co, _, kh, kw) = kernel.dims4()?;
    let (ph, pw) = (kh / 2, kw / 2);

    let mut out = Tensor::zeros(&[b, co, h, w]);
    let x = input.data();
    let k = kernel.data();
    let bs = bias.data();
    let y = out.data_mut();

    for ib in 0..b {
        for oc in 0..co {
            let out_plane = &mut y[(ib * co + oc) * h * w..][..h * w];
            let b0 = bs[oc];
            for v in out_plane.iter_mut() {
                *v = b0;
            }
            for ic in 0..ci {
                let in_plane = &x[(ib * ci + ic) * h * w..][..h * w];
                for r in 0..kh {
                    // output row oh reads input row oh + r - ph
                    let oh_lo = ph.saturating_sub(r);
                    let oh_hi = (h + ph).saturating_sub(r).min(h);
                    for c in 0..kw {
                        let kv = k[((oc * ci + ic) * kh + r) * kw + c];
                        if kv == T::zero() {
                            continue;
                        }
                        let ow_lo = pw.saturating_sub(c);
                        let ow_hi = (w + pw).saturating_sub(c).min(w);
                        if ow_lo >= ow_hi {
                            continue;
                        }
                        let n = ow_hi - ow_lo;
                        for oh in oh_lo..oh_hi {
                            let ih = oh + r - ph;
                            let iw = ow_lo + c - pw;
                            let src = &in_plane[ih * w + iw..][..n];
                            let dst = &mut out_plane[oh * w + ow_lo..][..n];
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += kv * *s;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradients for input, kernel and bias given the upstream gradient.
pub fn conv2d_backward<T: Element>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (b, ci, h, w) = input.dims4()?;
    let (co, _, kh, kw) = kernel.dims4()?;
    if grad_out.shape() != [b, co, h, w] {
        return Err(CoreError::Shape(format!(
            "conv2d backward: upstream gradient shape {:?} does not match output [{}, {}, {}, {}]",
            grad_out.shape(),
            b,
            co,
            h,
            w
        )));
    }
    let (ph, pw) = (kh / 2, kw / 2);

    let mut grad_in = Tensor::zeros(&[b, ci, h, w]);
    let mut grad_k = Tensor::zeros(&[co, ci, kh, kw]);
    let mut grad_b = Tensor::zeros(&[co]);

    let x = input.data();
    let k = kernel.data();
    let g = grad_out.data();
    let gi = grad_in.data_mut();
    let gk = grad_k.data_mut();
    let gb = grad_b.data_mut();

    for ib in 0..b {
        for oc in 0..co {
            let g_plane = &g[(ib * co + oc) * h * w..][..h * w];
            let mut bias_acc = 0.0f64;
            for &gv in g_plane {
                bias_acc += gv.to_f64().unwrap();
            }
            gb[oc] += T::from(bias_acc).unwrap();

            for ic in 0..ci {
                let in_plane = &x[(ib * ci + ic) * h * w..][..h * w];
                let gi_plane = &mut gi[(ib * ci + ic) * h * w..][..h * w];
                for r in 0..kh {
                    let oh_lo = ph.saturating_sub(r);
                    let oh_hi = (h + ph).saturating_sub(r).min(h);
                    for c in 0..kw {
                        let kidx = ((oc * ci + ic) * kh + r) * kw + c;
                        let kv = k[kidx];
                        let ow_lo = pw.saturating_sub(c);
                        let ow_hi = (w + pw).saturating_sub(c).min(w);
                        if ow_lo >= ow_hi {
                            continue;
                        }
                        let n = ow_hi - ow_lo;
                        let mut k_acc = T::zero();
                        for oh in oh_lo..oh_hi {
                            let ih = oh + r - ph;
                            let iw = ow_lo + c - pw;
                            let grow = &g_plane[oh * w + ow_lo..][..n];
                            let irow = &in_plane[ih * w + iw..][..n];
                            let drow = &mut gi_plane[ih * w + iw..][..n];
                            let mut dot = T::zero();
                            for ((d, &gv), &iv) in drow.iter_mut().zip(grow).zip(irow) {
                                *d += kv * gv;
                                dot += gv * iv;
                            }
                            k_acc += dot;
                        }
                        gk[kidx] += k_acc;
                    }
                }
            }
        }
    }
    Ok((grad_in, grad_k, grad_b))
}
