//! ELU activation and the softmax / cross-entropy head.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods cover std builds
use num_traits::Float;
use super::Element;
use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

/// Exponential-linear unit with alpha = 1: `x` for `x > 0`, else `e^x - 1`.
pub fn elu_forward<T: Element>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|x| if x > T::zero() { x } else { x.exp() - T::one() })
}

/// ELU gradient from the forward *output*: the derivative is 1 on the
/// positive branch and `e^x = y + 1` on the negative one.
pub fn elu_backward<T: Element>(output: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    if output.shape() != grad_out.shape() {
        return Err(CoreError::Shape(format!(
            "elu backward: output shape {:?} vs gradient shape {:?}",
            output.shape(),
            grad_out.shape()
        )));
    }
    let mut grad_in = Tensor::zeros(output.shape());
    for ((gi, &y), &g) in grad_in
        .data_mut()
        .iter_mut()
        .zip(output.data())
        .zip(grad_out.data())
    {
        *gi = if y > T::zero() { g } else { g * (y + T::one()) };
    }
    Ok(grad_in)
}

/// Row-wise softmax with max subtraction; the normalizer accumulates in f64.
pub fn softmax<T: Element>(logits: &Tensor<T>) -> Result<Tensor<T>> {
    let (rows, classes) = logits.dims2()?;
    let mut out = Tensor::zeros(&[rows, classes]);
    let x = logits.data();
    let y = out.data_mut();
    for r in 0..rows {
        let xr = &x[r * classes..][..classes];
        let yr = &mut y[r * classes..][..classes];
        let max = xr.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut denom = 0.0f64;
        for (o, &v) in yr.iter_mut().zip(xr) {
            let e = (v - max).exp();
            *o = e;
            denom += e.to_f64().unwrap();
        }
        let denom = T::from(denom).unwrap();
        for o in yr.iter_mut() {
            *o /= denom;
        }
    }
    Ok(out)
}

/// Mean cross-entropy over rows of 24-class logits, with the gradient
/// `(softmax - onehot) / rows` ready for back-propagation.
pub fn softmax_xent<T: Element>(
    logits: &Tensor<T>,
    targets: &[usize],
) -> Result<(f64, Tensor<T>)> {
    let (rows, classes) = logits.dims2()?;
    if targets.len() != rows {
        return Err(CoreError::Shape(format!(
            "softmax_xent: {} targets for {} rows",
            targets.len(),
            rows
        )));
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
        return Err(CoreError::Range(format!(
            "softmax_xent: target {} outside 0..{}",
            bad, classes
        )));
    }

    let mut probs = softmax(logits)?;
    let scale = T::from(1.0 / rows as f64).unwrap();
    // Loss via log-sum-exp of the shifted logits: exact even when the
    // target probability underflows, and non-finite exactly when the
    // logits themselves are.
    let mut loss = 0.0f64;
    let x = logits.data();
    for (r, &t) in targets.iter().enumerate() {
        let xr = &x[r * classes..][..classes];
        let max = xr
            .iter()
            .cloned()
            .fold(T::neg_infinity(), T::max)
            .to_f64()
            .unwrap();
        let mut sumexp = 0.0f64;
        for &v in xr {
            sumexp += (v.to_f64().unwrap() - max).exp();
        }
        loss += sumexp.ln() - (xr[t].to_f64().unwrap() - max);
    }
    {
        let p = probs.data_mut();
        for (r, &t) in targets.iter().enumerate() {
            let row = &mut p[r * classes..][..classes];
            row[t] = row[t] - T::one();
            for v in row.iter_mut() {
                *v *= scale;
            }
        }
    }
    Ok((loss / rows as f64, probs))
}

/// Predicted class per row (first index on exact ties).
pub fn argmax_rows<T: Element>(probs: &Tensor<T>) -> Result<Vec<usize>> {
    let (rows, classes) = probs.dims2()?;
    let mut out = vec![0usize; rows];
    for r in 0..rows {
        let row = &probs.data()[r * classes..][..classes];
        let mut best = 0;
        for (i, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = i;
            }
        }
        out[r] = best;
    }
    Ok(out)
}
