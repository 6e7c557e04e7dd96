//! Forward and backward passes for the layer set the two architectures
//! need, written against plain tensors.
//!
//! Every op is generic over the element type: models run at `f32`, the
//! gradient-check harness instantiates the identical code at `f64`.
//! Reductions (means, variances, softmax normalizers) accumulate in
//! `f64` regardless of the storage type.

mod activation;
mod conv;
mod dense;
mod dropout;
mod norm;
mod pool;

pub use activation::{argmax_rows, elu_backward, elu_forward, softmax, softmax_xent};
pub use conv::{conv2d_backward, conv2d_forward};
pub use dense::{dense_backward, dense_forward};
pub use dropout::{spatial_dropout_backward, spatial_dropout_forward};
pub use norm::{batchnorm_backward, batchnorm_infer, batchnorm_train, BnCache};
pub use pool::{
    global_avg_pool_backward, global_avg_pool_forward, maxpool2x2_backward, maxpool2x2_forward,
    time_avg_pool_backward, time_avg_pool_forward,
};

use core::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use num_traits::Float;

/// Element type of tensors flowing through the ops.
pub trait Element:
    Float + AddAssign + SubAssign + MulAssign + DivAssign + core::fmt::Debug + 'static
{
}

impl<T> Element for T where
    T: Float + AddAssign + SubAssign + MulAssign + DivAssign + core::fmt::Debug + 'static
{
}
