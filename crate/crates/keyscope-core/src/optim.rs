//! Stochastic gradient descent with classical momentum.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::tensor::{Parameter, Tensor};

#[derive(Debug, Clone)]
pub struct SgdState {
    pub learning_rate: f64,
    pub momentum_coeff: f64,
    velocity: Vec<Tensor<f32>>,
}

impl SgdState {
    pub fn new(learning_rate: f64, momentum_coeff: f64) -> Result<Self> {
        if learning_rate <= 0.0 {
            return Err(CoreError::Config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if !(0.0..1.0).contains(&momentum_coeff) {
            return Err(CoreError::Config(format!(
                "momentum must be in [0, 1), got {momentum_coeff}"
            )));
        }
        Ok(SgdState {
            learning_rate,
            momentum_coeff,
            velocity: Vec::new(),
        })
    }

    /// `v <- momentum * v - lr * g; w <- w + v`, parameter by parameter.
    ///
    /// Velocity buffers are created lazily on the first step and matched
    /// to parameters by position, so the caller must pass parameters in a
    /// stable order.
    pub fn step(&mut self, params: &mut [&mut Parameter<f32>]) -> Result<()> {
        if self.velocity.is_empty() {
            self.velocity = params.iter().map(|p| Tensor::zeros(p.value.shape())).collect();
        }
        if self.velocity.len() != params.len() {
            return Err(CoreError::Shape(format!(
                "sgd: {} velocity buffers for {} parameters",
                self.velocity.len(),
                params.len()
            )));
        }
        let lr = self.learning_rate as f32;
        let mu = self.momentum_coeff as f32;
        for (param, vel) in params.iter_mut().zip(self.velocity.iter_mut()) {
            if vel.shape() != param.value.shape() {
                return Err(CoreError::Shape(format!(
                    "sgd: velocity shape {:?} vs parameter {:?}",
                    vel.shape(),
                    param.value.shape()
                )));
            }
            let v = vel.data_mut();
            let w = param.value.data_mut();
            let g = param.grad.data();
            for i in 0..v.len() {
                v[i] = mu * v[i] - lr * g[i];
                w[i] += v[i];
            }
        }
        Ok(())
    }
}
