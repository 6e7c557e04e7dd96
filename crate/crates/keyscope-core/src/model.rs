//! The two architectures, assembled from the ops layer set: KeyNet
//! (five conv blocks, a frame-wise embedding, time pooling) and
//! AllConv (conv/pool blocks ending in a 1x1 classifier conv with
//! global average pooling).

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // inherent float methods cover std builds
use num_traits::Float;

use crate::error::{CoreError, Result};
use crate::frontend::LogFreqSpectrogram;
use crate::key::KeyLabel;
use crate::ops::{
    argmax_rows, batchnorm_backward, batchnorm_infer, batchnorm_train, conv2d_backward,
    conv2d_forward, dense_backward, dense_forward, elu_backward, elu_forward,
    global_avg_pool_backward, global_avg_pool_forward, maxpool2x2_backward, maxpool2x2_forward,
    softmax, spatial_dropout_backward, spatial_dropout_forward, time_avg_pool_backward,
    time_avg_pool_forward, BnCache,
};
use crate::rng::RngStream;
use crate::tensor::{Parameter, Tensor};
use crate::N_CLASSES;

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;
/// Three 2x2 pools need at least this many frames and bins.
pub const ALLCONV_MIN_EXTENT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ArchitectureKind {
    KeyNet,
    AllConv,
}

impl ArchitectureKind {
    pub fn name(&self) -> &'static str {
        match self {
            ArchitectureKind::KeyNet => "keynet",
            ArchitectureKind::AllConv => "allconv",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "keynet" => Ok(ArchitectureKind::KeyNet),
            "allconv" => Ok(ArchitectureKind::AllConv),
            other => Err(CoreError::Config(format!(
                "unknown architecture {:?}, expected keynet or allconv",
                other
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArchitectureConfig {
    pub kind: ArchitectureKind,
    /// N_f, the width multiplier of every conv block.
    pub n_feature_maps: usize,
    pub dropout_p: f64,
    pub n_bins: usize,
    pub n_classes: usize,
    /// KeyNet's frame-wise embedding width; defaults to 2 * N_f.
    pub embedding_dim: usize,
}

impl ArchitectureConfig {
    pub fn keynet(n_feature_maps: usize, dropout_p: f64, n_bins: usize) -> Self {
        ArchitectureConfig {
            kind: ArchitectureKind::KeyNet,
            n_feature_maps,
            dropout_p,
            n_bins,
            n_classes: N_CLASSES,
            embedding_dim: 2 * n_feature_maps,
        }
    }

    pub fn allconv(n_feature_maps: usize, dropout_p: f64, n_bins: usize) -> Self {
        ArchitectureConfig {
            kind: ArchitectureKind::AllConv,
            n_feature_maps,
            dropout_p,
            n_bins,
            n_classes: N_CLASSES,
            embedding_dim: 0,
        }
    }

    /// Override the KeyNet embedding width (the original formulation
    /// used a fixed width instead of 2 * N_f).
    pub fn with_embedding_dim(mut self, dim: usize) -> Self {
        self.embedding_dim = dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_feature_maps < 1 {
            return Err(CoreError::Config("n_feature_maps must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(CoreError::Config(format!(
                "dropout probability {} outside [0, 1)",
                self.dropout_p
            )));
        }
        if self.n_classes != N_CLASSES {
            return Err(CoreError::Config(format!(
                "n_classes must be {}, got {}",
                N_CLASSES, self.n_classes
            )));
        }
        match self.kind {
            ArchitectureKind::KeyNet => {
                if self.n_bins < 1 {
                    return Err(CoreError::Config("n_bins must be at least 1".into()));
                }
                if self.embedding_dim < 1 {
                    return Err(CoreError::Config("embedding_dim must be at least 1".into()));
                }
            }
            ArchitectureKind::AllConv => {
                if self.n_bins < ALLCONV_MIN_EXTENT {
                    return Err(CoreError::Config(format!(
                        "allconv needs at least {} bins, got {}",
                        ALLCONV_MIN_EXTENT, self.n_bins
                    )));
                }
            }
        }
        Ok(())
    }
}

enum Layer {
    Conv {
        name: String,
        kernel: Parameter<f32>,
        bias: Parameter<f32>,
        cache: Option<Tensor<f32>>,
    },
    Norm {
        name: String,
        gamma: Parameter<f32>,
        beta: Parameter<f32>,
        running_mean: Vec<f32>,
        running_var: Vec<f32>,
        cache: Option<BnCache<f32>>,
    },
    Elu {
        cache: Option<Tensor<f32>>,
    },
    Drop {
        p: f64,
        cache: Option<Vec<f32>>,
    },
    Pool {
        cache: Option<(Vec<usize>, Vec<usize>)>,
    },
    /// Dense over each time frame's flattened (channels x bins)
    /// vector; output channels are the embedding dimensions.
    FrameDense {
        name: String,
        weight: Parameter<f32>,
        bias: Parameter<f32>,
        cache: Option<(Vec<usize>, Tensor<f32>)>,
    },
    TimeAvg {
        cache: Option<Vec<usize>>,
    },
    GlobalAvg {
        cache: Option<Vec<usize>>,
    },
    Dense {
        name: String,
        weight: Parameter<f32>,
        bias: Parameter<f32>,
        cache: Option<(Vec<usize>, Tensor<f32>)>,
    },
}

fn no_cache() -> CoreError {
    CoreError::Config("layer backward called without a cached forward pass".into())
}

fn accumulate(dst: &mut Tensor<f32>, src: &Tensor<f32>) {
    for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
        *d += s;
    }
}

fn accumulate_slice(dst: &mut Tensor<f32>, src: &[f32]) {
    for (d, s) in dst.data_mut().iter_mut().zip(src) {
        *d += s;
    }
}

/// Gather `[B, C, H, W]` into `[B*W, C*H]` rows, one row per frame.
fn frames_to_rows(x: &Tensor<f32>) -> Result<Tensor<f32>> {
    let (b, c, h, w) = x.dims4()?;
    let feat = c * h;
    let mut flat = Tensor::zeros(&[b * w, feat]);
    let xd = x.data();
    let fd = flat.data_mut();
    for ib in 0..b {
        for ic in 0..c {
            for ih in 0..h {
                let src = &xd[((ib * c + ic) * h + ih) * w..][..w];
                for (iw, &v) in src.iter().enumerate() {
                    fd[(ib * w + iw) * feat + ic * h + ih] = v;
                }
            }
        }
    }
    Ok(flat)
}

/// Scatter `[B*W, C*H]` rows back into `[B, C, H, W]`.
fn rows_to_frames(rows: &Tensor<f32>, shape: &[usize]) -> Result<Tensor<f32>> {
    let (b, c, h, w) = match shape {
        [b, c, h, w] => (*b, *c, *h, *w),
        _ => return Err(CoreError::Shape(format!("bad frame shape {:?}", shape))),
    };
    let feat = c * h;
    let mut out = Tensor::zeros(shape);
    let od = out.data_mut();
    let rd = rows.data();
    for ib in 0..b {
        for ic in 0..c {
            for ih in 0..h {
                let dst = &mut od[((ib * c + ic) * h + ih) * w..][..w];
                for (iw, v) in dst.iter_mut().enumerate() {
                    *v = rd[(ib * w + iw) * feat + ic * h + ih];
                }
            }
        }
    }
    Ok(out)
}

/// `[B*W, E]` rows to the channel layout `[B, E, 1, W]`.
fn rows_to_channels(rows: &Tensor<f32>, b: usize, w: usize) -> Result<Tensor<f32>> {
    let (n, e) = rows.dims2()?;
    if n != b * w {
        return Err(CoreError::Shape(format!(
            "{} rows cannot cover batch {} x {} frames",
            n, b, w
        )));
    }
    let mut out = Tensor::zeros(&[b, e, 1, w]);
    let od = out.data_mut();
    let rd = rows.data();
    for ib in 0..b {
        for iw in 0..w {
            for ie in 0..e {
                od[(ib * e + ie) * w + iw] = rd[(ib * w + iw) * e + ie];
            }
        }
    }
    Ok(out)
}

/// Inverse of [`rows_to_channels`].
fn channels_to_rows(x: &Tensor<f32>) -> Result<Tensor<f32>> {
    let (b, e, h, w) = x.dims4()?;
    if h != 1 {
        return Err(CoreError::Shape(format!(
            "expected height 1, got {:?}",
            x.shape()
        )));
    }
    let mut rows = Tensor::zeros(&[b * w, e]);
    let rd = rows.data_mut();
    let xd = x.data();
    for ib in 0..b {
        for iw in 0..w {
            for ie in 0..e {
                rd[(ib * w + iw) * e + ie] = xd[(ib * e + ie) * w + iw];
            }
        }
    }
    Ok(rows)
}

impl Layer {
    fn infer(&self, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        match self {
            Layer::Conv { kernel, bias, .. } => conv2d_forward(x, &kernel.value, &bias.value),
            Layer::Norm {
                gamma,
                beta,
                running_mean,
                running_var,
                ..
            } => batchnorm_infer(
                x,
                gamma.value.data(),
                beta.value.data(),
                running_mean,
                running_var,
                BN_EPS,
            ),
            Layer::Elu { .. } => Ok(elu_forward(x)),
            Layer::Drop { .. } => Ok(x.clone()),
            Layer::Pool { .. } => Ok(maxpool2x2_forward(x)?.0),
            Layer::FrameDense { weight, bias, .. } => {
                let (b, _, _, w) = x.dims4()?;
                let rows = frames_to_rows(x)?;
                let out = dense_forward(&rows, &weight.value, &bias.value)?;
                rows_to_channels(&out, b, w)
            }
            Layer::TimeAvg { .. } => time_avg_pool_forward(x),
            Layer::GlobalAvg { .. } => global_avg_pool_forward(x),
            Layer::Dense { weight, bias, .. } => {
                let rows = x.shape()[0];
                let feat = x.len() / rows;
                let flat = x.clone().reshape(&[rows, feat])?;
                dense_forward(&flat, &weight.value, &bias.value)
            }
        }
    }

    fn train_forward(&mut self, x: Tensor<f32>, rng: &mut RngStream) -> Result<Tensor<f32>> {
        match self {
            Layer::Conv {
                kernel, bias, cache, ..
            } => {
                let out = conv2d_forward(&x, &kernel.value, &bias.value)?;
                *cache = Some(x);
                Ok(out)
            }
            Layer::Norm {
                gamma,
                beta,
                running_mean,
                running_var,
                cache,
                ..
            } => {
                let (out, bn) = batchnorm_train(
                    &x,
                    gamma.value.data(),
                    beta.value.data(),
                    running_mean,
                    running_var,
                    BN_MOMENTUM,
                    BN_EPS,
                )?;
                *cache = Some(bn);
                Ok(out)
            }
            Layer::Elu { cache } => {
                let out = elu_forward(&x);
                *cache = Some(out.clone());
                Ok(out)
            }
            Layer::Drop { p, cache } => {
                let (out, mask) = spatial_dropout_forward(&x, *p, rng)?;
                *cache = Some(mask);
                Ok(out)
            }
            Layer::Pool { cache } => {
                let (out, argmax) = maxpool2x2_forward(&x)?;
                *cache = Some((x.shape().to_vec(), argmax));
                Ok(out)
            }
            Layer::FrameDense {
                weight, bias, cache, ..
            } => {
                let (b, _, _, w) = x.dims4()?;
                let rows = frames_to_rows(&x)?;
                let out = dense_forward(&rows, &weight.value, &bias.value)?;
                let out = rows_to_channels(&out, b, w)?;
                *cache = Some((x.shape().to_vec(), rows));
                Ok(out)
            }
            Layer::TimeAvg { cache } => {
                let out = time_avg_pool_forward(&x)?;
                *cache = Some(x.shape().to_vec());
                Ok(out)
            }
            Layer::GlobalAvg { cache } => {
                let out = global_avg_pool_forward(&x)?;
                *cache = Some(x.shape().to_vec());
                Ok(out)
            }
            Layer::Dense {
                weight, bias, cache, ..
            } => {
                let orig = x.shape().to_vec();
                let rows = orig[0];
                let feat = x.len() / rows;
                let flat = x.reshape(&[rows, feat])?;
                let out = dense_forward(&flat, &weight.value, &bias.value)?;
                *cache = Some((orig, flat));
                Ok(out)
            }
        }
    }

    fn backward(&mut self, grad: &Tensor<f32>) -> Result<Tensor<f32>> {
        match self {
            Layer::Conv {
                kernel, bias, cache, ..
            } => {
                let input = cache.take().ok_or_else(no_cache)?;
                let (gin, gk, gb) = conv2d_backward(&input, &kernel.value, grad)?;
                accumulate(&mut kernel.grad, &gk);
                accumulate(&mut bias.grad, &gb);
                Ok(gin)
            }
            Layer::Norm {
                gamma, beta, cache, ..
            } => {
                let bn = cache.take().ok_or_else(no_cache)?;
                let (gin, ggamma, gbeta) = batchnorm_backward(&bn, gamma.value.data(), grad)?;
                accumulate_slice(&mut gamma.grad, &ggamma);
                accumulate_slice(&mut beta.grad, &gbeta);
                Ok(gin)
            }
            Layer::Elu { cache } => {
                let out = cache.take().ok_or_else(no_cache)?;
                elu_backward(&out, grad)
            }
            Layer::Drop { cache, .. } => {
                let mask = cache.take().ok_or_else(no_cache)?;
                spatial_dropout_backward(&mask, grad)
            }
            Layer::Pool { cache } => {
                let (shape, argmax) = cache.take().ok_or_else(no_cache)?;
                maxpool2x2_backward(&shape, &argmax, grad)
            }
            Layer::FrameDense {
                weight, bias, cache, ..
            } => {
                let (shape, rows) = cache.take().ok_or_else(no_cache)?;
                let grad_rows = channels_to_rows(grad)?;
                let (gin_rows, gw, gb) = dense_backward(&rows, &weight.value, &grad_rows)?;
                accumulate(&mut weight.grad, &gw);
                accumulate(&mut bias.grad, &gb);
                rows_to_frames(&gin_rows, &shape)
            }
            Layer::TimeAvg { cache } => {
                let shape = cache.take().ok_or_else(no_cache)?;
                time_avg_pool_backward(&shape, grad)
            }
            Layer::GlobalAvg { cache } => {
                let shape = cache.take().ok_or_else(no_cache)?;
                global_avg_pool_backward(&shape, grad)
            }
            Layer::Dense {
                weight, bias, cache, ..
            } => {
                let (orig, flat) = cache.take().ok_or_else(no_cache)?;
                let (gin, gw, gb) = dense_backward(&flat, &weight.value, grad)?;
                accumulate(&mut weight.grad, &gw);
                accumulate(&mut bias.grad, &gb);
                gin.reshape(&orig)
            }
        }
    }

    fn clear_cache(&mut self) {
        match self {
            Layer::Conv { cache, .. } => *cache = None,
            Layer::Norm { cache, .. } => *cache = None,
            Layer::Elu { cache } => *cache = None,
            Layer::Drop { cache, .. } => *cache = None,
            Layer::Pool { cache } => *cache = None,
            Layer::FrameDense { cache, .. } => *cache = None,
            Layer::TimeAvg { cache } => *cache = None,
            Layer::GlobalAvg { cache } => *cache = None,
            Layer::Dense { cache, .. } => *cache = None,
        }
    }

    /// Elements held alive for the backward pass after a forward.
    fn cached_elems(&self) -> usize {
        match self {
            Layer::Conv { cache, .. } => cache.as_ref().map_or(0, |t| t.len()),
            Layer::Norm { cache, .. } => cache
                .as_ref()
                .map_or(0, |c| c.xhat.len() + c.inv_std.len()),
            Layer::Elu { cache } => cache.as_ref().map_or(0, |t| t.len()),
            Layer::Drop { cache, .. } => cache.as_ref().map_or(0, |m| m.len()),
            Layer::Pool { cache } => cache.as_ref().map_or(0, |(_, a)| a.len()),
            Layer::FrameDense { cache, .. } => cache.as_ref().map_or(0, |(_, t)| t.len()),
            Layer::TimeAvg { .. } | Layer::GlobalAvg { .. } => 0,
            Layer::Dense { cache, .. } => cache.as_ref().map_or(0, |(_, t)| t.len()),
        }
    }

    fn token(&self) -> String {
        match self {
            Layer::Conv { kernel, .. } => {
                let s = kernel.value.shape();
                format!("conv{}x{}x{}", s[2], s[3], s[0])
            }
            Layer::Norm { .. } => "bn".to_string(),
            Layer::Elu { .. } => "elu".to_string(),
            Layer::Drop { .. } => "drop".to_string(),
            Layer::Pool { .. } => "pool2x2".to_string(),
            Layer::FrameDense { weight, .. } => {
                format!("framedense{}", weight.value.shape()[0])
            }
            Layer::TimeAvg { .. } => "timeavg".to_string(),
            Layer::GlobalAvg { .. } => "globalavg".to_string(),
            Layer::Dense { weight, .. } => format!("dense{}", weight.value.shape()[0]),
        }
    }

    fn param_count(&self) -> Option<(String, usize)> {
        match self {
            Layer::Conv {
                name, kernel, bias, ..
            } => Some((name.clone(), kernel.value.len() + bias.value.len())),
            Layer::Norm {
                name, gamma, beta, ..
            } => Some((name.clone(), gamma.value.len() + beta.value.len())),
            Layer::FrameDense {
                name, weight, bias, ..
            }
            | Layer::Dense {
                name, weight, bias, ..
            } => Some((name.clone(), weight.value.len() + bias.value.len())),
            _ => None,
        }
    }
}

/// All persistent tensors of a model, in a fixed named order.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub config: ArchitectureConfig,
    pub tensors: Vec<NamedTensor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamReport {
    pub per_layer: Vec<(String, usize)>,
    pub total: usize,
    /// Fraction of all trainable parameters held by the frame-wise
    /// dense embedding (zero for architectures without one).
    pub dense_share: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub label: KeyLabel,
    /// Softmax distribution over the 24 classes.
    pub distribution: Vec<f32>,
}

pub struct Model {
    config: ArchitectureConfig,
    layers: Vec<Layer>,
    /// Shape of the final feature map before the logits reshape, kept
    /// from the last training forward for the backward entry point.
    tail_shape: Option<Vec<usize>>,
}

fn conv_layer(name: &str, c_in: usize, c_out: usize, k: usize, rng: &mut RngStream) -> Layer {
    let fan_in = c_in * k * k;
    let limit = (6.0 / fan_in as f64).sqrt();
    let data: Vec<f32> = (0..c_out * c_in * k * k)
        .map(|_| ((rng.next_f64() * 2.0 - 1.0) * limit) as f32)
        .collect();
    Layer::Conv {
        name: name.to_string(),
        kernel: Parameter::new(Tensor::from_vec(&[c_out, c_in, k, k], data).unwrap()),
        bias: Parameter::new(Tensor::zeros(&[c_out])),
        cache: None,
    }
}

fn norm_layer(name: &str, channels: usize) -> Layer {
    Layer::Norm {
        name: name.to_string(),
        gamma: Parameter::new(Tensor::filled(&[channels], 1.0)),
        beta: Parameter::new(Tensor::zeros(&[channels])),
        running_mean: vec![0.0; channels],
        running_var: vec![1.0; channels],
        cache: None,
    }
}

fn dense_params(d_in: usize, d_out: usize, rng: &mut RngStream) -> (Parameter<f32>, Parameter<f32>) {
    let limit = (6.0 / d_in as f64).sqrt();
    let data: Vec<f32> = (0..d_out * d_in)
        .map(|_| ((rng.next_f64() * 2.0 - 1.0) * limit) as f32)
        .collect();
    (
        Parameter::new(Tensor::from_vec(&[d_out, d_in], data).unwrap()),
        Parameter::new(Tensor::zeros(&[d_out])),
    )
}

impl Model {
    /// Build either architecture with seeded fan-in-scaled uniform
    /// initialisation.
    pub fn build(config: &ArchitectureConfig, init_seed: u64) -> Result<Model> {
        config.validate()?;
        let mut rng = RngStream::new(init_seed);
        let layers = match config.kind {
            ArchitectureKind::KeyNet => build_keynet_layers(config, &mut rng),
            ArchitectureKind::AllConv => build_allconv_layers(config, &mut rng),
        };
        Ok(Model {
            config: *config,
            layers,
            tail_shape: None,
        })
    }

    pub fn config(&self) -> &ArchitectureConfig {
        &self.config
    }

    /// Frames below this count cannot pass through the architecture.
    pub fn min_frames(&self) -> usize {
        match self.config.kind {
            ArchitectureKind::KeyNet => 1,
            ArchitectureKind::AllConv => ALLCONV_MIN_EXTENT,
        }
    }

    fn check_input(&self, input: &Tensor<f32>) -> Result<()> {
        let (_, c, h, w) = input.dims4()?;
        if c != 1 || h != self.config.n_bins {
            return Err(CoreError::Shape(format!(
                "input shape {:?} does not match 1 channel x {} bins",
                input.shape(),
                self.config.n_bins
            )));
        }
        if w < self.min_frames() {
            return Err(CoreError::Shape(format!(
                "input has {} frames, {} needs at least {}",
                w,
                self.config.kind.name(),
                self.min_frames()
            )));
        }
        Ok(())
    }

    fn finish_logits(&self, out: Tensor<f32>) -> Result<Tensor<f32>> {
        if out.shape().len() == 2 {
            return Ok(out);
        }
        let (b, c, h, w) = out.dims4()?;
        if h != 1 || w != 1 {
            return Err(CoreError::Shape(format!(
                "expected pooled output, got {:?}",
                out.shape()
            )));
        }
        out.reshape(&[b, c])
    }

    /// Inference-mode forward: batchnorm uses running statistics,
    /// dropout is the identity. Returns logits `[batch, 24]`.
    pub fn infer(&self, input: &Tensor<f32>) -> Result<Tensor<f32>> {
        self.check_input(input)?;
        let mut x = input.clone();
        for layer in &self.layers {
            x = layer.infer(&x)?;
        }
        self.finish_logits(x)
    }

    /// Training-mode forward: caches activations for [`Model::backward`],
    /// updates batchnorm running stats, and draws dropout masks from
    /// `rng`. Returns logits `[batch, 24]`.
    pub fn train_forward(&mut self, input: &Tensor<f32>, rng: &mut RngStream) -> Result<Tensor<f32>> {
        self.check_input(input)?;
        let mut x = input.clone();
        for layer in &mut self.layers {
            x = layer.train_forward(x, rng)?;
        }
        self.tail_shape = if x.shape().len() == 4 {
            Some(x.shape().to_vec())
        } else {
            None
        };
        self.finish_logits(x)
    }

    /// Back-propagate a logits gradient from [`Model::train_forward`],
    /// accumulating into every parameter's `grad`.
    pub fn backward(&mut self, grad_logits: &Tensor<f32>) -> Result<()> {
        let mut grad = match self.tail_shape.take() {
            Some(shape) => grad_logits.clone().reshape(&shape)?,
            None => grad_logits.clone(),
        };
        for layer in self.layers.iter_mut().rev() {
            grad = layer.backward(&grad)?;
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn clear_caches(&mut self) {
        for layer in &mut self.layers {
            layer.clear_cache();
        }
        self.tail_shape = None;
    }

    /// Activation elements currently cached for backward; the memory
    /// high-water accounting of the snippet-vs-full comparison.
    pub fn cached_activation_elems(&self) -> usize {
        self.layers.iter().map(|l| l.cached_elems()).sum()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter<f32>> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv { kernel, bias, .. } => {
                    out.push(kernel);
                    out.push(bias);
                }
                Layer::Norm { gamma, beta, .. } => {
                    out.push(gamma);
                    out.push(beta);
                }
                Layer::FrameDense { weight, bias, .. } | Layer::Dense { weight, bias, .. } => {
                    out.push(weight);
                    out.push(bias);
                }
                _ => {}
            }
        }
        out
    }

    /// Layer sequence as a dash-joined token string, for conformance
    /// checks against the published layer tables.
    pub fn signature(&self) -> String {
        let tokens: Vec<String> = self.layers.iter().map(|l| l.token()).collect();
        tokens.join("-")
    }

    pub fn count_params(&self) -> ParamReport {
        let mut per_layer = Vec::new();
        let mut total = 0usize;
        let mut dense_embed = 0usize;
        for layer in &self.layers {
            if let Some((name, count)) = layer.param_count() {
                total += count;
                if matches!(layer, Layer::FrameDense { .. }) {
                    dense_embed += count;
                }
                per_layer.push((name, count));
            }
        }
        ParamReport {
            per_layer,
            total,
            dense_share: if total > 0 {
                dense_embed as f64 / total as f64
            } else {
                0.0
            },
        }
    }

    /// Snapshot every parameter and running statistic by name.
    pub fn state(&self) -> ModelState {
        let mut tensors = Vec::new();
        let mut push = |name: String, shape: &[usize], data: &[f32]| {
            tensors.push(NamedTensor {
                name,
                shape: shape.to_vec(),
                data: data.to_vec(),
            });
        };
        for layer in &self.layers {
            match layer {
                Layer::Conv {
                    name, kernel, bias, ..
                } => {
                    push(format!("{name}.kernel"), kernel.value.shape(), kernel.value.data());
                    push(format!("{name}.bias"), bias.value.shape(), bias.value.data());
                }
                Layer::Norm {
                    name,
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    ..
                } => {
                    push(format!("{name}.gamma"), gamma.value.shape(), gamma.value.data());
                    push(format!("{name}.beta"), beta.value.shape(), beta.value.data());
                    push(format!("{name}.running_mean"), &[running_mean.len()], running_mean);
                    push(format!("{name}.running_var"), &[running_var.len()], running_var);
                }
                Layer::FrameDense {
                    name, weight, bias, ..
                }
                | Layer::Dense {
                    name, weight, bias, ..
                } => {
                    push(format!("{name}.weight"), weight.value.shape(), weight.value.data());
                    push(format!("{name}.bias"), bias.value.shape(), bias.value.data());
                }
                _ => {}
            }
        }
        ModelState {
            config: self.config,
            tensors,
        }
    }

    /// Restore a snapshot taken with [`Model::state`]. Every tensor
    /// must match by name and shape; extras or gaps are load errors.
    pub fn load_state(&mut self, state: &ModelState) -> Result<()> {
        if state.config != self.config {
            return Err(CoreError::Load(format!(
                "checkpoint config {:?} does not match model {:?}",
                state.config, self.config
            )));
        }
        let own = self.state();
        if own.tensors.len() != state.tensors.len() {
            return Err(CoreError::Load(format!(
                "checkpoint has {} tensors, model expects {}",
                state.tensors.len(),
                own.tensors.len()
            )));
        }
        let mut by_name: alloc::collections::BTreeMap<&str, &NamedTensor> = Default::default();
        for t in &state.tensors {
            if by_name.insert(t.name.as_str(), t).is_some() {
                return Err(CoreError::Load(format!("duplicate tensor {:?}", t.name)));
            }
        }
        // Validate everything before mutating.
        for expected in &own.tensors {
            let found = by_name.get(expected.name.as_str()).ok_or_else(|| {
                CoreError::Load(format!("checkpoint is missing tensor {:?}", expected.name))
            })?;
            if found.shape != expected.shape {
                return Err(CoreError::Load(format!(
                    "tensor {:?} has shape {:?}, model expects {:?}",
                    expected.name, found.shape, expected.shape
                )));
            }
        }
        for layer in &mut self.layers {
            match layer {
                Layer::Conv {
                    name, kernel, bias, ..
                } => {
                    kernel.value.data_mut().copy_from_slice(&by_name[format!("{name}.kernel").as_str()].data);
                    bias.value.data_mut().copy_from_slice(&by_name[format!("{name}.bias").as_str()].data);
                }
                Layer::Norm {
                    name,
                    gamma,
                    beta,
                    running_mean,
                    running_var,
                    ..
                } => {
                    gamma.value.data_mut().copy_from_slice(&by_name[format!("{name}.gamma").as_str()].data);
                    beta.value.data_mut().copy_from_slice(&by_name[format!("{name}.beta").as_str()].data);
                    running_mean.copy_from_slice(&by_name[format!("{name}.running_mean").as_str()].data);
                    running_var.copy_from_slice(&by_name[format!("{name}.running_var").as_str()].data);
                }
                Layer::FrameDense {
                    name, weight, bias, ..
                }
                | Layer::Dense {
                    name, weight, bias, ..
                } => {
                    weight.value.data_mut().copy_from_slice(&by_name[format!("{name}.weight").as_str()].data);
                    bias.value.data_mut().copy_from_slice(&by_name[format!("{name}.bias").as_str()].data);
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Whole-piece inference: softmax distribution plus the argmax key.
    pub fn predict(&self, spec: &LogFreqSpectrogram) -> Result<Prediction> {
        if spec.n_bins != self.config.n_bins {
            return Err(CoreError::Shape(format!(
                "spectrogram has {} bins, model expects {}",
                spec.n_bins, self.config.n_bins
            )));
        }
        if spec.n_frames < self.min_frames() {
            return Err(CoreError::Shape(format!(
                "input has {} frames, {} needs at least {}",
                spec.n_frames,
                self.config.kind.name(),
                self.min_frames()
            )));
        }
        let logits = self.infer(&spec.to_input_tensor())?;
        let probs = softmax(&logits)?;
        let class_index = argmax_rows(&probs)?[0];
        Ok(Prediction {
            class_index,
            label: KeyLabel::from_class_index(class_index)?,
            distribution: probs.into_data(),
        })
    }
}

fn build_keynet_layers(cfg: &ArchitectureConfig, rng: &mut RngStream) -> Vec<Layer> {
    let nf = cfg.n_feature_maps;
    let mut layers = Vec::new();
    for i in 1..=5 {
        let c_in = if i == 1 { 1 } else { nf };
        layers.push(conv_layer(&format!("conv{i}"), c_in, nf, 5, rng));
        layers.push(norm_layer(&format!("bn{i}"), nf));
        layers.push(Layer::Elu { cache: None });
        layers.push(Layer::Drop {
            p: cfg.dropout_p,
            cache: None,
        });
    }
    let (weight, bias) = dense_params(nf * cfg.n_bins, cfg.embedding_dim, rng);
    layers.push(Layer::FrameDense {
        name: "embed".to_string(),
        weight,
        bias,
        cache: None,
    });
    layers.push(Layer::Elu { cache: None });
    layers.push(Layer::TimeAvg { cache: None });
    let (weight, bias) = dense_params(cfg.embedding_dim, cfg.n_classes, rng);
    layers.push(Layer::Dense {
        name: "classifier".to_string(),
        weight,
        bias,
        cache: None,
    });
    layers
}

fn build_allconv_layers(cfg: &ArchitectureConfig, rng: &mut RngStream) -> Vec<Layer> {
    let nf = cfg.n_feature_maps;
    let p = cfg.dropout_p;
    let mut layers = Vec::new();
    let mut conv_no = 0usize;
    let mut conv_block = |layers: &mut Vec<Layer>, c_in: usize, c_out: usize, k: usize,
                          elu: bool, rng: &mut RngStream| {
        conv_no += 1;
        layers.push(conv_layer(&format!("conv{conv_no}"), c_in, c_out, k, rng));
        layers.push(norm_layer(&format!("bn{conv_no}"), c_out));
        if elu {
            layers.push(Layer::Elu { cache: None });
        }
    };

    conv_block(&mut layers, 1, nf, 5, true, rng);
    conv_block(&mut layers, nf, nf, 3, true, rng);
    layers.push(Layer::Pool { cache: None });
    layers.push(Layer::Drop { p, cache: None });

    conv_block(&mut layers, nf, 2 * nf, 3, true, rng);
    conv_block(&mut layers, 2 * nf, 2 * nf, 3, true, rng);
    layers.push(Layer::Pool { cache: None });
    layers.push(Layer::Drop { p, cache: None });

    conv_block(&mut layers, 2 * nf, 4 * nf, 3, true, rng);
    conv_block(&mut layers, 4 * nf, 4 * nf, 3, true, rng);
    layers.push(Layer::Pool { cache: None });
    layers.push(Layer::Drop { p, cache: None });

    conv_block(&mut layers, 4 * nf, 8 * nf, 3, true, rng);
    layers.push(Layer::Drop { p, cache: None });
    conv_block(&mut layers, 8 * nf, 8 * nf, 3, true, rng);
    layers.push(Layer::Drop { p, cache: None });

    // Classifier conv: batchnorm but no ELU before the global pool.
    conv_block(&mut layers, 8 * nf, cfg.n_classes, 1, false, rng);
    layers.push(Layer::GlobalAvg { cache: None });
    layers
}
