//! Minimal deterministic tensor engine: dense tensors, explicit
//! forward/backward passes for the handful of layer kinds the
//! reconstruction networks need, binary cross-entropy, and Adam.
//!
//! There is no autodiff graph. Each layer exposes a `forward` that returns
//! whatever cache its paired `backward` needs; composite models chain them
//! by hand. All passes validate finiteness of their outputs and fail hard
//! on NaN/Inf.

mod adam;
mod checkpoint;
mod conv;
mod gradcheck;
mod linear;
mod loss;

pub use adam::{Adam, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use conv::{conv3d_backward, conv3d_forward, maxpool3d_backward, maxpool3d_forward, Conv3d};
pub use gradcheck::{grad_check, GradCheckReport};
pub use linear::{Activation, Linear, Mlp, MlpCache};
pub use loss::{bce_backward, bce_forward, BCE_CLAMP};

use crate::error::{CoreError, Result};
use crate::scalar::Scalar;
use crate::seed;
use rand::Rng;

/// Dense tensor: a shape plus a flat scalar array, with an optional
/// gradient buffer of identical shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T: Scalar> {
    shape: Vec<usize>,
    data: Vec<T>,
    grad: Option<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![T::zero(); n], grad: None }
    }

    pub fn from_vec(shape: &[usize], data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(CoreError::config(format!(
                "shape {:?} expects {} values, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor { shape: shape.to_vec(), data, grad: None })
    }

    /// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded.
    pub fn uniform_init(shape: &[usize], fan_in: usize, seed_val: u64, name: &str) -> Self {
        let n: usize = shape.iter().product();
        let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
        let mut rng = seed::rng(seed_val, &[seed::tag("init"), seed::tag(name)]);
        let data = (0..n)
            .map(|_| T::from_f64(rng.gen_range(-bound..bound)))
            .collect();
        Tensor { shape: shape.to_vec(), data, grad: None }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Gradient buffer, allocating lazily on first use.
    pub fn grad_mut(&mut self) -> &mut [T] {
        let n = self.data.len();
        self.grad.get_or_insert_with(|| vec![T::zero(); n])
    }

    pub fn grad(&self) -> Option<&[T]> {
        self.grad.as_deref()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = &mut self.grad {
            g.iter_mut().for_each(|v| *v = T::zero());
        }
    }

    /// Hard finiteness gate. Called at the end of every forward/backward pass.
    pub fn validate_finite(&self, context: &str) -> Result<()> {
        validate_slice_finite(&self.data, context)?;
        if let Some(g) = &self.grad {
            validate_slice_finite(g, context)?;
        }
        Ok(())
    }

    /// Convert precision, dropping any gradient buffer.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|v| U::from_f64(v.to_f64_s())).collect(),
            grad: None,
        }
    }
}

pub fn validate_slice_finite<T: Scalar>(data: &[T], context: &str) -> Result<()> {
    for (i, v) in data.iter().enumerate() {
        if !v.is_finite() {
            return Err(CoreError::numeric(format!(
                "non-finite value {v} at index {i} in {context}"
            )));
        }
    }
    Ok(())
}

/// Layer kinds understood by the engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Conv3d,
    MaxPool3d,
    FullyConnected,
    Activation,
}

/// Declarative layer description; construction validates that the output
/// spatial extent stays >= 1.
#[derive(Debug, Clone)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn conv3d(in_channels: usize, out_channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Conv3d,
            kernel,
            stride,
            padding,
            in_channels,
            out_channels,
            activation: Activation::None,
        }
    }

    /// Output extent along one spatial axis, or an error when the
    /// combination collapses below a single cell.
    pub fn out_extent(&self, input: usize) -> Result<usize> {
        let padded = input + 2 * self.padding;
        if padded < self.kernel || self.stride == 0 {
            return Err(CoreError::config(format!(
                "kernel {} stride {} padding {} does not fit input extent {}",
                self.kernel, self.stride, self.padding, input
            )));
        }
        Ok((padded - self.kernel) / self.stride + 1)
    }
}
