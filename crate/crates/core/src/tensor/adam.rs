//! Adam optimizer with bias correction. One state per named parameter
//! tensor; the step counter is shared so checkpoint resume stays exact.

use super::Tensor;
use crate::error::{CoreError, Result};
use crate::scalar::{s, Scalar};
use std::collections::BTreeMap;

/// First/second moment buffers for one parameter tensor.
#[derive(Debug, Clone)]
pub struct AdamState<T: Scalar> {
    pub m: Vec<T>,
    pub v: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct Adam<T: Scalar> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Strictly increases by 1 per `step` call.
    pub step_count: u64,
    states: BTreeMap<String, AdamState<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step_count: 0, states: BTreeMap::new() }
    }

    /// Apply one update to every `(name, tensor, lr_scale)` triple using the
    /// gradients currently stored in each tensor, then clear them.
    pub fn step(&mut self, params: &mut [(String, &mut Tensor<T>, f64)]) -> Result<()> {
        self.step_count += 1;
        let t = self.step_count;
        let b1 = s::<T>(self.beta1);
        let b2 = s::<T>(self.beta2);
        let eps = s::<T>(self.eps);
        let corr1 = s::<T>(1.0 - self.beta1.powi(t as i32));
        let corr2 = s::<T>(1.0 - self.beta2.powi(t as i32));
        for (name, tensor, lr_scale) in params.iter_mut() {
            let n = tensor.numel();
            let state = self
                .states
                .entry(name.clone())
                .or_insert_with(|| AdamState { m: vec![T::zero(); n], v: vec![T::zero(); n] });
            if state.m.len() != n {
                return Err(CoreError::config(format!(
                    "adam state for {name} has {} entries, tensor has {n}",
                    state.m.len()
                )));
            }
            let lr = s::<T>(self.lr * *lr_scale);
            let grad = tensor.grad_mut().to_vec();
            let data = tensor.data_mut();
            for i in 0..n {
                let g = grad[i];
                state.m[i] = b1 * state.m[i] + (T::one() - b1) * g;
                state.v[i] = b2 * state.v[i] + (T::one() - b2) * g * g;
                let m_hat = state.m[i] / corr1;
                let v_hat = state.v[i] / corr2;
                data[i] = data[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
            tensor.validate_finite(&format!("adam_step({name})"))?;
            tensor.zero_grad();
        }
        Ok(())
    }

    pub fn state(&self, name: &str) -> Option<&AdamState<T>> {
        self.states.get(name)
    }

    pub fn states(&self) -> &BTreeMap<String, AdamState<T>> {
        &self.states
    }

    pub fn restore_state(&mut self, name: &str, state: AdamState<T>) {
        self.states.insert(name.to_string(), state);
    }
}
