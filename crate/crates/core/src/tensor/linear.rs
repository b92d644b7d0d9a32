//! Fully connected layers and the small MLPs built from them. Inputs are
//! batched row-major matrices `[batch, width]`.

use super::{validate_slice_finite, Tensor};
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
}

impl Activation {
    fn apply<T: Scalar>(self, data: &mut [T]) {
        match self {
            Activation::None => {}
            Activation::Relu => {
                for v in data {
                    if !(*v > T::zero()) {
                        *v = T::zero();
                    }
                }
            }
            Activation::Sigmoid => {
                for v in data {
                    *v = T::one() / (T::one() + (-*v).exp());
                }
            }
        }
    }

    /// Multiply `grad` in place by the activation derivative, evaluated
    /// from the cached *post*-activation output.
    fn backprop<T: Scalar>(self, output: &[T], grad: &mut [T]) {
        match self {
            Activation::None => {}
            Activation::Relu => {
                for (g, o) in grad.iter_mut().zip(output) {
                    if !(*o > T::zero()) {
                        *g = T::zero();
                    }
                }
            }
            Activation::Sigmoid => {
                for (g, o) in grad.iter_mut().zip(output) {
                    *g = *g * *o * (T::one() - *o);
                }
            }
        }
    }
}

/// Affine layer `y = x Wᵀ + b` with weights `[out, in]`.
#[derive(Debug, Clone)]
pub struct Linear<T: Scalar> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub activation: Activation,
}

impl<T: Scalar> Linear<T> {
    pub fn new(inputs: usize, outputs: usize, activation: Activation, seed_val: u64, name: &str) -> Self {
        Linear {
            weight: Tensor::uniform_init(&[outputs, inputs], inputs, seed_val, name),
            bias: Tensor::zeros(&[outputs]),
            activation,
        }
    }

    pub fn in_width(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn out_width(&self) -> usize {
        self.weight.shape()[0]
    }

    /// Forward over a batch; `input` is `[batch * in_width]`.
    pub fn forward(&self, input: &[T], batch: usize) -> Result<Vec<T>> {
        let (iw, ow) = (self.in_width(), self.out_width());
        if input.len() != batch * iw {
            return Err(CoreError::config(format!(
                "linear: expected {}x{} input, got length {}",
                batch,
                iw,
                input.len()
            )));
        }
        let wdat = self.weight.data();
        let bdat = self.bias.data();
        let mut out = vec![T::zero(); batch * ow];
        for bi in 0..batch {
            let x = &input[bi * iw..(bi + 1) * iw];
            let y = &mut out[bi * ow..(bi + 1) * ow];
            for (oi, yv) in y.iter_mut().enumerate() {
                let wrow = &wdat[oi * iw..(oi + 1) * iw];
                let mut acc = bdat[oi];
                for (wv, xv) in wrow.iter().zip(x) {
                    acc = acc + *wv * *xv;
                }
                *yv = acc;
            }
            self.activation.apply(&mut out[bi * ow..(bi + 1) * ow]);
        }
        validate_slice_finite(&out, "linear_forward")?;
        Ok(out)
    }

    /// Backward over a batch. `output` is the cached post-activation
    /// forward result. Accumulates parameter gradients, returns `dL/dx`.
    pub fn backward(
        &mut self,
        input: &[T],
        output: &[T],
        grad_out: &[T],
        batch: usize,
    ) -> Result<Vec<T>> {
        let (iw, ow) = (self.in_width(), self.out_width());
        let mut gpre = grad_out.to_vec();
        for bi in 0..batch {
            self.activation
                .backprop(&output[bi * ow..(bi + 1) * ow], &mut gpre[bi * ow..(bi + 1) * ow]);
        }
        let wdat = self.weight.data().to_vec();
        let gw = self.weight.grad_mut();
        let mut grad_in = vec![T::zero(); batch * iw];
        for bi in 0..batch {
            let x = &input[bi * iw..(bi + 1) * iw];
            let g = &gpre[bi * ow..(bi + 1) * ow];
            let gx = &mut grad_in[bi * iw..(bi + 1) * iw];
            for (oi, gv) in g.iter().enumerate() {
                let wrow = &wdat[oi * iw..(oi + 1) * iw];
                let gwrow = &mut gw[oi * iw..(oi + 1) * iw];
                for i in 0..iw {
                    gx[i] = gx[i] + wrow[i] * *gv;
                    gwrow[i] = gwrow[i] + x[i] * *gv;
                }
            }
        }
        let gb = self.bias.grad_mut();
        for bi in 0..batch {
            for (oi, gv) in gpre[bi * ow..(bi + 1) * ow].iter().enumerate() {
                gb[oi] = gb[oi] + *gv;
            }
        }
        validate_slice_finite(&grad_in, "linear_backward")?;
        Ok(grad_in)
    }
}

/// Per-layer activations cached by [`Mlp::forward`]; index 0 is the input.
#[derive(Debug, Clone)]
pub struct MlpCache<T: Scalar> {
    pub activations: Vec<Vec<T>>,
    pub batch: usize,
}

/// Small multi-layer perceptron.
#[derive(Debug, Clone)]
pub struct Mlp<T: Scalar> {
    pub layers: Vec<Linear<T>>,
}

impl<T: Scalar> Mlp<T> {
    /// `widths` chains layer sizes, e.g. `[d, 64, 64, 64, 1]`. Hidden layers
    /// get `hidden` activation, the final layer gets `last`.
    pub fn new(widths: &[usize], hidden: Activation, last: Activation, seed_val: u64, name: &str) -> Result<Self> {
        if widths.len() < 2 {
            return Err(CoreError::config("mlp needs at least one layer"));
        }
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for i in 0..widths.len() - 1 {
            let act = if i + 2 == widths.len() { last } else { hidden };
            layers.push(Linear::new(
                widths[i],
                widths[i + 1],
                act,
                seed_val,
                &format!("{name}.{i}"),
            ));
        }
        Ok(Mlp { layers })
    }

    pub fn in_width(&self) -> usize {
        self.layers[0].in_width()
    }

    pub fn out_width(&self) -> usize {
        self.layers.last().unwrap().out_width()
    }

    pub fn forward(&self, input: &[T], batch: usize) -> Result<(Vec<T>, MlpCache<T>)> {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        let mut cur = input.to_vec();
        for layer in &self.layers {
            cur = layer.forward(&cur, batch)?;
            activations.push(cur.clone());
        }
        Ok((cur, MlpCache { activations, batch }))
    }

    /// Forward without keeping caches; for inference paths.
    pub fn infer(&self, input: &[T], batch: usize) -> Result<Vec<T>> {
        let mut cur = input.to_vec();
        for layer in &self.layers {
            cur = layer.forward(&cur, batch)?;
        }
        Ok(cur)
    }

    pub fn backward(&mut self, cache: &MlpCache<T>, grad_out: &[T]) -> Result<Vec<T>> {
        let mut grad = grad_out.to_vec();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            grad = layer.backward(
                &cache.activations[i],
                &cache.activations[i + 1],
                &grad,
                cache.batch,
            )?;
        }
        Ok(grad)
    }

    pub fn named_params_mut(&mut self, prefix: &str) -> Vec<(String, &mut Tensor<T>)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter_mut().enumerate() {
            out.push((format!("{prefix}/l{i}/w"), &mut layer.weight));
            out.push((format!("{prefix}/l{i}/b"), &mut layer.bias));
        }
        out
    }

    pub fn named_params(&self, prefix: &str) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            out.push((format!("{prefix}/l{i}/w"), &layer.weight));
            out.push((format!("{prefix}/l{i}/b"), &layer.bias));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    #[test]
    fn zero_weights_with_sigmoid_output_half() {
        let mlp = Mlp::<f64>::new(&[3, 4, 1], Activation::Relu, Activation::Sigmoid, 1, "m")
            .map(|mut m| {
                for l in &mut m.layers {
                    l.weight.data_mut().iter_mut().for_each(|v| *v = 0.0);
                }
                m
            })
            .unwrap();
        let (out, _) = mlp.forward(&[0.3, -0.7, 2.0], 1).unwrap();
        assert_eq!(out, vec![0.5]);
    }

    #[test]
    fn identity_layer_passes_through() {
        let mut layer = Linear::<f64>::new(3, 3, Activation::None, 0, "id");
        layer.weight.data_mut().copy_from_slice(&[
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0,
        ]);
        let x = [0.25, -3.5, 7.0];
        assert_eq!(layer.forward(&x, 1).unwrap(), x.to_vec());
    }

    #[test]
    fn two_layer_net_matches_matrix_oracle() {
        let mut rng = seed::rng(5, &[seed::tag("mlp-oracle")]);
        let mlp = Mlp::<f64>::new(&[4, 3, 2], Activation::Relu, Activation::None, 9, "m").unwrap();
        let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (got, _) = mlp.forward(&x, 2).unwrap();

        // Hand-rolled matrix evaluation.
        let mut want = Vec::new();
        for b in 0..2 {
            let xi = &x[b * 4..(b + 1) * 4];
            let l0 = &mlp.layers[0];
            let mut h: Vec<f64> = (0..3)
                .map(|o| {
                    let mut acc = l0.bias.data()[o];
                    for i in 0..4 {
                        acc += l0.weight.data()[o * 4 + i] * xi[i];
                    }
                    acc.max(0.0)
                })
                .collect();
            let l1 = &mlp.layers[1];
            for o in 0..2 {
                let mut acc = l1.bias.data()[o];
                for i in 0..3 {
                    acc += l1.weight.data()[o * 3 + i] * h[i];
                }
                want.push(acc);
            }
            h.clear();
        }
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = seed::rng(21, &[seed::tag("mlp-fd")]);
        let mut mlp =
            Mlp::<f64>::new(&[3, 5, 2], Activation::Relu, Activation::Sigmoid, 33, "m").unwrap();
        let x: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let loss = |m: &Mlp<f64>, x: &[f64]| -> f64 {
            m.infer(x, 2).unwrap().iter().map(|v| v * v).sum::<f64>() / 2.0
        };
        let (out, cache) = mlp.forward(&x, 2).unwrap();
        let gx = mlp.backward(&cache, &out).unwrap();
        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.clone();
            xp[i] += h;
            let mut xm = x.clone();
            xm[i] -= h;
            let fd = (loss(&mlp, &xp) - loss(&mlp, &xm)) / (2.0 * h);
            assert!((fd - gx[i]).abs() < 1e-6, "input grad {i}: {fd} vs {}", gx[i]);
        }
        // One weight probe per layer.
        for li in 0..2 {
            let g = mlp.layers[li].weight.grad().unwrap()[0];
            let orig = mlp.layers[li].weight.data()[0];
            mlp.layers[li].weight.data_mut()[0] = orig + h;
            let lp = loss(&mlp, &x);
            mlp.layers[li].weight.data_mut()[0] = orig - h;
            let lm = loss(&mlp, &x);
            mlp.layers[li].weight.data_mut()[0] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!((fd - g).abs() < 1e-6, "layer {li} weight grad");
        }
    }
}
