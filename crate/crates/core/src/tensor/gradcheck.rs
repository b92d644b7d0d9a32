//! Central finite-difference verification of analytic gradients.
//! Meant to run on `f64` models; parameter counts stay small (<= 1e4).

use super::Tensor;
use crate::error::{CoreError, Result};
use crate::scalar::Scalar;

/// Anything that exposes its trainable tensors by name.
pub trait Parameterized<T: Scalar> {
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>));

    fn zero_grads(&mut self) {
        self.visit_params_mut(&mut |_, t| t.zero_grad());
    }

    fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params_mut(&mut |_, t| n += t.numel());
        n
    }
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub params_checked: usize,
}

/// Compare analytic gradients against central differences with step `h`.
///
/// `loss_and_grad` must accumulate gradients into the model's tensors;
/// `loss_only` must evaluate the identical loss without side effects on
/// parameters. Relative error per scalar is
/// `|g_a - g_fd| / max(1e-8, |g_a| + |g_fd|)`; the maximum is returned.
pub fn grad_check<M: Parameterized<f64>>(
    model: &mut M,
    mut loss_and_grad: impl FnMut(&mut M) -> Result<f64>,
    mut loss_only: impl FnMut(&mut M) -> Result<f64>,
    h: f64,
) -> Result<GradCheckReport> {
    model.zero_grads();
    loss_and_grad(model)?;

    let mut analytic: Vec<(String, Vec<f64>)> = Vec::new();
    model.visit_params_mut(&mut |name, t| {
        let g = t.grad().map(|g| g.to_vec()).unwrap_or_else(|| vec![0.0; t.numel()]);
        analytic.push((name.to_string(), g));
    });
    for (name, g) in &analytic {
        for v in g {
            if !v.is_finite() {
                return Err(CoreError::numeric(format!("non-finite analytic gradient in {name}")));
            }
        }
    }

    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        params_checked: 0,
    };

    for (name, grads) in &analytic {
        for idx in 0..grads.len() {
            set_param(model, name, idx, h, true);
            let lp = loss_only(model)?;
            set_param(model, name, idx, 2.0 * h, false);
            let lm = loss_only(model)?;
            set_param(model, name, idx, h, true); // restore

            let fd = (lp - lm) / (2.0 * h);
            let ga = grads[idx];
            let rel = (ga - fd).abs() / (ga.abs() + fd.abs()).max(1e-8);
            report.params_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_param = name.clone();
                report.worst_index = idx;
            }
        }
    }
    Ok(report)
}

fn set_param<M: Parameterized<f64>>(model: &mut M, name: &str, idx: usize, delta: f64, add: bool) {
    model.visit_params_mut(&mut |n, t| {
        if n == name {
            if add {
                t.data_mut()[idx] += delta;
            } else {
                t.data_mut()[idx] -= delta;
            }
        }
    });
}

impl<T: Scalar> Parameterized<T> for super::Mlp<T> {
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        for (name, t) in self.named_params_mut("mlp") {
            f(&name, t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{bce_backward, bce_forward, Activation, Mlp};

    struct Square {
        x: Tensor<f64>,
    }

    impl Parameterized<f64> for Square {
        fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<f64>)) {
            f("x", &mut self.x);
        }
    }

    #[test]
    fn quadratic_at_three() {
        // f(x) = x^2, analytic gradient at x=3 is 6.
        let mut model = Square { x: Tensor::from_vec(&[1], vec![3.0]).unwrap() };
        let report = grad_check(
            &mut model,
            |m| {
                let x = m.x.data()[0];
                m.x.grad_mut()[0] += 2.0 * x;
                Ok(x * x)
            },
            |m| Ok(m.x.data()[0] * m.x.data()[0]),
            1e-5,
        )
        .unwrap();
        assert!(report.max_rel_err <= 1e-9, "rel err {}", report.max_rel_err);
    }

    #[test]
    fn bce_of_sigmoid_logit_is_sigma_minus_target() {
        // d/dz BCE(sigmoid(z), t) == sigmoid(z) - t.
        let (z, t) = (0.37f64, 1.0f64);
        let p = 1.0 / (1.0 + (-z).exp());
        let dl_dp = bce_backward(&[p], &[t])[0];
        let dl_dz = dl_dp * p * (1.0 - p);
        assert!((dl_dz - (p - t)).abs() < 1e-12);
    }

    #[test]
    fn mlp_gradients_verify() {
        let mut mlp =
            Mlp::<f64>::new(&[3, 6, 1], Activation::Relu, Activation::Sigmoid, 42, "gc").unwrap();
        let x = vec![0.4, -0.2, 0.9, -0.6, 0.1, 0.7];
        let t = vec![1.0, 0.0];
        let report = grad_check(
            &mut mlp,
            |m| {
                let (out, cache) = m.forward(&x, 2)?;
                let loss = bce_forward(&out, &t)?;
                let g = bce_backward(&out, &t);
                m.backward(&cache, &g)?;
                Ok(loss)
            },
            |m| {
                let out = m.infer(&x, 2)?;
                bce_forward(&out, &t)
            },
            1e-5,
        )
        .unwrap();
        assert!(report.max_rel_err < 1e-7, "rel err {}", report.max_rel_err);
    }
}
