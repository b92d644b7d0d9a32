//! Multi-scale 3D CNN encoder: level 1 convolves the input grid, each
//! deeper level max-pools by 2 then convolves, ReLU after every
//! convolution. All level outputs are retained; nothing is upsampled.

use super::features::{FeatureGrid, MultiScaleFeatures};
use super::EncoderConfig;
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tensor::{maxpool3d_backward, maxpool3d_forward, Conv3d, Parameterized, Tensor};

#[derive(Debug, Clone)]
pub struct Encoder<T: Scalar> {
    pub config: EncoderConfig,
    convs: Vec<Conv3d<T>>,
}

/// Per-level activations needed by the backward pass.
#[derive(Debug)]
pub struct EncoderCache<T: Scalar> {
    /// Input of each level's convolution (the pooled previous output, or
    /// the raw grid for level 1).
    conv_inputs: Vec<Vec<T>>,
    conv_in_dims: Vec<[usize; 4]>,
    /// Argmax routes of each level's pool; level 1 has none.
    pool_argmax: Vec<Option<Vec<u32>>>,
}

impl<T: Scalar> Encoder<T> {
    pub fn new(config: EncoderConfig, seed_val: u64, name: &str) -> Result<Self> {
        config.validate()?;
        let mut convs = Vec::with_capacity(config.levels());
        let mut in_ch = 1usize;
        for (i, &out_ch) in config.channels.iter().enumerate() {
            convs.push(Conv3d::new(in_ch, out_ch, 3, 1, 1, seed_val, &format!("{name}/conv{i}")));
            in_ch = out_ch;
        }
        Ok(Encoder { config, convs })
    }

    /// Encode a voxel grid given as a flat `[n^3]` slice.
    pub fn forward(&self, grid: &[T]) -> Result<(MultiScaleFeatures<T>, EncoderCache<T>)> {
        let n = self.config.input_resolution;
        let mut levels = Vec::with_capacity(self.config.levels());
        let mut cache = EncoderCache {
            conv_inputs: Vec::with_capacity(self.config.levels()),
            conv_in_dims: Vec::with_capacity(self.config.levels()),
            pool_argmax: Vec::with_capacity(self.config.levels()),
        };
        let mut cur: Vec<T> = grid.to_vec();
        let mut cur_dims = [1usize, n, n, n];
        for (i, conv) in self.convs.iter().enumerate() {
            if i > 0 {
                let (pooled, argmax, dims) = maxpool3d_forward(&cur, cur_dims, 2)?;
                cache.pool_argmax.push(Some(argmax));
                cur = pooled;
                cur_dims = dims;
            } else {
                cache.pool_argmax.push(None);
            }
            cache.conv_inputs.push(cur.clone());
            cache.conv_in_dims.push(cur_dims);
            let (mut out, out_dims) = conv.forward(&cur, cur_dims)?;
            // ReLU
            for v in &mut out {
                if !(*v > T::zero()) {
                    *v = T::zero();
                }
            }
            levels.push(FeatureGrid { channels: out_dims[0], n: out_dims[1], data: out.clone() });
            cur = out;
            cur_dims = out_dims;
        }
        Ok((MultiScaleFeatures { levels }, cache))
    }

    /// Forward without caches for inference.
    pub fn infer(&self, grid: &[T]) -> Result<MultiScaleFeatures<T>> {
        self.forward(grid).map(|(f, _)| f)
    }

    /// Accumulate parameter gradients given per-level output gradients
    /// (with respect to the post-ReLU features). Deeper levels feed their
    /// input gradient back into the previous level through the pool.
    pub fn backward(
        &mut self,
        features: &MultiScaleFeatures<T>,
        cache: &EncoderCache<T>,
        grads: &mut MultiScaleFeatures<T>,
    ) -> Result<()> {
        for i in (0..self.convs.len()).rev() {
            // Gate by the ReLU that produced the level output.
            let level = &features.levels[i];
            let g = &mut grads.levels[i];
            for (gv, ov) in g.data.iter_mut().zip(&level.data) {
                if !(*ov > T::zero()) {
                    *gv = T::zero();
                }
            }
            let out_dims = [level.channels, level.n, level.n, level.n];
            let grad_in = self.convs[i].backward(
                &cache.conv_inputs[i],
                cache.conv_in_dims[i],
                &g.data,
                out_dims,
            )?;
            if i > 0 {
                let argmax = cache.pool_argmax[i].as_ref().expect("pool cache for level > 0");
                let prev_len = features.levels[i - 1].data.len();
                let unpooled = maxpool3d_backward(&grad_in, argmax, prev_len);
                for (dst, src) in grads.levels[i - 1].data.iter_mut().zip(&unpooled) {
                    *dst = *dst + *src;
                }
            }
        }
        Ok(())
    }

    pub fn named_params_mut(&mut self, prefix: &str) -> Vec<(String, &mut Tensor<T>)> {
        let mut out = Vec::new();
        for (i, conv) in self.convs.iter_mut().enumerate() {
            out.push((format!("{prefix}/conv{i}/w"), &mut conv.weight));
            out.push((format!("{prefix}/conv{i}/b"), &mut conv.bias));
        }
        out
    }

    pub fn named_params(&self, prefix: &str) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (i, conv) in self.convs.iter().enumerate() {
            out.push((format!("{prefix}/conv{i}/w"), &conv.weight));
            out.push((format!("{prefix}/conv{i}/b"), &conv.bias));
        }
        out
    }

    /// Cast to another precision, dropping optimizer/gradient state.
    pub fn cast<U: Scalar>(&self) -> Encoder<U> {
        Encoder {
            config: self.config.clone(),
            convs: self
                .convs
                .iter()
                .map(|c| crate::tensor::Conv3d {
                    weight: c.weight.cast(),
                    bias: c.bias.cast(),
                    kernel: c.kernel,
                    stride: c.stride,
                    padding: c.padding,
                })
                .collect(),
        }
    }
}

impl<T: Scalar> Parameterized<T> for Encoder<T> {
    fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut Tensor<T>)) {
        for (name, t) in self.named_params_mut("enc") {
            f(&name, t);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use crate::tensor::conv3d_forward;
    use rand::Rng;

    fn small_config() -> EncoderConfig {
        EncoderConfig::new(vec![2, 3, 2], 8).unwrap()
    }

    #[test]
    fn level_resolutions_follow_the_halving_ladder() {
        let cfg = EncoderConfig::default_desk();
        let enc = Encoder::<f32>::new(cfg, 1, "e").unwrap();
        let grid = vec![0f32; 32 * 32 * 32];
        let (f, _) = enc.forward(&grid).unwrap();
        let res: Vec<usize> = f.levels.iter().map(|l| l.n).collect();
        assert_eq!(res, vec![32, 16, 8, 4, 2, 1]);
        assert_eq!(f.width(), 68);
    }

    #[test]
    fn zero_input_with_zero_bias_gives_zero_features() {
        let enc = Encoder::<f64>::new(small_config(), 2, "e").unwrap();
        let grid = vec![0f64; 8 * 8 * 8];
        let (f, _) = enc.forward(&grid).unwrap();
        for level in &f.levels {
            assert!(level.data.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn forward_matches_layerwise_oracle() {
        let enc = Encoder::<f64>::new(small_config(), 3, "e").unwrap();
        let mut rng = seed::rng(5, &[seed::tag("enc-oracle")]);
        let grid: Vec<f64> = (0..512).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (f, _) = enc.forward(&grid).unwrap();

        // Compose the public conv/pool kernels by hand.
        let mut cur = grid.clone();
        let mut dims = [1usize, 8, 8, 8];
        for (i, level) in f.levels.iter().enumerate() {
            if i > 0 {
                let (pooled, _, d) = maxpool3d_forward(&cur, dims, 2).unwrap();
                cur = pooled;
                dims = d;
            }
            let conv = &enc.convs[i];
            let (mut out, d) =
                conv3d_forward(&cur, dims, conv.weight.data(), conv.bias.data(), 3, 1, 1).unwrap();
            out.iter_mut().for_each(|v| *v = v.max(0.0));
            assert_eq!(out, level.data, "level {i}");
            cur = out;
            dims = d;
        }
    }

    #[test]
    fn translation_covariance_at_level_one_interior() {
        let cfg = EncoderConfig::new(vec![2, 2], 8).unwrap();
        let enc = Encoder::<f64>::new(cfg, 7, "e").unwrap();
        let n = 8;
        let mut grid = vec![0f64; n * n * n];
        // A small interior pattern.
        grid[(3 * n + 3) * n + 3] = 1.0;
        grid[(3 * n + 4) * n + 3] = 0.5;
        let mut shifted = vec![0f64; n * n * n];
        // Shift by one cell in +x.
        grid.iter().enumerate().for_each(|(i, &v)| {
            if v != 0.0 {
                shifted[i + 1] = v;
            }
        });
        let (fa, _) = enc.forward(&grid).unwrap();
        let (fb, _) = enc.forward(&shifted).unwrap();
        let l = &fa.levels[0];
        for c in 0..l.channels {
            for iz in 1..n - 1 {
                for iy in 1..n - 1 {
                    for ix in 1..n - 2 {
                        let a = l.data[l.idx(c, ix, iy, iz)];
                        let b = fb.levels[0].data[l.idx(c, ix + 1, iy, iz)];
                        assert!((a - b).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn backward_gradients_verify_against_finite_differences() {
        use crate::tensor::grad_check;
        let mut enc = Encoder::<f64>::new(small_config(), 11, "e").unwrap();
        let mut rng = seed::rng(13, &[seed::tag("enc-fd")]);
        let grid: Vec<f64> = (0..512).map(|_| rng.gen_range(0.0..1.0)).collect();
        // Loss: sum of squares of every level output / 2.
        let report = grad_check(
            &mut enc,
            |e| {
                let (f, cache) = e.forward(&grid)?;
                let mut grads = f.zeros_like();
                let mut loss = 0.0;
                for (gl, fl) in grads.levels.iter_mut().zip(&f.levels) {
                    for (g, v) in gl.data.iter_mut().zip(&fl.data) {
                        loss += v * v / 2.0;
                        *g = *v;
                    }
                }
                e.backward(&f, &cache, &mut grads)?;
                Ok(loss)
            },
            |e| {
                let f = e.infer(&grid)?;
                Ok(f.levels.iter().flat_map(|l| l.data.iter()).map(|v| v * v / 2.0).sum())
            },
            1e-5,
        )
        .unwrap();
        assert!(report.max_rel_err < 1e-6, "rel err {}", report.max_rel_err);
    }
}
