//! Multi-scale feature volumes and their trilinear point queries.
//!
//! Feature grids use the corner-aligned node layout: level nodes at
//! `i / n - 0.5`, so every coarse node plane coincides with a fine node
//! plane. Under that alignment, querying each level directly equals
//! querying a trilinearly upsampled-and-concatenated volume, which is the
//! identity the per-level realization relies on.

use crate::error::{CoreError, Result};
use crate::geometry::{trilinear_stencil, NodeLayout, Vec3};
use crate::scalar::Scalar;

/// One level's feature volume, channel-major `[c][z][y][x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid<T: Scalar> {
    pub channels: usize,
    pub n: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> FeatureGrid<T> {
    pub fn zeros(channels: usize, n: usize) -> Self {
        FeatureGrid { channels, n, data: vec![T::zero(); channels * n * n * n] }
    }

    #[inline]
    pub fn idx(&self, c: usize, ix: usize, iy: usize, iz: usize) -> usize {
        ((c * self.n + iz) * self.n + iy) * self.n + ix
    }
}

/// Per-level feature volumes produced by one encoder pass.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiScaleFeatures<T: Scalar> {
    pub levels: Vec<FeatureGrid<T>>,
}

impl<T: Scalar> MultiScaleFeatures<T> {
    /// Concatenated channel width d.
    pub fn width(&self) -> usize {
        self.levels.iter().map(|l| l.channels).sum()
    }

    /// 1-based source level of each global channel.
    pub fn channel_layer_map(&self) -> Vec<usize> {
        let mut map = Vec::with_capacity(self.width());
        for (li, level) in self.levels.iter().enumerate() {
            map.extend(std::iter::repeat(li + 1).take(level.channels));
        }
        map
    }

    pub fn zeros_like(&self) -> Self {
        MultiScaleFeatures {
            levels: self.levels.iter().map(|l| FeatureGrid::zeros(l.channels, l.n)).collect(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.levels.len() == other.levels.len()
            && self
                .levels
                .iter()
                .zip(&other.levels)
                .all(|(a, b)| a.channels == b.channels && a.n == b.n)
    }
}

/// Stencil of one level for one query point; weights are shared by all
/// channels of the level.
#[derive(Debug, Clone, Copy)]
pub struct LevelStencil {
    pub i0: [usize; 3],
    pub i1: [usize; 3],
    pub frac: [f64; 3],
}

/// Trilinear feature query, concatenating levels first to last into `out`.
/// When `trace` is given, the per-level stencils are recorded so gradients
/// can be scattered back.
pub fn query_features_into<T: Scalar>(
    features: &MultiScaleFeatures<T>,
    p: Vec3,
    out: &mut [T],
    mut trace: Option<&mut Vec<LevelStencil>>,
) -> Result<()> {
    if out.len() != features.width() {
        return Err(CoreError::config(format!(
            "feature query needs width {}, got buffer of {}",
            features.width(),
            out.len()
        )));
    }
    let mut offset = 0usize;
    for level in &features.levels {
        let st = trilinear_stencil(NodeLayout::CellCorners, level.n, p);
        if let Some(t) = trace.as_deref_mut() {
            t.push(LevelStencil { i0: st.i0, i1: st.i1, frac: st.frac });
        }
        let [x0, y0, z0] = st.i0;
        let [x1, y1, z1] = st.i1;
        let fx = T::from_f64(st.frac[0]);
        let fy = T::from_f64(st.frac[1]);
        let fz = T::from_f64(st.frac[2]);
        for c in 0..level.channels {
            let g = |ix: usize, iy: usize, iz: usize| level.data[level.idx(c, ix, iy, iz)];
            let lerp = |a: T, b: T, t: T| a + t * (b - a);
            let c00 = lerp(g(x0, y0, z0), g(x1, y0, z0), fx);
            let c10 = lerp(g(x0, y1, z0), g(x1, y1, z0), fx);
            let c01 = lerp(g(x0, y0, z1), g(x1, y0, z1), fx);
            let c11 = lerp(g(x0, y1, z1), g(x1, y1, z1), fx);
            out[offset + c] = lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz);
        }
        offset += level.channels;
    }
    Ok(())
}

pub fn query_features<T: Scalar>(features: &MultiScaleFeatures<T>, p: Vec3) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); features.width()];
    query_features_into(features, p, &mut out, None)?;
    Ok(out)
}

/// Adjoint of [`query_features_into`]: distribute a d-vector gradient onto
/// the 8 stencil corners of every level.
pub fn scatter_query_grad<T: Scalar>(
    grads: &mut MultiScaleFeatures<T>,
    trace: &[LevelStencil],
    grad_vec: &[T],
) {
    let mut offset = 0usize;
    for (level, st) in grads.levels.iter_mut().zip(trace) {
        let [x0, y0, z0] = st.i0;
        let [x1, y1, z1] = st.i1;
        let fx = T::from_f64(st.frac[0]);
        let fy = T::from_f64(st.frac[1]);
        let fz = T::from_f64(st.frac[2]);
        let one = T::one();
        let w = [
            (x0, y0, z0, (one - fx) * (one - fy) * (one - fz)),
            (x1, y0, z0, fx * (one - fy) * (one - fz)),
            (x0, y1, z0, (one - fx) * fy * (one - fz)),
            (x1, y1, z0, fx * fy * (one - fz)),
            (x0, y0, z1, (one - fx) * (one - fy) * fz),
            (x1, y0, z1, fx * (one - fy) * fz),
            (x0, y1, z1, (one - fx) * fy * fz),
            (x1, y1, z1, fx * fy * fz),
        ];
        for c in 0..level.channels {
            let g = grad_vec[offset + c];
            for &(ix, iy, iz, wt) in &w {
                let idx = level.idx(c, ix, iy, iz);
                level.data[idx] = level.data[idx] + wt * g;
            }
        }
        offset += level.channels;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    fn random_features(channels: &[usize], n0: usize, seed_val: u64) -> MultiScaleFeatures<f64> {
        let mut rng = seed::rng(seed_val, &[seed::tag("feat")]);
        let levels = channels
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let n = n0 >> i;
                let mut g = FeatureGrid::zeros(c, n);
                g.data.iter_mut().for_each(|v| *v = rng.gen_range(-1.0..1.0));
                g
            })
            .collect();
        MultiScaleFeatures { levels }
    }

    #[test]
    fn constant_levels_are_constant_everywhere() {
        let mut f = random_features(&[2, 3], 8, 1);
        for (li, level) in f.levels.iter_mut().enumerate() {
            for c in 0..level.channels {
                let v = (li * 10 + c) as f64;
                let n = level.n;
                for i in 0..n * n * n {
                    level.data[c * n * n * n + i] = v;
                }
            }
        }
        let q = query_features(&f, Vec3::new(0.123, -0.37, 0.444)).unwrap();
        assert_eq!(q, vec![0.0, 1.0, 10.0, 11.0, 12.0]);
    }

    #[test]
    fn query_at_common_node_returns_stored_values() {
        // The lattice corner -0.5 is node 0 of every level.
        let f = random_features(&[2, 2, 1], 8, 3);
        let q = query_features(&f, Vec3::new(-0.5, -0.5, -0.5)).unwrap();
        let mut want = Vec::new();
        for level in &f.levels {
            for c in 0..level.channels {
                want.push(level.data[level.idx(c, 0, 0, 0)]);
            }
        }
        assert_eq!(q, want);
    }

    /// Materialize the conceptual upsample-then-concat volume by sampling
    /// every level at the fine nodes, then trilinearly query that volume.
    fn materialized_query(f: &MultiScaleFeatures<f64>, n_fine: usize, p: Vec3) -> Vec<f64> {
        let mut fine_levels = Vec::new();
        for level in &f.levels {
            let mut up = FeatureGrid::zeros(level.channels, n_fine);
            for iz in 0..n_fine {
                for iy in 0..n_fine {
                    for ix in 0..n_fine {
                        let node = Vec3::new(
                            NodeLayout::CellCorners.node_pos(ix, n_fine),
                            NodeLayout::CellCorners.node_pos(iy, n_fine),
                            NodeLayout::CellCorners.node_pos(iz, n_fine),
                        );
                        let single = MultiScaleFeatures { levels: vec![level.clone()] };
                        let vals = query_features(&single, node).unwrap();
                        for c in 0..level.channels {
                            let idx = up.idx(c, ix, iy, iz);
                            up.data[idx] = vals[c];
                        }
                    }
                }
            }
            fine_levels.push(up);
        }
        let fine = MultiScaleFeatures { levels: fine_levels };
        query_features(&fine, p).unwrap()
    }

    #[test]
    fn per_level_query_equals_materialized_upsample_query() {
        let n0 = 8;
        let f = random_features(&[3, 2, 2], n0, 17);
        let mut rng = seed::rng(23, &[seed::tag("equiv")]);
        for _ in 0..50 {
            let p = Vec3::new(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            );
            let direct = query_features(&f, p).unwrap();
            let materialized = materialized_query(&f, n0, p);
            for (a, b) in direct.iter().zip(&materialized) {
                assert!((a - b).abs() <= 1e-10, "{a} vs {b} at {p:?}");
            }
        }
    }

    #[test]
    fn query_is_locally_continuous() {
        let f = random_features(&[2, 2], 8, 29);
        let delta = 1e-6;
        // Conservative Lipschitz bound: value range times nodes-per-unit,
        // summed over the three axes.
        let max_abs = f
            .levels
            .iter()
            .flat_map(|l| l.data.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let lip = 3.0 * 8.0 * 2.0 * max_abs;
        let mut rng = seed::rng(31, &[seed::tag("cont")]);
        for _ in 0..100 {
            let p = Vec3::new(
                rng.gen_range(-0.49..0.49),
                rng.gen_range(-0.49..0.49),
                rng.gen_range(-0.49..0.49),
            );
            let q = p + Vec3::new(delta, -delta, delta);
            let a = query_features(&f, p).unwrap();
            let b = query_features(&f, q).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() <= lip * delta * 3.0);
            }
        }
    }

    #[test]
    fn scatter_is_the_adjoint_of_query() {
        // <scatter(e_j at p), G> == <e_j, query(G at p)> for random G.
        let f = random_features(&[2, 2], 4, 41);
        let p = Vec3::new(0.21, -0.13, 0.05);
        let d = f.width();
        let mut trace = Vec::new();
        let mut out = vec![0.0; d];
        query_features_into(&f, p, &mut out, Some(&mut trace)).unwrap();
        for j in 0..d {
            let mut grads = f.zeros_like();
            let mut e = vec![0.0; d];
            e[j] = 1.0;
            scatter_query_grad(&mut grads, &trace, &e);
            // Inner product of scattered weights with the feature data
            // reproduces the queried value.
            let mut acc = 0.0;
            for (gl, fl) in grads.levels.iter().zip(&f.levels) {
                for (g, v) in gl.data.iter().zip(&fl.data) {
                    acc += g * v;
                }
            }
            assert!((acc - out[j]).abs() < 1e-12);
        }
    }
}
