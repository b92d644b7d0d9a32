//! Scan simulation: dense surface sampling followed by a corruption
//! pipeline of depth-buffer occlusion, random down-sampling, truncated
//! Gaussian noise, and cluster dropping.

use super::kmeans::kmeans_partition;
use super::view::drop_clusters;
use super::PARTITION_K;
use crate::error::{CoreError, Result};
use crate::geometry::{self, PointCloud, TriMesh, Vec3};
use crate::seed;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Orthographic self-occlusion model: project along `view_dir`, bucket
/// into `pixels`^2 pixels, keep points within `depth_tol` of the nearest
/// depth in their pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct CullParams {
    pub view_dir: Vec3,
    pub pixels: usize,
    pub depth_tol: f64,
}

impl CullParams {
    pub fn along(view_dir: Vec3) -> Self {
        let pixels = 64;
        CullParams { view_dir, pixels, depth_tol: 2.0 / pixels as f64 }
    }
}

/// Knobs for one simulated scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanParams {
    /// Dense surface samples drawn before any corruption.
    pub dense_points: usize,
    /// Fraction kept by random down-sampling, in (0, 1].
    pub keep_ratio: f64,
    /// Per-component Gaussian noise std, canonical units.
    pub noise_sigma: f64,
    /// Hard bound on each noise component.
    pub noise_max: f64,
    pub cull: Option<CullParams>,
    /// Inclusive range of cluster counts to drop from a fresh K=8 partition.
    pub drop_clusters: Option<(usize, usize)>,
}

impl ScanParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.keep_ratio > 0.0 && self.keep_ratio <= 1.0) {
            return Err(CoreError::input(format!("keep_ratio {} outside (0,1]", self.keep_ratio)));
        }
        if self.noise_sigma < 0.0 || self.noise_max < 0.0 {
            return Err(CoreError::input("noise parameters must be non-negative"));
        }
        if let Some((lo, hi)) = self.drop_clusters {
            if lo > hi || hi >= PARTITION_K {
                return Err(CoreError::input(format!("drop range {lo}..={hi} invalid")));
            }
        }
        if self.dense_points == 0 {
            return Err(CoreError::input("dense_points must be positive"));
        }
        Ok(())
    }
}

/// Area-proportional surface samples as a point cloud.
pub fn surface_sample(mesh: &TriMesh, n: usize, seed_val: u64) -> Result<PointCloud> {
    if mesh.is_empty() {
        return Err(CoreError::input("cannot surface-sample an empty mesh"));
    }
    Ok(PointCloud::new(geometry::shape_surface_points(mesh, n, seed_val)))
}

/// Stable orthonormal basis perpendicular to `dir`.
fn basis(dir: Vec3) -> (Vec3, Vec3, Vec3) {
    let d = dir / dir.norm();
    let helper = if d.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let u = {
        let c = d.cross(helper);
        c / c.norm()
    };
    let v = d.cross(u);
    (d, u, v)
}

fn occlusion_cull(points: Vec<Vec3>, cull: &CullParams) -> Vec<Vec3> {
    let (d, u, v) = basis(cull.view_dir);
    let m = cull.pixels;
    let span = 0.9; // projections of the canonical cube fit in [-0.9, 0.9]
    let pixel_of = |p: Vec3| -> (usize, usize) {
        let pu = (((p.dot(u) + span) / (2.0 * span) * m as f64).floor()).clamp(0.0, (m - 1) as f64);
        let pv = (((p.dot(v) + span) / (2.0 * span) * m as f64).floor()).clamp(0.0, (m - 1) as f64);
        (pu as usize, pv as usize)
    };
    let mut nearest = vec![f64::INFINITY; m * m];
    for &p in &points {
        let (pu, pv) = pixel_of(p);
        let depth = p.dot(d);
        let cell = &mut nearest[pu * m + pv];
        if depth < *cell {
            *cell = depth;
        }
    }
    points
        .into_iter()
        .filter(|&p| {
            let (pu, pv) = pixel_of(p);
            p.dot(d) <= nearest[pu * m + pv] + cull.depth_tol
        })
        .collect()
}

/// Keep exactly `round(keep_ratio * n)` points, uniformly without
/// replacement, preserving input order.
fn downsample(points: Vec<Vec3>, keep_ratio: f64, rng: &mut impl Rng) -> Vec<Vec3> {
    let n = points.len();
    let keep = ((n as f64 * keep_ratio).round() as usize).min(n).max(1);
    if keep == n {
        return points;
    }
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(rng);
    let mut chosen = indices[..keep].to_vec();
    chosen.sort_unstable();
    chosen.into_iter().map(|i| points[i]).collect()
}

/// Full simulation pipeline for one scan of a normalized mesh.
pub fn simulate_scan(mesh: &TriMesh, params: &ScanParams, seed_val: u64) -> Result<PointCloud> {
    params.validate()?;
    let mut points =
        geometry::shape_surface_points(mesh, params.dense_points, seed::mix(seed_val, &[seed::tag("scan-dense")]));

    if let Some(cull) = &params.cull {
        points = occlusion_cull(points, cull);
        if points.is_empty() {
            return Err(CoreError::input("occlusion cull removed every point"));
        }
    }

    let mut rng = seed::rng(seed_val, &[seed::tag("scan-pipeline")]);
    points = downsample(points, params.keep_ratio, &mut rng);

    if params.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, params.noise_sigma)
            .map_err(|e| CoreError::input(e.to_string()))?;
        let bound = params.noise_max;
        for p in &mut points {
            // Component-wise truncation: the bound is hard.
            let dx = normal.sample(&mut rng).clamp(-bound, bound);
            let dy = normal.sample(&mut rng).clamp(-bound, bound);
            let dz = normal.sample(&mut rng).clamp(-bound, bound);
            *p = *p + Vec3::new(dx, dy, dz);
        }
    }

    if let Some((lo, hi)) = params.drop_clusters {
        if points.len() >= PARTITION_K {
            let cloud = PointCloud::new(points);
            let partition = kmeans_partition(
                &cloud,
                PARTITION_K,
                seed::mix(seed_val, &[seed::tag("scan-drop")]),
            )?;
            let n_drop = rng.gen_range(lo..=hi);
            let mut ids: Vec<u32> = (0..PARTITION_K as u32).collect();
            ids.shuffle(&mut rng);
            let keep: Vec<u32> = ids[n_drop..].to_vec();
            let kept = drop_clusters(&cloud, &partition, &keep)?;
            points = kept.points;
        }
    }

    if points.is_empty() {
        return Err(CoreError::input("simulated scan came out empty"));
    }
    Ok(PointCloud::new(points))
}
