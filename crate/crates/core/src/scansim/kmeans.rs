//! Lloyd's algorithm with k-means++ seeding over point positions.

use crate::error::{CoreError, Result};
use crate::geometry::{PointCloud, Vec3};
use crate::seed;
use rand::Rng;

const MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub k: usize,
    pub assignments: Vec<u32>,
    pub centroids: Vec<Vec3>,
}

impl Partition {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &a in &self.assignments {
            sizes[a as usize] += 1;
        }
        sizes
    }
}

/// Sum of squared distances to assigned centroids.
pub fn kmeans_objective(points: &[Vec3], partition: &Partition) -> f64 {
    points
        .iter()
        .zip(&partition.assignments)
        .map(|(p, &a)| (*p - partition.centroids[a as usize]).norm_sq())
        .sum()
}

pub fn kmeans_partition(cloud: &PointCloud, k: usize, seed_val: u64) -> Result<Partition> {
    kmeans_partition_traced(cloud, k, seed_val).map(|(p, _)| p)
}

/// As [`kmeans_partition`] but also returns the objective after each
/// iteration; the sequence is non-increasing.
pub fn kmeans_partition_traced(
    cloud: &PointCloud,
    k: usize,
    seed_val: u64,
) -> Result<(Partition, Vec<f64>)> {
    let points = &cloud.points;
    if k == 0 || points.len() < k {
        return Err(CoreError::input(format!(
            "kmeans needs at least {k} points, got {}",
            points.len()
        )));
    }
    let mut rng = seed::rng(seed_val, &[seed::tag("kmeans")]);

    // k-means++ seeding.
    let mut centroids: Vec<Vec3> = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..points.len())]);
    let mut dist_sq: Vec<f64> = points.iter().map(|p| (*p - centroids[0]).norm_sq()).collect();
    while centroids.len() < k {
        let total: f64 = dist_sq.iter().sum();
        let next = if total <= 0.0 {
            // All remaining points coincide with a centroid; pick uniformly.
            points[rng.gen_range(0..points.len())]
        } else {
            let r = rng.gen_range(0.0..total);
            let mut acc = 0.0;
            let mut chosen = points.len() - 1;
            for (i, &d) in dist_sq.iter().enumerate() {
                acc += d;
                if acc >= r {
                    chosen = i;
                    break;
                }
            }
            points[chosen]
        };
        centroids.push(next);
        for (i, p) in points.iter().enumerate() {
            dist_sq[i] = dist_sq[i].min((*p - next).norm_sq());
        }
    }

    let assign = |centroids: &[Vec3], assignments: &mut [u32]| {
        for (i, p) in points.iter().enumerate() {
            let mut best = 0u32;
            let mut best_d = f64::INFINITY;
            for (c, ctr) in centroids.iter().enumerate() {
                let d = (*p - *ctr).norm_sq();
                if d < best_d {
                    best_d = d;
                    best = c as u32;
                }
            }
            assignments[i] = best;
        }
    };

    let mut assignments = vec![0u32; points.len()];
    assign(&centroids, &mut assignments);
    let mut trace = Vec::new();

    for _ in 0..MAX_ITERS {
        // Update step: means minimize the within-cluster SSE.
        let mut sums = vec![Vec3::ZERO; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            sums[a as usize] += *p;
            counts[a as usize] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c] / counts[c] as f64;
            }
        }
        // Re-seed empty clusters at the point farthest from its current
        // centroid and claim that point, which strictly lowers the
        // objective, keeping the per-iteration trace monotone.
        for c in 0..k {
            if counts[c] == 0 {
                let (far_idx, _) = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, (*p - centroids[assignments[i] as usize]).norm_sq()))
                    .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
                    .unwrap();
                centroids[c] = points[far_idx];
                assignments[far_idx] = c as u32;
                counts[c] = 1;
            }
        }
        let prev = assignments.clone();
        assign(&centroids, &mut assignments);
        let partition = Partition { k, assignments: assignments.clone(), centroids: centroids.clone() };
        trace.push(kmeans_objective(points, &partition));
        if assignments == prev {
            return Ok((partition, trace));
        }
    }
    let partition = Partition { k, assignments, centroids };
    Ok((partition, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(center: Vec3, r: f64, n: usize, seed_val: u64) -> Vec<Vec3> {
        let mut rng = seed::rng(seed_val, &[seed::tag("blob")]);
        (0..n)
            .map(|_| {
                center
                    + Vec3::new(
                        rng.gen_range(-r..r),
                        rng.gen_range(-r..r),
                        rng.gen_range(-r..r),
                    )
            })
            .collect()
    }

    #[test]
    fn single_cluster_holds_everything() {
        let cloud = PointCloud::new(blob(Vec3::ZERO, 0.3, 50, 1));
        let p = kmeans_partition(&cloud, 1, 0).unwrap();
        assert!(p.assignments.iter().all(|&a| a == 0));
        assert_eq!(p.cluster_sizes(), vec![50]);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let pts = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.3, 0.0, 0.0),
            Vec3::new(0.0, 0.3, 0.0),
            Vec3::new(0.0, 0.0, 0.3),
        ];
        let cloud = PointCloud::new(pts.clone());
        let p = kmeans_partition(&cloud, 4, 3).unwrap();
        assert_eq!(p.cluster_sizes(), vec![1, 1, 1, 1]);
        assert!((kmeans_objective(&pts, &p)).abs() < 1e-20);
    }

    #[test]
    fn two_distant_blobs_separate_perfectly() {
        let mut pts = blob(Vec3::new(-0.4, 0.0, 0.0), 0.02, 80, 5);
        pts.extend(blob(Vec3::new(0.4, 0.0, 0.0), 0.02, 60, 6));
        let cloud = PointCloud::new(pts);
        let p = kmeans_partition(&cloud, 2, 9).unwrap();
        let first = p.assignments[0];
        assert!(p.assignments[..80].iter().all(|&a| a == first));
        assert!(p.assignments[80..].iter().all(|&a| a != first));
    }

    #[test]
    fn objective_is_non_increasing() {
        let mut pts = blob(Vec3::new(-0.3, 0.1, 0.0), 0.15, 120, 7);
        pts.extend(blob(Vec3::new(0.2, -0.2, 0.1), 0.2, 140, 8));
        pts.extend(blob(Vec3::new(0.0, 0.3, -0.2), 0.1, 100, 9));
        let cloud = PointCloud::new(pts);
        let (_, trace) = kmeans_partition_traced(&cloud, 8, 11).unwrap();
        assert!(trace.len() >= 2);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "objective rose: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn deterministic_given_seed_and_no_empty_clusters() {
        let cloud = PointCloud::new(blob(Vec3::ZERO, 0.4, 300, 2));
        let a = kmeans_partition(&cloud, 8, 4).unwrap();
        let b = kmeans_partition(&cloud, 8, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.cluster_sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn too_few_points_is_an_error() {
        let cloud = PointCloud::new(blob(Vec3::ZERO, 0.1, 5, 0));
        assert!(kmeans_partition(&cloud, 8, 0).is_err());
    }
}
