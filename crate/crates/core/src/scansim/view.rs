//! Augmented view pairs: a K=8 spatial partition, two independent kept
//! cluster sets with `K_A > K_B`, and independent down-sampling of each
//! view. View A is always the less corrupted one.

use super::kmeans::{kmeans_partition, Partition};
use super::PARTITION_K;
use crate::error::{CoreError, Result};
use crate::geometry::PointCloud;
use crate::seed;
use rand::seq::SliceRandom;
use rand::Rng;

/// Both views are capped at this many points; smaller clouds are kept as is.
pub const VIEW_POINT_CAP: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct ViewPair {
    pub view_a: PointCloud,
    pub view_b: PointCloud,
    pub k_a: usize,
    pub k_b: usize,
    pub kept_a: Vec<u32>,
    pub kept_b: Vec<u32>,
}

impl ViewPair {
    /// Validates the ordering contract `K >= K_A > K_B >= 1`; pairs that
    /// would swap the teacher and student views are rejected.
    pub fn new(
        view_a: PointCloud,
        view_b: PointCloud,
        kept_a: Vec<u32>,
        kept_b: Vec<u32>,
    ) -> Result<Self> {
        let (k_a, k_b) = (kept_a.len(), kept_b.len());
        if !(k_a <= PARTITION_K && k_a > k_b && k_b >= 1) {
            return Err(CoreError::input(format!(
                "view pair needs K >= K_A > K_B >= 1, got K_A={k_a}, K_B={k_b}"
            )));
        }
        if view_a.len() > VIEW_POINT_CAP || view_b.len() > VIEW_POINT_CAP {
            return Err(CoreError::input("views must be downsampled to the point cap"));
        }
        Ok(ViewPair { view_a, view_b, k_a, k_b, kept_a, kept_b })
    }
}

/// Exactly the points whose cluster id is in `keep_ids`.
pub fn drop_clusters(cloud: &PointCloud, partition: &Partition, keep_ids: &[u32]) -> Result<PointCloud> {
    if keep_ids.is_empty() {
        return Err(CoreError::input("keep_ids must not be empty"));
    }
    if cloud.len() != partition.assignments.len() {
        return Err(CoreError::input("partition does not match the point cloud"));
    }
    let keep: std::collections::HashSet<u32> = keep_ids.iter().copied().collect();
    let mut points = Vec::new();
    let mut clusters = Vec::new();
    for (p, &a) in cloud.points.iter().zip(&partition.assignments) {
        if keep.contains(&a) {
            points.push(*p);
            clusters.push(a);
        }
    }
    Ok(PointCloud { points, clusters: Some(clusters) })
}

pub(crate) fn cap_points(mut cloud: PointCloud, cap: usize, rng: &mut impl Rng) -> PointCloud {
    if cloud.len() <= cap {
        return cloud;
    }
    let mut indices: Vec<usize> = (0..cloud.len()).collect();
    indices.shuffle(rng);
    let mut chosen = indices[..cap].to_vec();
    chosen.sort_unstable();
    let points = chosen.iter().map(|&i| cloud.points[i]).collect();
    let clusters = cloud.clusters.take().map(|c| chosen.iter().map(|&i| c[i]).collect());
    PointCloud { points, clusters }
}

/// Draw `K_A` from {7, 8} and `K_B` from {5, 6, 7}, rejecting draws until
/// `K_A > K_B`.
pub(crate) fn draw_kept_counts(rng: &mut impl Rng) -> (usize, usize) {
    loop {
        let k_a = *[7usize, 8].choose(rng).unwrap();
        let k_b = *[5usize, 6, 7].choose(rng).unwrap();
        if k_a > k_b {
            return (k_a, k_b);
        }
    }
}

/// Standard surface-aware view pair: fresh K=8 partition, kept-cluster
/// draws, then independent down-sampling of each view to the point cap.
pub fn make_view_pair(scan: &PointCloud, seed_val: u64) -> Result<ViewPair> {
    if scan.len() < PARTITION_K {
        return Err(CoreError::input(format!(
            "need at least {PARTITION_K} points for a view pair, got {}",
            scan.len()
        )));
    }
    let partition = kmeans_partition(scan, PARTITION_K, seed::mix(seed_val, &[seed::tag("viewpair-km")]))?;
    let mut rng = seed::rng(seed_val, &[seed::tag("viewpair")]);
    let (k_a, k_b) = draw_kept_counts(&mut rng);

    let mut ids: Vec<u32> = (0..PARTITION_K as u32).collect();
    ids.shuffle(&mut rng);
    let mut kept_a = ids[..k_a].to_vec();
    kept_a.sort_unstable();
    ids.shuffle(&mut rng);
    let mut kept_b = ids[..k_b].to_vec();
    kept_b.sort_unstable();

    let view_a = cap_points(drop_clusters(scan, &partition, &kept_a)?, VIEW_POINT_CAP, &mut rng);
    let view_b = cap_points(drop_clusters(scan, &partition, &kept_b)?, VIEW_POINT_CAP, &mut rng);
    ViewPair::new(view_a, view_b, kept_a, kept_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;

    fn scattered(n: usize, seed_val: u64) -> PointCloud {
        let mut rng = seed::rng(seed_val, &[seed::tag("scatter")]);
        PointCloud::new(
            (0..n)
                .map(|_| {
                    Vec3::new(
                        rng.gen_range(-0.45..0.45),
                        rng.gen_range(-0.45..0.45),
                        rng.gen_range(-0.45..0.45),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn keeping_all_clusters_preserves_the_cloud() {
        let cloud = scattered(200, 1);
        let p = kmeans_partition(&cloud, PARTITION_K, 2).unwrap();
        let all: Vec<u32> = (0..PARTITION_K as u32).collect();
        let kept = drop_clusters(&cloud, &p, &all).unwrap();
        assert_eq!(kept.points, cloud.points);
    }

    #[test]
    fn keeping_one_cluster_keeps_exactly_its_points() {
        let cloud = scattered(200, 3);
        let p = kmeans_partition(&cloud, PARTITION_K, 4).unwrap();
        let kept = drop_clusters(&cloud, &p, &[2]).unwrap();
        let want: Vec<Vec3> = cloud
            .points
            .iter()
            .zip(&p.assignments)
            .filter(|(_, &a)| a == 2)
            .map(|(pt, _)| *pt)
            .collect();
        assert_eq!(kept.points, want);
    }

    #[test]
    fn empty_keep_set_is_an_error() {
        let cloud = scattered(100, 5);
        let p = kmeans_partition(&cloud, PARTITION_K, 6).unwrap();
        assert!(drop_clusters(&cloud, &p, &[]).is_err());
    }

    #[test]
    fn kept_fraction_tracks_cluster_share_on_balanced_clusters() {
        // Uniformly scattered points give roughly balanced clusters, so the
        // kept fraction over many seeds tracks |keep| / K within a couple
        // of percent.
        let cloud = scattered(2000, 7);
        let p = kmeans_partition(&cloud, PARTITION_K, 8).unwrap();
        let mut total_fraction = 0.0;
        let runs = 1000;
        for s in 0..runs {
            let mut rng = seed::rng(9, &[s]);
            let size = rng.gen_range(1..=PARTITION_K);
            let mut ids: Vec<u32> = (0..PARTITION_K as u32).collect();
            ids.shuffle(&mut rng);
            let kept = drop_clusters(&cloud, &p, &ids[..size]).unwrap();
            total_fraction += kept.len() as f64 / cloud.len() as f64 / (size as f64 / PARTITION_K as f64);
        }
        let mean_ratio = total_fraction / runs as f64;
        assert!((mean_ratio - 1.0).abs() < 0.02, "mean kept ratio {mean_ratio}");
    }

    #[test]
    fn view_pair_respects_count_constraint_and_cap() {
        let cloud = scattered(3000, 11);
        for s in 0..20u64 {
            let vp = make_view_pair(&cloud, s).unwrap();
            assert!(vp.k_a > vp.k_b);
            assert!(vp.view_a.len() <= VIEW_POINT_CAP);
            assert!(vp.view_b.len() <= VIEW_POINT_CAP);
        }
    }

    #[test]
    fn small_scans_skip_downsampling() {
        let cloud = scattered(800, 13);
        let vp = make_view_pair(&cloud, 3).unwrap();
        // 800 points, clusters only filtered: both views keep every point
        // of their kept clusters.
        let total: usize = vp.view_a.len();
        assert!(total <= 800);
        let p = kmeans_partition(&cloud, PARTITION_K, seed::mix(3, &[seed::tag("viewpair-km")])).unwrap();
        let expect = drop_clusters(&cloud, &p, &vp.kept_a).unwrap();
        assert_eq!(vp.view_a.points, expect.points);
    }

    #[test]
    fn emitted_pairs_are_the_five_legal_ones() {
        let mut seen = std::collections::HashSet::new();
        let mut rng = seed::rng(17, &[]);
        for _ in 0..1000 {
            let (a, b) = draw_kept_counts(&mut rng);
            assert!(a > b, "illegal pair ({a},{b})");
            seen.insert((a, b));
        }
        let legal: std::collections::HashSet<(usize, usize)> =
            [(7, 5), (7, 6), (8, 5), (8, 6), (8, 7)].into_iter().collect();
        assert!(seen.is_subset(&legal));
        assert_eq!(seen, legal, "all five pairs should appear over 1000 draws");
    }

    #[test]
    fn swapped_views_are_rejected() {
        let cloud = scattered(100, 19);
        let vp = make_view_pair(&cloud, 5).unwrap();
        let err = ViewPair::new(
            vp.view_b.clone(),
            vp.view_a.clone(),
            vp.kept_b.clone(),
            vp.kept_a.clone(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn too_small_scan_is_rejected() {
        let cloud = scattered(7, 23);
        assert!(make_view_pair(&cloud, 0).is_err());
    }
}
