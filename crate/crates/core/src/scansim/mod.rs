//! Two-domain scan fabrication: surface sampling, synthetic corruption
//! (occlusion, sparsity, noise, part dropping), k-means partitioning, and
//! the augmented view pairs consumed by consistency training.

mod kmeans;
mod scan;
mod view;

pub use kmeans::{kmeans_objective, kmeans_partition, kmeans_partition_traced, Partition};
pub use scan::{simulate_scan, surface_sample, CullParams, ScanParams};
pub use view::{drop_clusters, make_view_pair, ViewPair, VIEW_POINT_CAP};

/// Cluster count used for part-level augmentation; the smallest value
/// consistent with drawing up to 8 kept clusters.
pub const PARTITION_K: usize = 8;
