//! Geometry kernels: triangle meshes, point clouds, voxel grids, trilinear
//! sampling, occupancy queries, isosurface extraction, procedural shape
//! generation, and the text file formats.
//!
//! All coordinates live in the canonical cube `[-0.5, 0.5]^3`.

mod grid;
mod io;
mod marching;
mod mesh;
mod occupancy;
mod shapes;
mod vec3;

pub use grid::{trilinear_blend, voxelize, NodeLayout, VoxelGrid};
pub use io::{
    mesh_from_str, mesh_to_string, pointcloud_from_str, pointcloud_to_string, read_mesh,
    read_pointcloud, write_mesh, write_pointcloud,
};
pub use marching::marching_cubes;
pub use mesh::TriMesh;
pub use occupancy::{occupancy_grid, sample_occupancy, MeshRayIndex, OccupancySamples};
pub use shapes::{generate_shape, shape_parts, sphere_mesh_uv, surface_points as shape_surface_points, Primitive, ShapeCategory};
pub use vec3::Vec3;

use crate::error::{CoreError, Result};

/// Half-extent of the canonical cube.
pub const CUBE_HALF: f64 = 0.5;
/// Padding tolerance for query points just outside the cube.
pub const CUBE_PAD: f64 = 0.05;

/// Point cloud with optional per-point cluster ids.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub clusters: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        PointCloud { points, clusters: None }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.points {
            if !p.is_finite() {
                return Err(CoreError::input("point cloud contains non-finite coordinates"));
            }
        }
        if let Some(c) = &self.clusters {
            if c.len() != self.points.len() {
                return Err(CoreError::input("cluster ids do not match point count"));
            }
        }
        Ok(())
    }
}

/// Spatial query points with occupancy labels and an optional confidence
/// mask (used by self-training batches).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryBatch {
    pub points: Vec<Vec3>,
    pub labels: Vec<f64>,
    pub mask: Option<Vec<bool>>,
}

impl QueryBatch {
    pub fn new(points: Vec<Vec3>, labels: Vec<f64>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(CoreError::input("query batch points/labels length mismatch"));
        }
        let bound = CUBE_HALF + CUBE_PAD;
        for p in &points {
            if p.x.abs() > bound || p.y.abs() > bound || p.z.abs() > bound {
                return Err(CoreError::input(format!(
                    "query point {p:?} outside padded cube"
                )));
            }
        }
        Ok(QueryBatch { points, labels, mask: None })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
