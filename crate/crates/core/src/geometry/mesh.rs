use super::vec3::Vec3;
use crate::error::{CoreError, Result};
use std::collections::HashMap;

/// Triangle mesh in canonical object coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        let n = vertices.len() as u32;
        for t in &triangles {
            if t.iter().any(|&i| i >= n) {
                return Err(CoreError::input(format!("triangle {t:?} references missing vertex")));
            }
        }
        Ok(TriMesh { vertices, triangles })
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn bbox(&self) -> Option<(Vec3, Vec3)> {
        let mut it = self.vertices.iter();
        let first = *it.next()?;
        let mut lo = first;
        let mut hi = first;
        for &v in it {
            lo = lo.min_elem(v);
            hi = hi.max_elem(v);
        }
        Some((lo, hi))
    }

    pub fn triangle_vertices(&self, i: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[i];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(i);
        (b - a).cross(c - a).norm() * 0.5
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    /// Enclosed volume via the divergence theorem. Positive for outward
    /// orientation.
    pub fn signed_volume(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.triangles.len() {
            let [a, b, c] = self.triangle_vertices(i);
            acc += a.dot(b.cross(c));
        }
        acc / 6.0
    }

    /// Edge-manifold closedness: every undirected edge borders exactly two
    /// triangles.
    pub fn is_watertight(&self) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        let mut counts: HashMap<(u32, u32), u32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        counts.values().all(|&c| c == 2)
    }

    /// Number of connected components of the triangle adjacency graph.
    pub fn connected_components(&self) -> usize {
        let n = self.vertices.len();
        if n == 0 {
            return 0;
        }
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(parent: &mut [u32], mut i: u32) -> u32 {
            while parent[i as usize] != i {
                parent[i as usize] = parent[parent[i as usize] as usize];
                i = parent[i as usize];
            }
            i
        }
        for t in &self.triangles {
            for k in 0..2 {
                let a = find(&mut parent, t[k]);
                let b = find(&mut parent, t[k + 1]);
                if a != b {
                    parent[a as usize] = b;
                }
            }
        }
        let mut used: Vec<bool> = vec![false; n];
        for t in &self.triangles {
            for &v in t {
                used[v as usize] = true;
            }
        }
        let mut roots = std::collections::HashSet::new();
        for (i, &u) in used.iter().enumerate() {
            if u {
                roots.insert(find(&mut parent, i as u32));
            }
        }
        roots.len()
    }

    /// Concatenate meshes without welding shared positions.
    pub fn concat(meshes: &[TriMesh]) -> TriMesh {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for m in meshes {
            let off = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            triangles.extend(m.triangles.iter().map(|t| [t[0] + off, t[1] + off, t[2] + off]));
        }
        TriMesh { vertices, triangles }
    }
}

/// Translate and uniformly scale so the bounding box is centered at the
/// origin with maximum extent 0.9 (5% margin to each cube face).
pub fn normalize_mesh(mesh: &TriMesh) -> Result<TriMesh> {
    let (lo, hi) = mesh
        .bbox()
        .ok_or_else(|| CoreError::input("cannot normalize an empty mesh"))?;
    let center = (lo + hi) * 0.5;
    let extent = hi - lo;
    let max_extent = extent.x.max(extent.y).max(extent.z);
    if max_extent < 1e-12 {
        return Err(CoreError::input("mesh has zero extent"));
    }
    let scale = 0.9 / max_extent;
    let vertices = mesh.vertices.iter().map(|&v| (v - center) * scale).collect();
    Ok(TriMesh { vertices, triangles: mesh.triangles.clone() })
}

/// Axis-aligned cube as 12 triangles with outward orientation.
#[cfg(test)]
pub(crate) fn unit_cube_mesh(center: Vec3, edge: f64) -> TriMesh {
    cube_mesh(center, edge)
}

#[cfg(test)]
pub(crate) fn cube_mesh(center: Vec3, edge: f64) -> TriMesh {
    let h = edge * 0.5;
    let v = |sx: f64, sy: f64, sz: f64| center + Vec3::new(sx * h, sy * h, sz * h);
    let vertices = vec![
        v(-1.0, -1.0, -1.0), // 0
        v(1.0, -1.0, -1.0),  // 1
        v(1.0, 1.0, -1.0),   // 2
        v(-1.0, 1.0, -1.0),  // 3
        v(-1.0, -1.0, 1.0),  // 4
        v(1.0, -1.0, 1.0),   // 5
        v(1.0, 1.0, 1.0),    // 6
        v(-1.0, 1.0, 1.0),   // 7
    ];
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2], // z = -1
        [4, 5, 6],
        [4, 6, 7], // z = +1
        [0, 1, 5],
        [0, 5, 4], // y = -1
        [3, 6, 2],
        [3, 7, 6], // y = +1
        [0, 7, 3],
        [0, 4, 7], // x = -1
        [1, 2, 6],
        [1, 6, 5], // x = +1
    ];
    TriMesh { vertices, triangles }
}
