use super::vec3::Vec3;
use super::{PointCloud, CUBE_HALF};
use crate::error::{CoreError, Result};

/// What the scalars in a [`VoxelGrid`] mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Values in {0, 1}.
    Binary,
    /// Values in [0, 1].
    Probability,
}

/// Dense N^3 scalar grid over the canonical cube. Values are indexed
/// `[z][y][x]` with x contiguous; grid nodes sit at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub n: usize,
    pub values: Vec<f64>,
    pub kind: GridKind,
}

/// Where interpolation nodes sit relative to the cube.
///
/// `CellCenters` places node `i` at `(i + 0.5)/n - 0.5`; used by occupancy
/// and probability grids so sampling and marching cubes agree. `CellCorners`
/// places node `i` at `i/n - 0.5`; used by multi-resolution feature grids,
/// where dyadic levels must share node planes so that per-level sampling
/// equals sampling a materialized upsampled grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLayout {
    CellCenters,
    CellCorners,
}

impl NodeLayout {
    /// Continuous node coordinate of a cube position along one axis,
    /// clamped to the interpolable range `[0, n-1]`.
    #[inline]
    pub fn node_coord(self, p: f64, n: usize) -> f64 {
        let u = match self {
            NodeLayout::CellCenters => (p + CUBE_HALF) * n as f64 - 0.5,
            NodeLayout::CellCorners => (p + CUBE_HALF) * n as f64,
        };
        u.clamp(0.0, (n - 1) as f64)
    }

    /// Cube position of node `i` along one axis.
    pub fn node_pos(self, i: usize, n: usize) -> f64 {
        match self {
            NodeLayout::CellCenters => (i as f64 + 0.5) / n as f64 - CUBE_HALF,
            NodeLayout::CellCorners => i as f64 / n as f64 - CUBE_HALF,
        }
    }
}

/// 8-corner interpolation stencil for one query point.
#[derive(Debug, Clone, Copy)]
pub struct TrilinearStencil {
    pub i0: [usize; 3],
    pub i1: [usize; 3],
    pub frac: [f64; 3],
}

pub fn trilinear_stencil(layout: NodeLayout, n: usize, p: Vec3) -> TrilinearStencil {
    let mut i0 = [0usize; 3];
    let mut i1 = [0usize; 3];
    let mut frac = [0f64; 3];
    for a in 0..3 {
        let u = layout.node_coord(p.axis(a), n);
        let lo = (u.floor() as usize).min(n - 1);
        i0[a] = lo;
        i1[a] = (lo + 1).min(n - 1);
        frac[a] = u - lo as f64;
    }
    TrilinearStencil { i0, i1, frac }
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Blend the 8 stencil corners of a scalar field given by `get(ix, iy, iz)`.
pub fn trilinear_blend(st: &TrilinearStencil, get: impl Fn(usize, usize, usize) -> f64) -> f64 {
    let [x0, y0, z0] = st.i0;
    let [x1, y1, z1] = st.i1;
    let [fx, fy, fz] = st.frac;
    let c00 = lerp(get(x0, y0, z0), get(x1, y0, z0), fx);
    let c10 = lerp(get(x0, y1, z0), get(x1, y1, z0), fx);
    let c01 = lerp(get(x0, y0, z1), get(x1, y0, z1), fx);
    let c11 = lerp(get(x0, y1, z1), get(x1, y1, z1), fx);
    lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
}

impl VoxelGrid {
    pub fn zeros(n: usize, kind: GridKind) -> Result<Self> {
        if n < 2 {
            return Err(CoreError::config(format!("voxel grid resolution {n} < 2")));
        }
        Ok(VoxelGrid { n, values: vec![0.0; n * n * n], kind })
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.n + iy) * self.n + ix
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.idx(ix, iy, iz)]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, iz: usize, v: f64) {
        let i = self.idx(ix, iy, iz);
        self.values[i] = v;
    }

    /// Center of cell `(ix, iy, iz)` in cube coordinates.
    pub fn cell_center(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        let n = self.n;
        Vec3::new(
            NodeLayout::CellCenters.node_pos(ix, n),
            NodeLayout::CellCenters.node_pos(iy, n),
            NodeLayout::CellCenters.node_pos(iz, n),
        )
    }

    /// Trilinear sample at an arbitrary cube position; queries outside the
    /// node hull clamp to the boundary cell.
    pub fn sample_trilinear(&self, p: Vec3) -> f64 {
        let st = trilinear_stencil(NodeLayout::CellCenters, self.n, p);
        trilinear_blend(&st, |ix, iy, iz| self.get(ix, iy, iz))
    }

    /// Count of strictly-positive cells.
    pub fn occupied_count(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0.5).count()
    }

    /// Binary grid from thresholding at `iso`; exactly-`iso` maps to 0.
    pub fn threshold(&self, iso: f64) -> VoxelGrid {
        VoxelGrid {
            n: self.n,
            values: self.values.iter().map(|&v| if v > iso { 1.0 } else { 0.0 }).collect(),
            kind: GridKind::Binary,
        }
    }
}

/// Cell index along one axis for a cube coordinate. The upper boundary
/// (+0.5 exactly) clamps to the last cell; outside points clamp inward.
#[inline]
pub fn cell_index(p: f64, n: usize) -> usize {
    let i = ((p + CUBE_HALF) * n as f64).floor();
    (i.max(0.0) as usize).min(n - 1)
}

/// Binary occupancy of a point cloud: a cell is 1 iff at least one point
/// falls inside it.
pub fn voxelize(cloud: &PointCloud, n: usize) -> Result<VoxelGrid> {
    let mut grid = VoxelGrid::zeros(n, GridKind::Binary)?;
    for p in &cloud.points {
        let ix = cell_index(p.x, n);
        let iy = cell_index(p.y, n);
        let iz = cell_index(p.z, n);
        grid.set(ix, iy, iz, 1.0);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn single_point_at_origin_occupies_center_cell() {
        let cloud = PointCloud::new(vec![Vec3::ZERO]);
        let g = voxelize(&cloud, 32).unwrap();
        assert_eq!(g.occupied_count(), 1);
        assert_eq!(g.get(16, 16, 16), 1.0);
    }

    #[test]
    fn upper_boundary_clamps_to_last_cell() {
        let cloud = PointCloud::new(vec![Vec3::new(0.5, 0.0, -0.5)]);
        let g = voxelize(&cloud, 8).unwrap();
        assert_eq!(g.get(7, 4, 0), 1.0);
    }

    #[test]
    fn voxelize_matches_per_point_floor_oracle() {
        let mut rng = crate::seed::rng(9, &[crate::seed::tag("voxelize")]);
        let points: Vec<Vec3> = (0..1000)
            .map(|_| {
                Vec3::new(
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(-0.5..0.5),
                )
            })
            .collect();
        let n = 16;
        let g = voxelize(&PointCloud::new(points.clone()), n).unwrap();
        let mut expect = std::collections::HashSet::new();
        for p in &points {
            let f = |v: f64| (((v + 0.5) * n as f64).floor() as usize).min(n - 1);
            expect.insert((f(p.x), f(p.y), f(p.z)));
        }
        let mut got = std::collections::HashSet::new();
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    if g.get(ix, iy, iz) > 0.5 {
                        got.insert((ix, iy, iz));
                    }
                }
            }
        }
        assert_eq!(got, expect);
    }

    #[test]
    fn sample_at_node_returns_stored_value() {
        let mut g = VoxelGrid::zeros(4, GridKind::Probability).unwrap();
        g.set(1, 2, 3, 0.73);
        let p = g.cell_center(1, 2, 3);
        assert_eq!(g.sample_trilinear(p), 0.73);
    }

    #[test]
    fn sample_midpoint_of_eight_nodes_is_their_mean() {
        let mut g = VoxelGrid::zeros(4, GridKind::Probability).unwrap();
        let mut sum = 0.0;
        for (k, (dz, dy, dx)) in
            itertools_like_corners().into_iter().enumerate()
        {
            let v = (k + 1) as f64 * 0.1;
            g.set(1 + dx, 1 + dy, 1 + dz, v);
            sum += v;
        }
        // Midpoint of nodes (1..2)^3.
        let a = g.cell_center(1, 1, 1);
        let b = g.cell_center(2, 2, 2);
        let mid = (a + b) * 0.5;
        let got = g.sample_trilinear(mid);
        assert!((got - sum / 8.0).abs() < 1e-14);
    }

    fn itertools_like_corners() -> Vec<(usize, usize, usize)> {
        let mut v = Vec::new();
        for dz in 0..2 {
            for dy in 0..2 {
                for dx in 0..2 {
                    v.push((dz, dy, dx));
                }
            }
        }
        v
    }

    #[test]
    fn trilinear_polynomial_is_reproduced_exactly() {
        // f(x,y,z) = a + bx + cy + dz + exy + fxz + gyz + hxyz is in the
        // trilinear span, so interpolation inside the node hull is exact.
        let coef = [0.3, -1.2, 0.7, 2.1, -0.4, 0.9, 1.5, -2.2];
        let f = |p: Vec3| {
            coef[0]
                + coef[1] * p.x
                + coef[2] * p.y
                + coef[3] * p.z
                + coef[4] * p.x * p.y
                + coef[5] * p.x * p.z
                + coef[6] * p.y * p.z
                + coef[7] * p.x * p.y * p.z
        };
        let n = 8;
        let mut g = VoxelGrid::zeros(n, GridKind::Probability).unwrap();
        for iz in 0..n {
            for iy in 0..n {
                for ix in 0..n {
                    g.set(ix, iy, iz, f(g.cell_center(ix, iy, iz)));
                }
            }
        }
        let mut rng = crate::seed::rng(12, &[crate::seed::tag("trilinear")]);
        let hull = 0.5 - 0.5 / n as f64; // outermost node plane
        for _ in 0..200 {
            let p = Vec3::new(
                rng.gen_range(-hull..hull),
                rng.gen_range(-hull..hull),
                rng.gen_range(-hull..hull),
            );
            assert!((g.sample_trilinear(p) - f(p)).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_grid_samples_constant_everywhere() {
        let mut g = VoxelGrid::zeros(5, GridKind::Probability).unwrap();
        g.values.iter_mut().for_each(|v| *v = 0.42);
        let mut rng = crate::seed::rng(1, &[crate::seed::tag("const")]);
        for _ in 0..50 {
            let p = Vec3::new(
                rng.gen_range(-0.55..0.55),
                rng.gen_range(-0.55..0.55),
                rng.gen_range(-0.55..0.55),
            );
            assert_eq!(g.sample_trilinear(p), 0.42);
        }
    }
}
