//! Procedural watertight shape generation. Each category composes a few
//! analytic primitives; the union field is sampled on a fine lattice and
//! extracted with marching tetrahedra over a Kuhn 6-tet cube split, which
//! shares face diagonals between neighboring cubes and therefore cannot
//! crack.

use super::mesh::{normalize_mesh, TriMesh};
use super::vec3::Vec3;
use crate::seed;
use rand::Rng;
use std::collections::HashMap;

/// Lattice resolution for shape extraction.
const GEN_RES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeCategory {
    Blocky,
    TableLike,
    LampLike,
}

impl ShapeCategory {
    pub fn name(self) -> &'static str {
        match self {
            ShapeCategory::Blocky => "blocky",
            ShapeCategory::TableLike => "table",
            ShapeCategory::LampLike => "lamp",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "blocky" => Some(ShapeCategory::Blocky),
            "table" => Some(ShapeCategory::TableLike),
            "lamp" => Some(ShapeCategory::LampLike),
            _ => None,
        }
    }

    pub fn all() -> [ShapeCategory; 3] {
        [ShapeCategory::Blocky, ShapeCategory::TableLike, ShapeCategory::LampLike]
    }
}

/// Analytic solid with a signed distance (negative inside).
#[derive(Debug, Clone)]
pub enum Primitive {
    Box { center: Vec3, half: Vec3 },
    /// Axis-aligned cylinder along `axis` (0, 1, or 2).
    Cylinder { center: Vec3, radius: f64, half_height: f64, axis: usize },
    Sphere { center: Vec3, radius: f64 },
}

impl Primitive {
    pub fn sdf(&self, p: Vec3) -> f64 {
        match *self {
            Primitive::Box { center, half } => {
                let d = p - center;
                let q = Vec3::new(d.x.abs() - half.x, d.y.abs() - half.y, d.z.abs() - half.z);
                let outside = Vec3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
                let inside = q.x.max(q.y).max(q.z).min(0.0);
                outside + inside
            }
            Primitive::Cylinder { center, radius, half_height, axis } => {
                let d = p - center;
                let h = d.axis(axis);
                let (u, v) = match axis {
                    0 => (d.y, d.z),
                    1 => (d.x, d.z),
                    _ => (d.x, d.y),
                };
                let radial = (u * u + v * v).sqrt() - radius;
                let vertical = h.abs() - half_height;
                let outside =
                    (radial.max(0.0).powi(2) + vertical.max(0.0).powi(2)).sqrt();
                outside + radial.max(vertical).min(0.0)
            }
            Primitive::Sphere { center, radius } => (p - center).norm() - radius,
        }
    }

    /// Watertight triangle mesh of the primitive alone.
    pub fn mesh(&self) -> TriMesh {
        match *self {
            Primitive::Box { center, half } => box_mesh(center, half),
            Primitive::Cylinder { center, radius, half_height, axis } => {
                cylinder_mesh(center, radius, half_height, axis, 24)
            }
            Primitive::Sphere { center, radius } => sphere_mesh_uv(center, radius, 24, 12),
        }
    }
}

fn union_sdf(parts: &[Primitive], p: Vec3) -> f64 {
    parts.iter().map(|prim| prim.sdf(p)).fold(f64::INFINITY, f64::min)
}

/// The seeded primitive decomposition of a category. Table-like shapes are
/// always a top slab plus four legs that overlap it.
pub fn shape_parts(category: ShapeCategory, seed_val: u64) -> Vec<Primitive> {
    let mut rng = seed::rng(seed_val, &[seed::tag("shape"), seed::tag(category.name())]);
    match category {
        ShapeCategory::Blocky => {
            let n_boxes = rng.gen_range(2..=4usize);
            let mut parts = vec![Primitive::Box {
                center: Vec3::ZERO,
                half: Vec3::new(
                    rng.gen_range(0.15..0.3),
                    rng.gen_range(0.15..0.3),
                    rng.gen_range(0.15..0.3),
                ),
            }];
            for _ in 1..n_boxes {
                parts.push(Primitive::Box {
                    center: Vec3::new(
                        rng.gen_range(-0.15..0.15),
                        rng.gen_range(-0.15..0.15),
                        rng.gen_range(-0.15..0.15),
                    ),
                    half: Vec3::new(
                        rng.gen_range(0.08..0.22),
                        rng.gen_range(0.08..0.22),
                        rng.gen_range(0.08..0.22),
                    ),
                });
            }
            parts
        }
        ShapeCategory::TableLike => {
            let top_half = Vec3::new(
                rng.gen_range(0.28..0.4),
                rng.gen_range(0.28..0.4),
                rng.gen_range(0.02..0.05),
            );
            let top_z = rng.gen_range(0.1..0.25);
            let leg_r = rng.gen_range(0.025..0.05);
            let leg_inset = rng.gen_range(0.05..0.09);
            let leg_top = top_z - top_half.z * 0.5; // overlap into the slab
            let leg_bottom = -0.4;
            let leg_half = (leg_top - leg_bottom) * 0.5;
            let leg_center_z = (leg_top + leg_bottom) * 0.5;
            let mut parts = vec![Primitive::Box {
                center: Vec3::new(0.0, 0.0, top_z),
                half: top_half,
            }];
            for &sx in &[-1.0, 1.0] {
                for &sy in &[-1.0, 1.0] {
                    parts.push(Primitive::Box {
                        center: Vec3::new(
                            sx * (top_half.x - leg_inset),
                            sy * (top_half.y - leg_inset),
                            leg_center_z,
                        ),
                        half: Vec3::new(leg_r, leg_r, leg_half + 0.01),
                    });
                }
            }
            parts
        }
        ShapeCategory::LampLike => {
            let base_r = rng.gen_range(0.12..0.2);
            let base_h = rng.gen_range(0.02..0.05);
            let pole_r = rng.gen_range(0.02..0.04);
            let shade_r = rng.gen_range(0.1..0.18);
            let shade_z = rng.gen_range(0.2..0.33);
            vec![
                Primitive::Cylinder {
                    center: Vec3::new(0.0, 0.0, -0.4 + base_h),
                    radius: base_r,
                    half_height: base_h,
                    axis: 2,
                },
                Primitive::Cylinder {
                    center: Vec3::new(0.0, 0.0, (shade_z - 0.4) * 0.5),
                    radius: pole_r,
                    half_height: (shade_z + 0.4) * 0.5 + 0.02,
                    axis: 2,
                },
                Primitive::Sphere { center: Vec3::new(0.0, 0.0, shade_z), radius: shade_r },
            ]
        }
    }
}

/// Deterministic watertight mesh for `(category, seed)`: union field on a
/// fine lattice, marching tetrahedra, then normalization to max extent 0.9.
pub fn generate_shape(category: ShapeCategory, seed_val: u64) -> TriMesh {
    let parts = shape_parts(category, seed_val);
    let n = GEN_RES;
    // Field sampled at cell centers; shapes stay comfortably inside the
    // lattice so the extracted surface is closed.
    let mut field = vec![0f64; n * n * n];
    let pos = |i: usize| (i as f64 + 0.5) / n as f64 - 0.5;
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                field[(iz * n + iy) * n + ix] =
                    union_sdf(&parts, Vec3::new(pos(ix), pos(iy), pos(iz)));
            }
        }
    }
    let mesh = marching_tetrahedra(&field, n);
    normalize_mesh(&mesh).expect("generated field produced an empty surface")
}

/// Kuhn decomposition: six tetrahedra per cube, all sharing the main
/// diagonal. Corner ids are bit masks (bit0 = x, bit1 = y, bit2 = z).
const KUHN_TETS: [[usize; 4]; 6] = [
    [0, 1, 3, 7],
    [0, 1, 5, 7],
    [0, 2, 3, 7],
    [0, 2, 6, 7],
    [0, 4, 5, 7],
    [0, 4, 6, 7],
];

fn marching_tetrahedra(field: &[f64], n: usize) -> TriMesh {
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let mut edge_ids: HashMap<(u32, u32), u32> = HashMap::new();
    let pos = |i: usize| (i as f64 + 0.5) / n as f64 - 0.5;
    let node_index =
        |x: usize, y: usize, z: usize| -> u32 { ((z * n + y) * n + x) as u32 };

    let mut corner_nodes = [0u32; 8];
    let mut corner_pos = [Vec3::ZERO; 8];
    let mut corner_val = [0f64; 8];

    for k in 0..n - 1 {
        for j in 0..n - 1 {
            for i in 0..n - 1 {
                let mut any_neg = false;
                let mut any_pos = false;
                for c in 0..8 {
                    let (dx, dy, dz) = (c & 1, (c >> 1) & 1, (c >> 2) & 1);
                    let (x, y, z) = (i + dx, j + dy, k + dz);
                    corner_nodes[c] = node_index(x, y, z);
                    corner_pos[c] = Vec3::new(pos(x), pos(y), pos(z));
                    let v = field[(z * n + y) * n + x];
                    corner_val[c] = v;
                    if v < 0.0 {
                        any_neg = true;
                    } else {
                        any_pos = true;
                    }
                }
                if !(any_neg && any_pos) {
                    continue;
                }
                for tet in &KUHN_TETS {
                    march_one_tet(
                        tet,
                        &corner_nodes,
                        &corner_pos,
                        &corner_val,
                        &mut edge_ids,
                        &mut vertices,
                        &mut triangles,
                    );
                }
            }
        }
    }
    TriMesh { vertices, triangles }
}

fn march_one_tet(
    tet: &[usize; 4],
    nodes: &[u32; 8],
    pos: &[Vec3; 8],
    val: &[f64; 8],
    edge_ids: &mut HashMap<(u32, u32), u32>,
    vertices: &mut Vec<Vec3>,
    triangles: &mut Vec<[u32; 3]>,
) {
    let mut inside = [false; 4];
    let mut n_inside = 0;
    for (slot, &c) in tet.iter().enumerate() {
        if val[c] < 0.0 {
            inside[slot] = true;
            n_inside += 1;
        }
    }
    if n_inside == 0 || n_inside == 4 {
        return;
    }

    let mut edge_vertex = |a: usize, b: usize| -> u32 {
        let (na, nb) = (nodes[a], nodes[b]);
        let key = (na.min(nb), na.max(nb));
        *edge_ids.entry(key).or_insert_with(|| {
            // Interpolate in canonical node order so shared edges agree.
            let (lo, hi) = if na < nb { (a, b) } else { (b, a) };
            let t = (0.0 - val[lo]) / (val[hi] - val[lo]);
            let t = t.clamp(1e-6, 1.0 - 1e-6);
            let p = pos[lo] + (pos[hi] - pos[lo]) * t;
            let id = vertices.len() as u32;
            vertices.push(p);
            id
        })
    };

    let ins: Vec<usize> = (0..4).filter(|&s| inside[s]).collect();
    let outs: Vec<usize> = (0..4).filter(|&s| !inside[s]).collect();

    let mut emit = |mut tri: [u32; 3], outward_hint: Vec3, anchor: Vec3, vertices: &Vec<Vec3>| {
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return;
        }
        let p0 = vertices[tri[0] as usize];
        let p1 = vertices[tri[1] as usize];
        let p2 = vertices[tri[2] as usize];
        let normal = (p1 - p0).cross(p2 - p0);
        if normal.dot(outward_hint - anchor) < 0.0 {
            tri.swap(1, 2);
        }
        triangles.push(tri);
    };

    match n_inside {
        1 => {
            let a = ins[0];
            let tri = [
                edge_vertex(tet[a], tet[outs[0]]),
                edge_vertex(tet[a], tet[outs[1]]),
                edge_vertex(tet[a], tet[outs[2]]),
            ];
            let out_centroid = (pos[tet[outs[0]]] + pos[tet[outs[1]]] + pos[tet[outs[2]]]) / 3.0;
            emit(tri, out_centroid, pos[tet[a]], vertices);
        }
        3 => {
            let b = outs[0];
            let tri = [
                edge_vertex(tet[b], tet[ins[0]]),
                edge_vertex(tet[b], tet[ins[1]]),
                edge_vertex(tet[b], tet[ins[2]]),
            ];
            let in_centroid = (pos[tet[ins[0]]] + pos[tet[ins[1]]] + pos[tet[ins[2]]]) / 3.0;
            emit(tri, pos[tet[b]], in_centroid, vertices);
        }
        _ => {
            // 2 inside / 2 outside: a quad, split along one diagonal.
            let (a0, a1) = (ins[0], ins[1]);
            let (b0, b1) = (outs[0], outs[1]);
            let q0 = edge_vertex(tet[a0], tet[b0]);
            let q1 = edge_vertex(tet[a0], tet[b1]);
            let q2 = edge_vertex(tet[a1], tet[b1]);
            let q3 = edge_vertex(tet[a1], tet[b0]);
            let in_c = (pos[tet[a0]] + pos[tet[a1]]) * 0.5;
            let out_c = (pos[tet[b0]] + pos[tet[b1]]) * 0.5;
            emit([q0, q1, q2], out_c, in_c, vertices);
            emit([q0, q2, q3], out_c, in_c, vertices);
        }
    }
}

/// Area-proportional surface samples via barycentric draws. Used both for
/// occupancy label generation and scan simulation.
pub fn surface_points(mesh: &TriMesh, n: usize, seed_val: u64) -> Vec<Vec3> {
    if mesh.is_empty() || n == 0 {
        return Vec::new();
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for i in 0..mesh.triangles.len() {
        total += mesh.triangle_area(i);
        cumulative.push(total);
    }
    let mut rng = seed::rng(seed_val, &[seed::tag("surface-sample")]);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.gen_range(0.0..total);
        let ti = cumulative.partition_point(|&c| c < r).min(mesh.triangles.len() - 1);
        let [a, b, c] = mesh.triangle_vertices(ti);
        let (mut u, mut v): (f64, f64) = (rng.gen(), rng.gen());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        out.push(a + (b - a) * u + (c - a) * v);
    }
    out
}

pub(crate) fn box_mesh(center: Vec3, half: Vec3) -> TriMesh {
    let v = |sx: f64, sy: f64, sz: f64| {
        center + Vec3::new(sx * half.x, sy * half.y, sz * half.z)
    };
    let vertices = vec![
        v(-1.0, -1.0, -1.0),
        v(1.0, -1.0, -1.0),
        v(1.0, 1.0, -1.0),
        v(-1.0, 1.0, -1.0),
        v(-1.0, -1.0, 1.0),
        v(1.0, -1.0, 1.0),
        v(1.0, 1.0, 1.0),
        v(-1.0, 1.0, 1.0),
    ];
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [3, 6, 2],
        [3, 7, 6],
        [0, 7, 3],
        [0, 4, 7],
        [1, 2, 6],
        [1, 6, 5],
    ];
    TriMesh { vertices, triangles }
}

pub(crate) fn cylinder_mesh(
    center: Vec3,
    radius: f64,
    half_height: f64,
    axis: usize,
    segments: usize,
) -> TriMesh {
    let mut vertices = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    let to_world = |u: f64, v: f64, h: f64| -> Vec3 {
        match axis {
            0 => center + Vec3::new(h, u, v),
            1 => center + Vec3::new(u, h, v),
            _ => center + Vec3::new(u, v, h),
        }
    };
    // Ring vertices: bottom then top.
    for &h in &[-half_height, half_height] {
        for s in 0..segments {
            let ang = 2.0 * std::f64::consts::PI * s as f64 / segments as f64;
            vertices.push(to_world(radius * ang.cos(), radius * ang.sin(), h));
        }
    }
    let bottom_center = vertices.len() as u32;
    vertices.push(to_world(0.0, 0.0, -half_height));
    let top_center = vertices.len() as u32;
    vertices.push(to_world(0.0, 0.0, half_height));
    let m = segments as u32;
    for s in 0..m {
        let s1 = (s + 1) % m;
        // side quad
        triangles.push([s, s1, m + s]);
        triangles.push([s1, m + s1, m + s]);
        // caps
        triangles.push([bottom_center, s1, s]);
        triangles.push([top_center, m + s, m + s1]);
    }
    let mesh = TriMesh { vertices, triangles };
    debug_assert!(mesh.is_watertight());
    mesh
}

pub fn sphere_mesh_uv(center: Vec3, radius: f64, lon: usize, lat: usize) -> TriMesh {
    let mut vertices = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    vertices.push(center + Vec3::new(0.0, 0.0, radius)); // north pole = 0
    for i in 1..lat {
        let phi = std::f64::consts::PI * i as f64 / lat as f64;
        for j in 0..lon {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / lon as f64;
            vertices.push(
                center
                    + Vec3::new(
                        radius * phi.sin() * theta.cos(),
                        radius * phi.sin() * theta.sin(),
                        radius * phi.cos(),
                    ),
            );
        }
    }
    let south = vertices.len() as u32;
    vertices.push(center + Vec3::new(0.0, 0.0, -radius));
    let ring = |i: usize, j: usize| -> u32 { (1 + (i - 1) * lon + (j % lon)) as u32 };
    for j in 0..lon {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
        triangles.push([south, ring(lat - 1, j + 1), ring(lat - 1, j)]);
    }
    for i in 1..lat - 1 {
        for j in 0..lon {
            let (a, b, c, d) = (ring(i, j), ring(i, j + 1), ring(i + 1, j), ring(i + 1, j + 1));
            triangles.push([a, c, b]);
            triangles.push([b, c, d]);
        }
    }
    TriMesh { vertices, triangles }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic() {
        for cat in ShapeCategory::all() {
            let a = generate_shape(cat, 5);
            let b = generate_shape(cat, 5);
            assert_eq!(a, b, "{cat:?}");
            let c = generate_shape(cat, 6);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn generated_shapes_are_watertight_and_normalized() {
        for cat in ShapeCategory::all() {
            for seed_val in 0..3u64 {
                let m = generate_shape(cat, seed_val);
                assert!(m.is_watertight(), "{cat:?} seed {seed_val}");
                assert!(m.signed_volume() > 0.0, "{cat:?} seed {seed_val} orientation");
                let (lo, hi) = m.bbox().unwrap();
                let ext = hi - lo;
                let max_ext = ext.x.max(ext.y).max(ext.z);
                assert!((max_ext - 0.9).abs() < 1e-9);
                for i in 0..m.triangles.len() {
                    assert!(m.triangle_area(i) > 0.0, "{cat:?} degenerate triangle {i}");
                }
            }
        }
    }

    #[test]
    fn table_has_five_parts_before_welding_one_after() {
        let parts = shape_parts(ShapeCategory::TableLike, 0);
        assert_eq!(parts.len(), 5);
        let concat = TriMesh::concat(&parts.iter().map(|p| p.mesh()).collect::<Vec<_>>());
        assert_eq!(concat.connected_components(), 5);
        let welded = generate_shape(ShapeCategory::TableLike, 0);
        assert_eq!(welded.connected_components(), 1);
    }

    #[test]
    fn primitive_meshes_are_watertight() {
        let prims = [
            Primitive::Box { center: Vec3::ZERO, half: Vec3::new(0.2, 0.1, 0.3) },
            Primitive::Cylinder { center: Vec3::ZERO, radius: 0.2, half_height: 0.3, axis: 2 },
            Primitive::Sphere { center: Vec3::ZERO, radius: 0.25 },
        ];
        for p in &prims {
            assert!(p.mesh().is_watertight());
        }
    }

    #[test]
    fn surface_samples_lie_on_triangles() {
        let m = generate_shape(ShapeCategory::Blocky, 1);
        let pts = surface_points(&m, 200, 3);
        for p in &pts {
            // Must lie on some triangle plane (and within the triangle).
            let mut best = f64::INFINITY;
            for i in 0..m.triangles.len() {
                let [a, b, c] = m.triangle_vertices(i);
                let n = (b - a).cross(c - a);
                if n.norm() < 1e-18 {
                    continue;
                }
                let d = (*p - a).dot(n) / n.norm();
                best = best.min(d.abs());
            }
            assert!(best < 1e-9, "sample {p:?} off-surface by {best}");
        }
    }

    #[test]
    fn surface_sampling_is_area_proportional() {
        // Two triangles with areas 1 and 3; counts should split ~1:3.
        let mesh = TriMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 2.0, 0.0),
                Vec3::new(10.0, 0.0, 0.0),
                Vec3::new(13.0, 0.0, 0.0),
                Vec3::new(10.0, 2.0, 0.0),
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let n = 10_000usize;
        let pts = surface_points(&mesh, n, 7);
        let near_second = pts.iter().filter(|p| p.x > 5.0).count();
        let expected = n as f64 * 0.75;
        // Chi-square with 1 dof at p=0.001 is 10.83; the count is binomial
        // with sigma ~ sqrt(n * 0.75 * 0.25).
        let sigma = (n as f64 * 0.75 * 0.25).sqrt();
        assert!(
            (near_second as f64 - expected).abs() < 3.3 * sigma,
            "got {near_second}, expected ~{expected}"
        );
        // Determinism.
        let again = surface_points(&mesh, 16, 7);
        assert_eq!(&pts[..16], &again[..]);
    }
}
