//! Text formats for meshes and point clouds.
//!
//! Native mesh format:
//!
//! ```text
//! scoda-mesh v1
//! <vertex count> <face count>
//! v x y z
//! f i j k        (0-based indices)
//! ```
//!
//! A Wavefront-style reader (1-based `f` indices, unknown lines skipped) is
//! accepted on input and auto-detected by the missing header. Coordinates
//! are written as shortest-round-trip f32, so write -> read preserves
//! 32-bit precision exactly.
//!
//! Point clouds are one `x y z [cluster]` line per point with `#` comments.

use super::mesh::TriMesh;
use super::vec3::Vec3;
use super::PointCloud;
use crate::error::{CoreError, Result};
use std::path::Path;

const MESH_HEADER: &str = "scoda-mesh v1";

fn fmt_f32(v: f64) -> String {
    format!("{}", v as f32)
}

pub fn mesh_to_string(mesh: &TriMesh) -> String {
    let mut out = String::new();
    out.push_str(MESH_HEADER);
    out.push('\n');
    out.push_str(&format!("{} {}\n", mesh.vertices.len(), mesh.triangles.len()));
    for v in &mesh.vertices {
        out.push_str(&format!("v {} {} {}\n", fmt_f32(v.x), fmt_f32(v.y), fmt_f32(v.z)));
    }
    for t in &mesh.triangles {
        out.push_str(&format!("f {} {} {}\n", t[0], t[1], t[2]));
    }
    out
}

pub fn mesh_from_str(text: &str) -> Result<TriMesh> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == MESH_HEADER => parse_native(lines),
        _ => parse_wavefront(text),
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> CoreError {
    CoreError::Parse { line: line + 1, msg: msg.into() }
}

fn parse_native(mut lines: std::iter::Enumerate<std::str::Lines>) -> Result<TriMesh> {
    let (ln, counts) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing count line"))?;
    let mut it = counts.split_whitespace();
    let nv: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(ln, "bad vertex count"))?;
    let nf: usize = it
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(ln, "bad face count"))?;

    let mut vertices = Vec::with_capacity(nv);
    let mut triangles = Vec::with_capacity(nf);
    for (ln, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut coord = || -> Result<f64> {
                    fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err(ln, "bad vertex coordinate"))
                };
                let (x, y, z) = (coord()?, coord()?, coord()?);
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut idx = || -> Result<u32> {
                    fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err(ln, "bad face index"))
                };
                triangles.push([idx()?, idx()?, idx()?]);
            }
            Some(other) => return Err(parse_err(ln, format!("unexpected token '{other}'"))),
            None => {}
        }
    }
    if vertices.len() != nv || triangles.len() != nf {
        return Err(parse_err(
            0,
            format!(
                "truncated mesh: declared {nv} vertices / {nf} faces, found {} / {}",
                vertices.len(),
                triangles.len()
            ),
        ));
    }
    TriMesh::new(vertices, triangles)
}

fn parse_wavefront(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut coord = || -> Result<f64> {
                    fields
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err(ln, "bad vertex coordinate"))
                };
                let (x, y, z) = (coord()?, coord()?, coord()?);
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                // "f 1 2 3" or "f 1/4/7 2/5/8 3/6/9"; indices are 1-based.
                let mut idx = || -> Result<u32> {
                    let field = fields.next().ok_or_else(|| parse_err(ln, "missing face index"))?;
                    let head = field.split('/').next().unwrap_or(field);
                    let i: i64 =
                        head.parse().map_err(|_| parse_err(ln, "bad face index"))?;
                    if i < 1 {
                        return Err(parse_err(ln, "face indices must be >= 1"));
                    }
                    Ok((i - 1) as u32)
                };
                triangles.push([idx()?, idx()?, idx()?]);
            }
            _ => {} // normals, groups, materials: ignored
        }
    }
    if vertices.is_empty() && triangles.is_empty() {
        return Err(parse_err(0, "no mesh data found"));
    }
    TriMesh::new(vertices, triangles)
}

pub fn write_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<TriMesh> {
    mesh_from_str(&std::fs::read_to_string(path)?)
}

pub fn pointcloud_to_string(cloud: &PointCloud) -> String {
    let mut out = String::new();
    for (i, p) in cloud.points.iter().enumerate() {
        match &cloud.clusters {
            Some(c) => out.push_str(&format!(
                "{} {} {} {}\n",
                fmt_f32(p.x),
                fmt_f32(p.y),
                fmt_f32(p.z),
                c[i]
            )),
            None => {
                out.push_str(&format!("{} {} {}\n", fmt_f32(p.x), fmt_f32(p.y), fmt_f32(p.z)))
            }
        }
    }
    out
}

pub fn pointcloud_from_str(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut clusters: Vec<u32> = Vec::new();
    let mut saw_cluster = false;
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(parse_err(ln, format!("expected 3 or 4 fields, got {}", fields.len())));
        }
        let coord = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| parse_err(ln, format!("bad coordinate '{s}'")))
        };
        points.push(Vec3::new(coord(fields[0])?, coord(fields[1])?, coord(fields[2])?));
        if fields.len() == 4 {
            saw_cluster = true;
            clusters.push(
                fields[3]
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad cluster id '{}'", fields[3])))?,
            );
        } else if saw_cluster {
            return Err(parse_err(ln, "mixed lines with and without cluster ids"));
        }
    }
    if saw_cluster && clusters.len() != points.len() {
        return Err(parse_err(0, "mixed lines with and without cluster ids"));
    }
    let cloud = PointCloud {
        points,
        clusters: if saw_cluster { Some(clusters) } else { None },
    };
    cloud.validate()?;
    Ok(cloud)
}

pub fn write_pointcloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    std::fs::write(path, pointcloud_to_string(cloud))?;
    Ok(())
}

pub fn read_pointcloud(path: &Path) -> Result<PointCloud> {
    pointcloud_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_shape, ShapeCategory};

    #[test]
    fn mesh_round_trip_preserves_f32_coordinates() {
        let m = generate_shape(ShapeCategory::Blocky, 2);
        let text = mesh_to_string(&m);
        let back = mesh_from_str(&text).unwrap();
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.vertices.len(), m.vertices.len());
        for (a, b) in m.vertices.iter().zip(&back.vertices) {
            assert_eq!(a.x as f32, b.x as f32);
            assert_eq!(a.y as f32, b.y as f32);
            assert_eq!(a.z as f32, b.z as f32);
        }
        // Second round trip is byte-identical.
        assert_eq!(mesh_to_string(&back), text);
    }

    #[test]
    fn wavefront_input_is_accepted() {
        let obj = "# comment\no thing\nv 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf 1/1/1 2/2/1 3/3/1\n";
        let m = mesh_from_str(obj).unwrap();
        assert_eq!(m.vertices.len(), 3);
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn truncated_mesh_is_rejected() {
        let text = "scoda-mesh v1\n3 1\nv 0 0 0\nv 1 0 0\n";
        let err = mesh_from_str(text).unwrap_err();
        assert!(matches!(err, CoreError::Parse { .. }));
    }

    #[test]
    fn pointcloud_skips_comments_and_keeps_clusters() {
        let text = "# header\n0.5 0 0 2\n# interior comment\n-0.25 0.125 0 1\n";
        let c = pointcloud_from_str(text).unwrap();
        assert_eq!(c.points.len(), 2);
        assert_eq!(c.clusters, Some(vec![2, 1]));
        let round = pointcloud_from_str(&pointcloud_to_string(&c)).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn malformed_pointcloud_reports_line() {
        let text = "0 0 0\n0 zero 0\n";
        match pointcloud_from_str(text) {
            Err(CoreError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
