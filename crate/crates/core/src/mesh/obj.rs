use super::{MeshError, Result, SurfaceMesh};
use nalgebra::Point3;
use std::fmt::Write as _;
use std::path::Path;

pub fn load_mesh(path: impl AsRef<Path>) -> Result<SurfaceMesh> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| MeshError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_obj(&text)
}

/// Parses `v` and `f` records. Texture/normal indices are ignored,
/// negative (relative) indices are supported.
pub fn parse_obj(text: &str) -> Result<SurfaceMesh> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| MeshError::Parse { line: line_no, msg: e.to_string() })?;
                if c.len() != 3 {
                    return Err(MeshError::Parse { line: line_no, msg: "vertex needs 3 coordinates".into() });
                }
                positions.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = it.collect();
                if refs.len() != 3 {
                    return Err(MeshError::NonTriangularFace { line: line_no, count: refs.len() });
                }
                let mut tri = [0usize; 3];
                for (k, r) in refs.iter().enumerate() {
                    let idx_str = r.split('/').next().unwrap_or("");
                    let idx: i64 = idx_str
                        .parse()
                        .map_err(|_| MeshError::Parse { line: line_no, msg: format!("bad index '{r}'") })?;
                    let n = positions.len() as i64;
                    let abs = if idx < 0 { n + idx } else { idx - 1 };
                    if abs < 0 || idx == 0 {
                        return Err(MeshError::Parse { line: line_no, msg: format!("bad index '{r}'") });
                    }
                    tri[k] = abs as usize;
                }
                faces.push(tri);
            }
            _ => {}
        }
    }
    SurfaceMesh::new(positions, faces)
}

pub fn write_obj(mesh: &SurfaceMesh) -> String {
    obj_string(mesh.positions(), mesh.faces())
}

pub fn obj_string(positions: &[Point3<f64>], faces: &[[usize; 3]]) -> String {
    let mut s = String::with_capacity(positions.len() * 48 + faces.len() * 24);
    for p in positions {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    for f in faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

/// Flat 2D mesh as OBJ with z = 0.
pub fn obj_string_2d(positions: &[[f64; 2]], faces: &[[usize; 3]]) -> String {
    let mut s = String::new();
    for p in positions {
        let _ = writeln!(s, "v {} {} 0", p[0], p[1]);
    }
    for f in faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

/// Polyline as OBJ `l` element.
pub fn polyline_obj(points: &[Point3<f64>]) -> String {
    let mut s = String::new();
    for p in points {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    if points.len() > 1 {
        s.push('l');
        for i in 0..points.len() {
            let _ = write!(s, " {}", i + 1);
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_triangle_obj() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(m.n_vertices(), 3);
        assert_eq!(m.n_faces(), 1);
        assert_eq!((0..3).filter(|&h| m.is_boundary_halfedge(h)).count(), 3);
    }

    #[test]
    fn tetra_obj() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 2 3 4\nf 1 4 3\n";
        let m = parse_obj(src).unwrap();
        assert!(m.boundary_loops().is_empty());
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn quad_is_rejected() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap_err();
        assert!(matches!(err, MeshError::NonTriangularFace { line: 5, count: 4 }));
        assert!(err.to_string().contains("non-triangular face"));
    }

    #[test]
    fn slashes_and_negative_indices() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3/1/1 -2//2 -1\n").unwrap();
        assert_eq!(m.face(0), [0, 1, 2]);
    }

    #[test]
    fn round_trip_is_exact() {
        let m = parse_obj("v 0.1 0.2 0.30000000000000004\nv 1e-7 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        let again = parse_obj(&write_obj(&m)).unwrap();
        assert_eq!(m.positions(), again.positions());
        assert_eq!(m.faces(), again.faces());
    }
}
