//! Procedural test shapes. Everything here is deterministic.

use crate::decomposition::{Segmentation, SiteSpec};
use crate::mesh::SurfaceMesh;
use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub struct Fixture {
    pub mesh: SurfaceMesh,
    pub segmentation: Segmentation,
}

fn grid_tube(rings: &[Vec<Point3<f64>>]) -> SurfaceMesh {
    let n = rings[0].len();
    let m = rings.len();
    let positions: Vec<Point3<f64>> = rings.iter().flatten().copied().collect();
    let idx = |i: usize, j: usize| j * n + (i % n);
    let mut faces = Vec::with_capacity(2 * n * (m - 1));
    for j in 0..m - 1 {
        for i in 0..n {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    SurfaceMesh::new(positions, faces).expect("tube is valid")
}

/// Open tube of revolution around z: `radius(t)` for t in [0, 1], z = t * height.
/// Ring 0 is the bottom loop, ring `n_height` the top.
pub fn revolution(radius: impl Fn(f64) -> f64, height: f64, n_around: usize, n_height: usize) -> SurfaceMesh {
    let rings: Vec<Vec<Point3<f64>>> = (0..=n_height)
        .map(|j| {
            let t = j as f64 / n_height as f64;
            let r = radius(t);
            (0..n_around)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / n_around as f64;
                    Point3::new(r * a.cos(), r * a.sin(), t * height)
                })
                .collect()
        })
        .collect();
    grid_tube(&rings)
}

pub fn cylinder(radius: f64, height: f64, n_around: usize, n_height: usize) -> SurfaceMesh {
    revolution(|_| radius, height, n_around, n_height)
}

/// Ring index -> vertex ids of a generated tube.
pub fn tube_ring(n_around: usize, ring: usize) -> Vec<usize> {
    (0..n_around).map(|i| ring * n_around + i).collect()
}

/// Cylinder whose vertices are displaced randomly (tangentially and radially).
pub fn noisy_cylinder(radius: f64, height: f64, n_around: usize, n_height: usize, amount: f64, seed: u64) -> SurfaceMesh {
    let base = cylinder(radius, height, n_around, n_height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = (2.0 * PI * radius / n_around as f64).min(height / n_height as f64);
    let pos = base
        .positions()
        .iter()
        .enumerate()
        .map(|(v, p)| {
            let boundary_ring = v < n_around || v >= n_around * n_height;
            let mut q = *p;
            let r: f64 = rng.random_range(-1.0..1.0);
            let a: f64 = rng.random_range(-1.0..1.0);
            let z: f64 = rng.random_range(-1.0..1.0);
            let radial = Vector3::new(p.x, p.y, 0.0).normalize();
            let tangent = Vector3::new(-radial.y, radial.x, 0.0);
            q += radial * (r * amount * h) + tangent * (a * amount * h);
            if !boundary_ring {
                q.z += z * amount * h;
            }
            q
        })
        .collect();
    base.with_positions(pos).expect("noise keeps the mesh valid")
}

pub fn uv_sphere(n_lon: usize, n_lat: usize, radius: impl Fn(Vector3<f64>) -> f64) -> SurfaceMesh {
    let (pos, faces) = sphere_arrays(n_lon, n_lat, &radius);
    SurfaceMesh::new(pos, faces).expect("sphere is valid")
}

fn sphere_vertex(n_lon: usize, n_lat: usize, i: usize, j: usize) -> usize {
    // j in 0..=n_lat, 0 = north pole
    if j == 0 {
        0
    } else if j == n_lat {
        1 + (n_lat - 1) * n_lon
    } else {
        1 + (j - 1) * n_lon + (i % n_lon)
    }
}

fn sphere_arrays(
    n_lon: usize,
    n_lat: usize,
    radius: &dyn Fn(Vector3<f64>) -> f64,
) -> (Vec<Point3<f64>>, Vec<[usize; 3]>) {
    let dir = |i: usize, j: usize| {
        let th = PI * j as f64 / n_lat as f64;
        let ph = 2.0 * PI * i as f64 / n_lon as f64;
        Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos())
    };
    let mut pos = Vec::new();
    let d = Vector3::z();
    pos.push(Point3::from(d * radius(d)));
    for j in 1..n_lat {
        for i in 0..n_lon {
            let d = dir(i, j);
            pos.push(Point3::from(d * radius(d)));
        }
    }
    let d = -Vector3::z();
    pos.push(Point3::from(d * radius(d)));
    let v = |i, j| sphere_vertex(n_lon, n_lat, i, j);
    let mut faces = Vec::new();
    for j in 0..n_lat {
        for i in 0..n_lon {
            let (a, b, c, dd) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
            if j == 0 {
                faces.push([a, dd, c]);
            } else if j == n_lat - 1 {
                faces.push([a, c, b]);
            } else {
                faces.push([a, dd, c]);
                faces.push([a, c, b]);
            }
        }
    }
    (pos, faces)
}

pub fn torus(major: f64, minor: f64, n_u: usize, n_v: usize) -> SurfaceMesh {
    let mut pos = Vec::new();
    for j in 0..n_v {
        let v = 2.0 * PI * j as f64 / n_v as f64;
        for i in 0..n_u {
            let u = 2.0 * PI * i as f64 / n_u as f64;
            let r = major + minor * v.cos();
            pos.push(Point3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (j % n_v) * n_u + (i % n_u);
    let mut faces = Vec::new();
    for j in 0..n_v {
        for i in 0..n_u {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    SurfaceMesh::new(pos, faces).expect("torus is valid")
}

/// Tube swept along `center(t)`, t in [0, 1], with rotation-minimizing frames.
pub fn swept_tube(center: impl Fn(f64) -> Point3<f64>, radius: f64, n_around: usize, n_along: usize) -> SurfaceMesh {
    let pts: Vec<Point3<f64>> = (0..=n_along).map(|j| center(j as f64 / n_along as f64)).collect();
    let tangent = |j: usize| {
        let a = pts[j.saturating_sub(1)];
        let b = pts[(j + 1).min(n_along)];
        (b - a).normalize()
    };
    let t0 = tangent(0);
    let helper = if t0.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let mut normal = (helper - t0 * helper.dot(&t0)).normalize();
    let mut rings = Vec::with_capacity(n_along + 1);
    let mut prev_t = t0;
    for j in 0..=n_along {
        let t = tangent(j);
        // parallel transport: rotate the normal by the rotation taking prev_t to t
        let axis = prev_t.cross(&t);
        let s = axis.norm();
        if s > 1e-12 {
            let c = prev_t.dot(&t).clamp(-1.0, 1.0);
            let rot = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), s.atan2(c));
            normal = rot * normal;
        }
        normal = (normal - t * normal.dot(&t)).normalize();
        let binormal = t.cross(&normal);
        prev_t = t;
        rings.push(
            (0..n_around)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / n_around as f64;
                    pts[j] + radius * (a.cos() * normal + a.sin() * binormal)
                })
                .collect::<Vec<_>>(),
        );
    }
    grid_tube(&rings)
}

/// S-shaped bent tube used as a "knot-like" non-trivial tube.
pub fn bent_tube(n_around: usize, n_along: usize) -> SurfaceMesh {
    swept_tube(
        |t| {
            let a = 1.5 * PI * t;
            Point3::new(2.0 * a.sin(), 1.2 * (2.0 * a).sin(), 4.0 * t)
        },
        0.45,
        n_around,
        n_along,
    )
}

#[derive(Clone, Debug)]
pub struct TShapeParams {
    /// longitude subdivisions, multiple of 8
    pub n_lon: usize,
    /// latitude bands, even
    pub n_lat: usize,
    pub arm_length: f64,
    pub sharpness: i32,
    /// half width of the arm-tip hole in longitude cells (0 = one-ring hole sites)
    pub hole_lon: usize,
    /// half height of the arm-tip hole in latitude bands
    pub hole_lat: usize,
}

impl Default for TShapeParams {
    fn default() -> Self {
        TShapeParams { n_lon: 48, n_lat: 24, arm_length: 1.2, sharpness: 6, hole_lon: 2, hole_lat: 2 }
    }
}

impl TShapeParams {
    /// Roughly `target` triangles with 2:1 longitude/latitude resolution.
    pub fn with_triangles(target: usize) -> Self {
        // 2 * n_lon * n_lat triangles, n_lon = 2 n_lat
        let n_lat = ((target as f64 / 4.0).sqrt() / 2.0).round() as usize * 2;
        let n_lon = (2 * n_lat).div_ceil(8) * 8;
        let hole_lon = (n_lon / 48).max(1) * 2;
        let hole_lat = (n_lat / 24).max(1) * 2;
        TShapeParams { n_lon, n_lat, hole_lon, hole_lat, ..Default::default() }
    }
}

/// Deformed sphere with three arms (longitudes 0, 180 and 270 degrees), arm tips
/// opened, and a theta-graph of meridians (90, 225, 315 degrees) separating three parts.
pub fn t_shape(p: &TShapeParams) -> Fixture {
    assert!(p.n_lon % 8 == 0 && p.n_lat % 2 == 0);
    let arms: Vec<Vector3<f64>> =
        [0.0f64, 180.0, 270.0].iter().map(|d| Vector3::new(d.to_radians().cos(), d.to_radians().sin(), 0.0)).collect();
    let radius = |d: Vector3<f64>| 1.0 + p.arm_length * arms.iter().map(|a| d.dot(a).max(0.0).powi(p.sharpness)).sum::<f64>();
    let (pos, faces) = sphere_arrays(p.n_lon, p.n_lat, &radius);
    let arm_lon = [0, p.n_lon / 2, 3 * p.n_lon / 4];
    let eq = p.n_lat / 2;

    let mut keep = vec![true; faces.len()];
    let mut sites = Vec::new();
    if p.hole_lon == 0 {
        for &c in &arm_lon {
            sites.push(SiteSpec { kind: "hole".into(), ids: vec![sphere_vertex(p.n_lon, p.n_lat, c, eq)] });
        }
    } else {
        // faces are emitted band by band: band 0 has n_lon faces, inner bands 2 n_lon
        let face_of = |i: usize, j: usize| -> [usize; 2] {
            let base = p.n_lon + (j - 1) * 2 * p.n_lon + 2 * i;
            [base, base + 1]
        };
        for &c in &arm_lon {
            for dj in 0..2 * p.hole_lat {
                let j = eq - p.hole_lat + dj;
                for di in 0..2 * p.hole_lon {
                    let i = (c + p.n_lon - p.hole_lon + di) % p.n_lon;
                    for f in face_of(i, j) {
                        keep[f] = false;
                    }
                }
            }
        }
    }
    let kept: Vec<[usize; 3]> = faces.iter().zip(&keep).filter(|(_, k)| **k).map(|(f, _)| *f).collect();
    let mut used = vec![false; pos.len()];
    kept.iter().flatten().for_each(|&v| used[v] = true);
    let mut map = vec![usize::MAX; pos.len()];
    let mut new_pos = Vec::new();
    for (v, u) in used.iter().enumerate() {
        if *u {
            map[v] = new_pos.len();
            new_pos.push(pos[v]);
        }
    }
    let new_faces: Vec<[usize; 3]> = kept.iter().map(|f| [map[f[0]], map[f[1]], map[f[2]]]).collect();
    let mesh = SurfaceMesh::new(new_pos, new_faces).expect("T shape is valid");

    let meridian = |i: usize| -> Vec<usize> { (0..=p.n_lat).map(|j| map[sphere_vertex(p.n_lon, p.n_lat, i, j)]).collect() };
    let (m90, m225, m315) = (meridian(p.n_lon / 4), meridian(5 * p.n_lon / 8), meridian(7 * p.n_lon / 8));
    let join = |a: &Vec<usize>, b: &Vec<usize>| -> Vec<usize> {
        let mut l = a.clone();
        l.extend(b.iter().rev().skip(1));
        l
    };
    let segmentation = Segmentation {
        loops: vec![join(&m90, &m225), join(&m225, &m315)],
        open_sites: sites,
        traversal: None,
        names: vec![],
    };
    Fixture { mesh, segmentation }
}

/// Two-part chain: a frustum (radius `r_bottom` to 1) below a unit cylinder,
/// separated at the ring `n_part` rings above the bottom.
pub fn frustum_chain(r_bottom: f64, part_height: f64, n_around: usize, n_part: usize) -> Fixture {
    let mesh = revolution(
        |t| if t < 0.5 { r_bottom + (1.0 - r_bottom) * (2.0 * t) } else { 1.0 },
        2.0 * part_height,
        n_around,
        2 * n_part,
    );
    let mut ring = tube_ring(n_around, n_part);
    ring.push(ring[0]);
    Fixture {
        mesh,
        segmentation: Segmentation { loops: vec![ring], open_sites: vec![], traversal: Some(vec![0, 1]), names: vec![] },
    }
}

/// Straight tube split into `parts` equal chain links.
pub fn tube_chain(parts: usize, n_around: usize, rings_per_part: usize) -> Fixture {
    let mesh = cylinder(1.0, parts as f64 * 1.5, n_around, parts * rings_per_part);
    let loops = (1..parts)
        .map(|k| {
            let mut r = tube_ring(n_around, k * rings_per_part);
            r.push(r[0]);
            r
        })
        .collect();
    Fixture {
        mesh,
        segmentation: Segmentation { loops, open_sites: vec![], traversal: Some((0..parts).collect()), names: vec![] },
    }
}
