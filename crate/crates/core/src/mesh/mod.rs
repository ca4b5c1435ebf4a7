//! Triangle mesh with implicit halfedges.
//!
//! Halfedge `h = 3 * f + k` runs from corner `k` of face `f` to corner `k + 1`.
//! `next`/`prev` are arithmetic, only twins are stored.

mod cut;
mod obj;

pub use cut::*;
pub use obj::*;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("non-triangular face on line {line} ({count} vertices)")]
    NonTriangularFace { line: usize, count: usize },
    #[error("face {face} references missing vertex {vertex}")]
    BadIndex { face: usize, vertex: usize },
    #[error("degenerate face {face}")]
    DegenerateFace { face: usize },
    #[error("non-manifold edge ({0}, {1})")]
    NonManifoldEdge(usize, usize),
    #[error("non-manifold vertex {0}")]
    NonManifoldVertex(usize),
    #[error("vertex {0} is not used by any face")]
    UnreferencedVertex(usize),
    #[error("path is empty or too short")]
    ShortPath,
    #[error("path is not edge-connected between {0} and {1}")]
    NotEdgeConnected(usize, usize),
    #[error("path visits vertex {0} twice")]
    SelfIntersectingPath(usize),
    #[error("path edge ({0}, {1}) lies on the mesh boundary")]
    PathOnBoundary(usize, usize),
    #[error("seam endpoint {0} is not on a boundary loop")]
    SeamEndpointInterior(usize),
    #[error("open boundary site touches an existing boundary at vertex {0}")]
    SiteTouchesBoundary(usize),
    #[error("vertex {0} out of range")]
    VertexOutOfRange(usize),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, MeshError>;

#[derive(Clone, Debug)]
pub struct SurfaceMesh {
    positions: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    twins: Vec<Option<usize>>,
    edge_map: HashMap<(usize, usize), usize>,
}

/// A boundary cycle, oriented with the surface on its left.
/// `halfedges[i]` runs from `vertices[i]` to `vertices[(i + 1) % n]`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundaryLoop {
    pub vertices: Vec<usize>,
    pub halfedges: Vec<usize>,
    pub length: f64,
}

impl SurfaceMesh {
    pub fn new(positions: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let nv = positions.len();
        let mut used = vec![false; nv];
        for (f, tri) in faces.iter().enumerate() {
            for &v in tri {
                if v >= nv {
                    return Err(MeshError::BadIndex { face: f, vertex: v });
                }
                used[v] = true;
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateFace { face: f });
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::UnreferencedVertex(v));
        }

        let mut edge_map = HashMap::with_capacity(faces.len() * 3);
        for (f, tri) in faces.iter().enumerate() {
            for k in 0..3 {
                let key = (tri[k], tri[(k + 1) % 3]);
                if edge_map.insert(key, 3 * f + k).is_some() {
                    let (a, b) = key;
                    return Err(MeshError::NonManifoldEdge(a.min(b), a.max(b)));
                }
            }
        }
        let mut twins = vec![None; faces.len() * 3];
        for (&(a, b), &h) in &edge_map {
            twins[h] = edge_map.get(&(b, a)).copied();
        }

        let mesh = SurfaceMesh { positions, faces, twins, edge_map };

        // degenerate area check, relative to the mesh scale
        let diag = mesh.bbox_diagonal().max(f64::MIN_POSITIVE);
        for f in 0..mesh.faces.len() {
            if mesh.face_area(f) <= 1e-14 * diag * diag {
                return Err(MeshError::DegenerateFace { face: f });
            }
        }
        mesh.check_vertex_manifold()?;
        Ok(mesh)
    }

    // every vertex must have a single fan of faces around it
    fn check_vertex_manifold(&self) -> Result<()> {
        let nv = self.positions.len();
        let mut incident = vec![0usize; nv];
        let mut boundary_out = vec![0usize; nv];
        let mut start = vec![usize::MAX; nv];
        for h in 0..self.twins.len() {
            let v = self.origin(h);
            incident[v] += 1;
            if self.twins[h].is_none() {
                boundary_out[v] += 1;
                start[v] = h;
            } else if start[v] == usize::MAX {
                start[v] = h;
            }
        }
        for v in 0..nv {
            if boundary_out[v] > 1 {
                return Err(MeshError::NonManifoldVertex(v));
            }
            // walk clockwise from the start halfedge: out -> prev -> twin gives the next outgoing
            let mut count = 0;
            let mut h = start[v];
            loop {
                count += 1;
                match self.twins[self.prev(h)] {
                    Some(t) if t != start[v] => h = t,
                    _ => break,
                }
                if count > incident[v] {
                    break;
                }
            }
            if count != incident[v] {
                return Err(MeshError::NonManifoldVertex(v));
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.positions.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_halfedges(&self) -> usize {
        self.twins.len()
    }
    pub fn n_edges(&self) -> usize {
        (0..self.n_halfedges()).filter(|&h| self.is_edge_rep(h)).count()
    }
    pub fn positions(&self) -> &[Point3<f64>] {
        &self.positions
    }
    pub fn position(&self, v: usize) -> Point3<f64> {
        self.positions[v]
    }
    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }
    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    #[inline]
    pub fn origin(&self, h: usize) -> usize {
        self.faces[h / 3][h % 3]
    }
    #[inline]
    pub fn dest(&self, h: usize) -> usize {
        self.faces[h / 3][(h % 3 + 1) % 3]
    }
    #[inline]
    pub fn next(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 1) % 3
    }
    #[inline]
    pub fn prev(&self, h: usize) -> usize {
        3 * (h / 3) + (h % 3 + 2) % 3
    }
    #[inline]
    pub fn twin(&self, h: usize) -> Option<usize> {
        self.twins[h]
    }
    #[inline]
    pub fn is_boundary_halfedge(&self, h: usize) -> bool {
        self.twins[h].is_none()
    }
    /// One representative halfedge per undirected edge.
    #[inline]
    pub fn is_edge_rep(&self, h: usize) -> bool {
        match self.twins[h] {
            None => true,
            Some(t) => h < t,
        }
    }
    pub fn halfedge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_map.get(&(a, b)).copied()
    }
    /// Either direction.
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_map.contains_key(&(a, b)) || self.edge_map.contains_key(&(b, a))
    }

    pub fn edge_length(&self, h: usize) -> f64 {
        (self.positions[self.dest(h)] - self.positions[self.origin(h)]).norm()
    }
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        (self.positions[a] - self.positions[b]).norm()
    }

    pub fn face_normal_raw(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.faces[f];
        let p = &self.positions;
        (p[b] - p[a]).cross(&(p[c] - p[a]))
    }
    pub fn face_area(&self, f: usize) -> f64 {
        0.5 * self.face_normal_raw(f).norm()
    }
    pub fn total_area(&self) -> f64 {
        (0..self.n_faces()).map(|f| self.face_area(f)).sum()
    }

    pub fn bbox(&self) -> (Point3<f64>, Point3<f64>) {
        let mut lo = Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.positions {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }
    pub fn bbox_diagonal(&self) -> f64 {
        if self.positions.is_empty() {
            return 0.0;
        }
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }
    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = 0.0;
        let mut n = 0;
        for h in 0..self.n_halfedges() {
            if self.is_edge_rep(h) {
                sum += self.edge_length(h);
                n += 1;
            }
        }
        if n == 0 { 0.0 } else { sum / n as f64 }
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64
    }

    /// Outgoing halfedges of every vertex, in face order.
    pub fn vertex_halfedges(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_vertices()];
        for h in 0..self.n_halfedges() {
            out[self.origin(h)].push(h);
        }
        out
    }

    pub fn boundary_vertex_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.n_vertices()];
        for h in 0..self.n_halfedges() {
            if self.twins[h].is_none() {
                flags[self.origin(h)] = true;
                flags[self.dest(h)] = true;
            }
        }
        flags
    }

    /// Sorted unique neighbour lists.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n_vertices()];
        for h in 0..self.n_halfedges() {
            if self.is_edge_rep(h) {
                let (a, b) = (self.origin(h), self.dest(h));
                nb[a].push(b);
                nb[b].push(a);
            }
        }
        for l in &mut nb {
            l.sort_unstable();
            l.dedup();
        }
        nb
    }

    pub fn boundary_loops(&self) -> Vec<BoundaryLoop> {
        let mut out_boundary = vec![usize::MAX; self.n_vertices()];
        for h in 0..self.n_halfedges() {
            if self.twins[h].is_none() {
                out_boundary[self.origin(h)] = h;
            }
        }
        let mut seen = vec![false; self.n_halfedges()];
        let mut loops = Vec::new();
        for h0 in 0..self.n_halfedges() {
            if self.twins[h0].is_some() || seen[h0] {
                continue;
            }
            let mut lp = BoundaryLoop { vertices: vec![], halfedges: vec![], length: 0.0 };
            let mut h = h0;
            while !seen[h] {
                seen[h] = true;
                lp.vertices.push(self.origin(h));
                lp.halfedges.push(h);
                lp.length += self.edge_length(h);
                h = out_boundary[self.dest(h)];
            }
            loops.push(lp);
        }
        loops
    }

    /// Number of connected components (by shared edges).
    pub fn face_components(&self) -> (usize, Vec<usize>) {
        let mut uf = UnionFind::new(self.n_faces());
        for h in 0..self.n_halfedges() {
            if let Some(t) = self.twins[h] {
                uf.union(h / 3, t / 3);
            }
        }
        uf.labels()
    }

    pub fn with_positions(&self, positions: Vec<Point3<f64>>) -> Result<Self> {
        SurfaceMesh::new(positions, self.faces.clone())
    }
}

/// Small union-find used by the cut routines and the decomposition.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }
    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller root wins so labels are deterministic
        if ra < rb {
            self.parent[rb] = ra;
        } else if rb < ra {
            self.parent[ra] = rb;
        }
    }
    /// Component labels numbered by first appearance.
    pub fn labels(&mut self) -> (usize, Vec<usize>) {
        let n = self.parent.len();
        let mut map = vec![usize::MAX; n];
        let mut out = vec![0; n];
        let mut count = 0;
        for i in 0..n {
            let r = self.find(i);
            if map[r] == usize::MAX {
                map[r] = count;
                count += 1;
            }
            out[i] = map[r];
        }
        (count, out)
    }
}
