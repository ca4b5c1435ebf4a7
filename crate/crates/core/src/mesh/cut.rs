use super::{MeshError, Result, SurfaceMesh, UnionFind};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutKind {
    SeamCut,
    HoleInsertion,
    CurveCut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutPath {
    pub vertices: Vec<usize>,
    pub kind: CutKind,
}

impl CutPath {
    pub fn seam(vertices: Vec<usize>) -> Self {
        CutPath { vertices, kind: CutKind::SeamCut }
    }
    pub fn curve(vertices: Vec<usize>) -> Self {
        CutPath { vertices, kind: CutKind::CurveCut }
    }
    pub fn is_closed(&self) -> bool {
        self.vertices.len() > 2 && self.vertices.first() == self.vertices.last()
    }
    /// Consecutive vertex pairs.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Which side relation a seam encodes. Cylinder seams glue a part to itself,
/// interface seams glue two different parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SeamKind {
    Path,
    Cylinder { part: usize },
    Interface { p: usize, q: usize },
}

/// One original edge `a -> b` after cutting: the copies on its left and right side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeamEdge {
    pub left: [usize; 2],
    pub right: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seam {
    pub kind: SeamKind,
    /// original vertex chain
    pub path: Vec<usize>,
    pub edges: Vec<SeamEdge>,
}

impl Seam {
    /// Left copies along the chain (`x^L_j`).
    pub fn left_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().map(|e| e.left[0]).collect();
        if let Some(e) = self.edges.last() {
            v.push(e.left[1]);
        }
        v
    }
    pub fn right_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().map(|e| e.right[0]).collect();
        if let Some(e) = self.edges.last() {
            v.push(e.right[1]);
        }
        v
    }
}

#[derive(Clone, Debug)]
pub struct CutMesh {
    pub mesh: SurfaceMesh,
    /// cut vertex -> original vertex
    pub origin: Vec<usize>,
    pub seams: Vec<Seam>,
}

#[derive(Serialize, Deserialize)]
struct SeamTableJson {
    origin: Vec<usize>,
    seams: Vec<Seam>,
}

impl CutMesh {
    pub fn seam_table_json(&self) -> String {
        serde_json::to_string_pretty(&SeamTableJson { origin: self.origin.clone(), seams: self.seams.clone() })
            .expect("seam table serializes")
    }

    /// Faces mapped back through `origin`; equals the original faces when gluing is exact.
    pub fn glued_faces(&self) -> Vec<[usize; 3]> {
        self.mesh.faces().iter().map(|f| [self.origin[f[0]], self.origin[f[1]], self.origin[f[2]]]).collect()
    }
}

pub(crate) fn norm_edge(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Splits every vertex into one copy per fan of faces that stay connected once the
/// given edges are cut. Face indices are preserved. Returns the new mesh, the
/// origin map and the copy used by every corner (`3f + k`).
pub fn split_along_edges(
    mesh: &SurfaceMesh,
    cut: &HashSet<(usize, usize)>,
) -> Result<(SurfaceMesh, Vec<usize>, Vec<usize>)> {
    let nh = mesh.n_halfedges();
    let mut uf = UnionFind::new(nh);
    for h in 0..nh {
        let Some(t) = mesh.twin(h) else { continue };
        if h > t || cut.contains(&norm_edge(mesh.origin(h), mesh.dest(h))) {
            continue;
        }
        uf.union(h, mesh.next(t));
        uf.union(mesh.next(h), t);
    }
    // number copies by original vertex, then by smallest corner
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_vertices()];
    for h in 0..nh {
        let r = uf.find(h);
        let v = mesh.origin(h);
        if !by_vertex[v].contains(&r) {
            by_vertex[v].push(r);
        }
    }
    let mut root_to_new = std::collections::HashMap::new();
    let mut origin = Vec::new();
    let mut positions = Vec::new();
    for (v, roots) in by_vertex.iter().enumerate() {
        for &r in roots {
            root_to_new.insert(r, origin.len());
            origin.push(v);
            positions.push(mesh.position(v));
        }
    }
    let corner: Vec<usize> = (0..nh).map(|h| root_to_new[&uf.find(h)]).collect();
    let faces: Vec<[usize; 3]> =
        (0..mesh.n_faces()).map(|f| [corner[3 * f], corner[3 * f + 1], corner[3 * f + 2]]).collect();
    let out = SurfaceMesh::new(positions, faces)?;
    Ok((out, origin, corner))
}

fn validate_chain(mesh: &SurfaceMesh, path: &CutPath) -> Result<()> {
    let v = &path.vertices;
    if v.len() < 2 {
        return Err(MeshError::ShortPath);
    }
    for &x in v {
        if x >= mesh.n_vertices() {
            return Err(MeshError::VertexOutOfRange(x));
        }
    }
    for (a, b) in path.edges() {
        if !mesh.has_edge(a, b) {
            return Err(MeshError::NotEdgeConnected(a, b));
        }
    }
    let body = if path.is_closed() { &v[..v.len() - 1] } else { &v[..] };
    let mut seen = HashSet::new();
    for &x in body {
        if !seen.insert(x) {
            return Err(MeshError::SelfIntersectingPath(x));
        }
    }
    Ok(())
}

/// Cuts all given chains at once and records one seam per chain.
/// Chains must run along interior edges.
pub fn cut_chains(mesh: &SurfaceMesh, chains: &[(SeamKind, Vec<usize>)]) -> Result<CutMesh> {
    let mut cut = HashSet::new();
    for (_, chain) in chains {
        for w in chain.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !mesh.has_edge(a, b) {
                return Err(MeshError::NotEdgeConnected(a, b));
            }
            let h = mesh.halfedge(a, b).or_else(|| mesh.halfedge(b, a)).unwrap();
            if mesh.is_boundary_halfedge(h) {
                return Err(MeshError::PathOnBoundary(a, b));
            }
            cut.insert(norm_edge(a, b));
        }
    }
    let (out, origin, corner) = split_along_edges(mesh, &cut)?;
    let mut seams = Vec::with_capacity(chains.len());
    for (kind, chain) in chains {
        let mut edges = Vec::with_capacity(chain.len().saturating_sub(1));
        for w in chain.windows(2) {
            let h = mesh.halfedge(w[0], w[1]).unwrap();
            let t = mesh.twin(h).unwrap();
            let e = SeamEdge { left: [corner[h], corner[mesh.next(h)]], right: [corner[mesh.next(t)], corner[t]] };
            if e.left == e.right {
                // edge could not be opened (both endpoints stayed single copies)
                return Err(MeshError::PathOnBoundary(w[0], w[1]));
            }
            edges.push(e);
        }
        seams.push(Seam { kind: *kind, path: chain.clone(), edges });
    }
    Ok(CutMesh { mesh: out, origin, seams })
}

pub fn cut_along_path(mesh: &SurfaceMesh, path: &CutPath) -> Result<CutMesh> {
    validate_chain(mesh, path)?;
    if path.kind == CutKind::SeamCut {
        let bnd = mesh.boundary_vertex_flags();
        for &end in [path.vertices[0], *path.vertices.last().unwrap()].iter() {
            if !bnd[end] {
                return Err(MeshError::SeamEndpointInterior(end));
            }
        }
    }
    cut_chains(mesh, &[(SeamKind::Path, path.vertices.clone())])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "ids", rename_all = "kebab-case")]
pub enum OpenSite {
    Hole(usize),
    Slit(Vec<usize>),
}

/// Opens a new boundary loop. Returns the new mesh and, for every old vertex,
/// its index in the new mesh (`None` when removed; the first copy when split).
pub fn insert_open_boundary(mesh: &SurfaceMesh, site: &OpenSite) -> Result<(SurfaceMesh, Vec<Option<usize>>)> {
    let bnd = mesh.boundary_vertex_flags();
    match site {
        OpenSite::Hole(v) => {
            let v = *v;
            if v >= mesh.n_vertices() {
                return Err(MeshError::VertexOutOfRange(v));
            }
            if bnd[v] {
                return Err(MeshError::SiteTouchesBoundary(v));
            }
            let nb = mesh.vertex_neighbors();
            if let Some(&u) = nb[v].iter().find(|&&u| bnd[u]) {
                return Err(MeshError::SiteTouchesBoundary(u));
            }
            let map: Vec<Option<usize>> =
                (0..mesh.n_vertices()).map(|u| if u == v { None } else { Some(if u < v { u } else { u - 1 }) }).collect();
            let positions = (0..mesh.n_vertices()).filter(|&u| u != v).map(|u| mesh.position(u)).collect();
            let faces = mesh
                .faces()
                .iter()
                .filter(|f| !f.contains(&v))
                .map(|f| [map[f[0]].unwrap(), map[f[1]].unwrap(), map[f[2]].unwrap()])
                .collect();
            Ok((SurfaceMesh::new(positions, faces)?, map))
        }
        OpenSite::Slit(ids) => {
            let path = CutPath::curve(ids.clone());
            validate_chain(mesh, &path)?;
            if path.is_closed() {
                return Err(MeshError::SelfIntersectingPath(ids[0]));
            }
            if ids.len() < 3 {
                return Err(MeshError::ShortPath);
            }
            if let Some(&u) = ids.iter().find(|&&u| bnd[u]) {
                return Err(MeshError::SiteTouchesBoundary(u));
            }
            let cut: HashSet<_> = path.edges().map(|(a, b)| norm_edge(a, b)).collect();
            let (out, origin, _) = split_along_edges(mesh, &cut)?;
            let mut map = vec![None; mesh.n_vertices()];
            for (new, &old) in origin.iter().enumerate() {
                if map[old].is_none() {
                    map[old] = Some(new);
                }
            }
            Ok((out, map))
        }
    }
}
