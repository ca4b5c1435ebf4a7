//! Cylindrical decomposition: parts, boundary roles and interface arcs.

use crate::mesh::{insert_open_boundary, CutPath, MeshError, OpenSite, SurfaceMesh, UnionFind};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompositionError {
    #[error("open site {site}: {source}")]
    Site { site: usize, source: MeshError },
    #[error("loop {index} uses vertex {vertex} which is missing after open sites were inserted")]
    LoopVertexMissing { index: usize, vertex: usize },
    #[error("loop {index} is not edge-connected between {a} and {b}")]
    LoopNotConnected { index: usize, a: usize, b: usize },
    #[error("loop {index} is too short or visits vertex {vertex} twice")]
    LoopNotSimple { index: usize, vertex: usize },
    #[error("loop {index} runs along the mesh boundary at edge ({a}, {b})")]
    LoopOnBoundary { index: usize, a: usize, b: usize },
    #[error("part {part} is not an annulus (euler characteristic {euler}, {boundary_loops} boundary loops)")]
    NotAnnulus { part: usize, euler: i64, boundary_loops: usize },
    #[error("part {part} is not manifold: {detail}")]
    PartNotManifold { part: usize, detail: String },
    #[error("part {part} has a boundary loop that is partly open and partly shared")]
    MixedBoundary { part: usize },
    #[error("part {part} has no open boundary")]
    NoOpenBoundary { part: usize },
    #[error("part {part} has two open boundaries but the decomposition has {parts} parts")]
    TwoOpenBoundaries { part: usize, parts: usize },
    #[error("adjacency graph is not connected")]
    Disconnected,
    #[error("unknown site type '{0}'")]
    BadSite(String),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct SiteSpec {
    #[serde(rename = "type")]
    pub kind: String,
    pub ids: Vec<usize>,
}

/// Segmentation as authored by the user (vertex ids refer to the input mesh).
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Segmentation {
    #[serde(default)]
    pub loops: Vec<Vec<usize>>,
    #[serde(default)]
    pub open_sites: Vec<SiteSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traversal: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

impl Segmentation {
    pub fn sites(&self) -> Result<Vec<OpenSite>, DecompositionError> {
        self.open_sites
            .iter()
            .map(|s| match (s.kind.as_str(), s.ids.as_slice()) {
                ("hole", [v]) => Ok(OpenSite::Hole(*v)),
                ("slit", ids) => Ok(OpenSite::Slit(ids.to_vec())),
                (k, _) => Err(DecompositionError::BadSite(k.to_string())),
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopRole {
    Open,
    Transition,
}

/// Maximal run of loop edges shared with one neighbour.
/// Covers `loop.vertices[start ..= start + edges]` (cyclic).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterfaceArc {
    pub neighbor: usize,
    pub start: usize,
    pub edges: usize,
    /// arc length from the loop start to the arc start
    pub offset: f64,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartLoop {
    /// working-mesh vertex ids, part interior on the left
    pub vertices: Vec<usize>,
    pub role: LoopRole,
    pub length: f64,
    pub arcs: Vec<InterfaceArc>,
}

impl PartLoop {
    pub fn edge(&self, i: usize) -> (usize, usize) {
        let n = self.vertices.len();
        (self.vertices[i % n], self.vertices[(i + 1) % n])
    }
    pub fn arc_vertices(&self, arc: &InterfaceArc) -> Vec<usize> {
        let n = self.vertices.len();
        (0..=arc.edges).map(|k| self.vertices[(arc.start + k) % n]).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderPart {
    pub id: usize,
    pub name: Option<String>,
    pub faces: Vec<usize>,
    pub loops: Vec<PartLoop>,
}

impl CylinderPart {
    pub fn open_loop(&self) -> &PartLoop {
        self.loops.iter().find(|l| l.role == LoopRole::Open).expect("part has an open loop")
    }
    /// The loop carrying the interfaces, or the second open loop of a single part.
    pub fn top_loop(&self) -> &PartLoop {
        self.loops
            .iter()
            .find(|l| l.role == LoopRole::Transition)
            .unwrap_or(&self.loops[1])
    }
    pub fn bottom_loop(&self) -> &PartLoop {
        &self.loops[0]
    }
    pub fn neighbors(&self) -> Vec<usize> {
        let s: BTreeSet<usize> = self.loops.iter().flat_map(|l| l.arcs.iter().map(|a| a.neighbor)).collect();
        s.into_iter().collect()
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    /// the mesh after open sites were inserted
    pub mesh: SurfaceMesh,
    /// input vertex -> working vertex
    pub vertex_map: Vec<Option<usize>>,
    pub parts: Vec<CylinderPart>,
    pub face_part: Vec<usize>,
    pub adjacency: Vec<Vec<usize>>,
}

pub fn interface_intervals(part: &CylinderPart) -> Vec<(usize, InterfaceArc)> {
    part.loops.iter().flat_map(|l| l.arcs.iter().map(|a| (a.neighbor, a.clone()))).collect()
}

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
pub enum TraversalError {
    #[error("traversal is not a permutation of the {parts} parts")]
    NotPermutation { parts: usize },
    #[error("parts {a} and {b} are consecutive in the traversal but not adjacent")]
    NotAdjacent { a: usize, b: usize },
}

pub fn validate_traversal(decomp: &Decomposition, order: &[usize]) -> Result<(), TraversalError> {
    let n = decomp.parts.len();
    let mut seen = vec![false; n];
    if order.len() != n {
        return Err(TraversalError::NotPermutation { parts: n });
    }
    for &p in order {
        if p >= n || seen[p] {
            return Err(TraversalError::NotPermutation { parts: n });
        }
        seen[p] = true;
    }
    // a path without repeated nodes uses each adjacency edge at most once
    for w in order.windows(2) {
        if !decomp.adjacency[w[0]].contains(&w[1]) {
            return Err(TraversalError::NotAdjacent { a: w[0], b: w[1] });
        }
    }
    Ok(())
}

pub fn apply_segmentation_spec(mesh: &SurfaceMesh, seg: &Segmentation) -> Result<Decomposition, DecompositionError> {
    let loops: Vec<CutPath> = seg.loops.iter().map(|l| CutPath::curve(l.clone())).collect();
    let mut d = apply_segmentation(mesh, &loops, &seg.sites()?)?;
    for (i, name) in seg.names.iter().enumerate() {
        if let Some(p) = d.parts.get_mut(i) {
            p.name = Some(name.clone());
        }
    }
    Ok(d)
}

pub fn apply_segmentation(
    mesh: &SurfaceMesh,
    loops: &[CutPath],
    open_sites: &[OpenSite],
) -> Result<Decomposition, DecompositionError> {
    // 1. open sites, composing vertex maps
    let mut work = mesh.clone();
    let mut vmap: Vec<Option<usize>> = (0..mesh.n_vertices()).map(Some).collect();
    for (i, site) in open_sites.iter().enumerate() {
        let site_w = match site {
            OpenSite::Hole(v) => OpenSite::Hole(map_vertex(&vmap, *v).ok_or(DecompositionError::Site {
                site: i,
                source: MeshError::VertexOutOfRange(*v),
            })?),
            OpenSite::Slit(ids) => OpenSite::Slit(
                ids.iter()
                    .map(|&v| {
                        map_vertex(&vmap, v)
                            .ok_or(DecompositionError::Site { site: i, source: MeshError::VertexOutOfRange(v) })
                    })
                    .collect::<Result<_, _>>()?,
            ),
        };
        let (next, m) = insert_open_boundary(&work, &site_w).map_err(|e| DecompositionError::Site { site: i, source: e })?;
        for e in vmap.iter_mut() {
            *e = e.and_then(|v| m[v]);
        }
        work = next;
    }

    // 2. loop edges
    let mut loop_edges: HashSet<(usize, usize)> = HashSet::new();
    for (li, lp) in loops.iter().enumerate() {
        let mut ids = Vec::with_capacity(lp.vertices.len());
        for &v in &lp.vertices {
            ids.push(map_vertex(&vmap, v).ok_or(DecompositionError::LoopVertexMissing { index: li, vertex: v })?);
        }
        if ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        if ids.len() < 3 {
            return Err(DecompositionError::LoopNotSimple { index: li, vertex: ids.first().copied().unwrap_or(0) });
        }
        let mut seen = HashSet::new();
        for &v in &ids {
            if !seen.insert(v) {
                return Err(DecompositionError::LoopNotSimple { index: li, vertex: v });
            }
        }
        for k in 0..ids.len() {
            let (a, b) = (ids[k], ids[(k + 1) % ids.len()]);
            let h = work.halfedge(a, b).or_else(|| work.halfedge(b, a));
            let Some(h) = h else {
                return Err(DecompositionError::LoopNotConnected { index: li, a, b });
            };
            if work.is_boundary_halfedge(h) {
                return Err(DecompositionError::LoopOnBoundary { index: li, a, b });
            }
            loop_edges.insert((a.min(b), a.max(b)));
        }
    }

    // 3. faces connected across non-loop edges form the parts
    let mut uf = UnionFind::new(work.n_faces());
    for h in 0..work.n_halfedges() {
        if let Some(t) = work.twin(h) {
            let (a, b) = (work.origin(h), work.dest(h));
            if !loop_edges.contains(&(a.min(b), a.max(b))) {
                uf.union(h / 3, t / 3);
            }
        }
    }
    let (n_parts, face_part) = uf.labels();
    let mut part_faces = vec![Vec::new(); n_parts];
    for (f, &p) in face_part.iter().enumerate() {
        part_faces[p].push(f);
    }

    // 4. per part topology and loop classification
    let mut parts = Vec::with_capacity(n_parts);
    for (pid, faces) in part_faces.into_iter().enumerate() {
        let mut local = HashMap::new();
        let mut global = Vec::new();
        let mut lf = Vec::with_capacity(faces.len());
        for &f in &faces {
            let tri = work.face(f);
            let mut t = [0; 3];
            for k in 0..3 {
                t[k] = *local.entry(tri[k]).or_insert_with(|| {
                    global.push(tri[k]);
                    global.len() - 1
                });
            }
            lf.push(t);
        }
        let pos = global.iter().map(|&v| work.position(v)).collect();
        let sub = SurfaceMesh::new(pos, lf)
            .map_err(|e| DecompositionError::PartNotManifold { part: pid, detail: e.to_string() })?;
        let bl = sub.boundary_loops();
        let euler = sub.euler_characteristic();
        if euler != 0 || bl.len() != 2 {
            return Err(DecompositionError::NotAnnulus { part: pid, euler, boundary_loops: bl.len() });
        }
        let mut ploops = Vec::with_capacity(2);
        for l in &bl {
            let verts: Vec<usize> = l.vertices.iter().map(|&v| global[v]).collect();
            let n = verts.len();
            let mut labels = Vec::with_capacity(n);
            for i in 0..n {
                let h = work.halfedge(verts[i], verts[(i + 1) % n]).expect("part edge exists");
                labels.push(work.twin(h).map(|t| face_part[t / 3]));
            }
            let role = if labels.iter().all(|l| l.is_none()) {
                LoopRole::Open
            } else if labels.iter().all(|l| l.is_some()) {
                LoopRole::Transition
            } else {
                return Err(DecompositionError::MixedBoundary { part: pid });
            };
            ploops.push(build_loop(&work, verts, labels, role));
        }
        parts.push(CylinderPart { id: pid, name: None, faces, loops: ploops });
    }

    // 5. roles
    for p in &mut parts {
        let n_open = p.loops.iter().filter(|l| l.role == LoopRole::Open).count();
        match (n_open, n_parts) {
            (0, _) => return Err(DecompositionError::NoOpenBoundary { part: p.id }),
            (2, 1) => {}
            (2, n) => return Err(DecompositionError::TwoOpenBoundaries { part: p.id, parts: n }),
            _ => {
                if p.loops[0].role != LoopRole::Open {
                    p.loops.swap(0, 1);
                }
            }
        }
    }

    // 6. adjacency
    let mut adjacency = vec![Vec::new(); n_parts];
    for p in &parts {
        adjacency[p.id] = p.neighbors();
    }
    let mut reach = vec![false; n_parts];
    let mut stack = vec![0];
    reach[0] = true;
    while let Some(p) = stack.pop() {
        for &q in &adjacency[p] {
            if !reach[q] {
                reach[q] = true;
                stack.push(q);
            }
        }
    }
    if reach.iter().any(|r| !r) {
        return Err(DecompositionError::Disconnected);
    }

    Ok(Decomposition { mesh: work, vertex_map: vmap, parts, face_part, adjacency })
}

fn map_vertex(vmap: &[Option<usize>], v: usize) -> Option<usize> {
    vmap.get(v).copied().flatten()
}

fn build_loop(mesh: &SurfaceMesh, mut verts: Vec<usize>, mut labels: Vec<Option<usize>>, role: LoopRole) -> PartLoop {
    let n = verts.len();
    // start at an arc boundary when there are several arcs
    if let Some(s) = (0..n).find(|&i| labels[i] != labels[(i + n - 1) % n]) {
        verts.rotate_left(s);
        labels.rotate_left(s);
    }
    let lens: Vec<f64> = (0..n).map(|i| mesh.distance(verts[i], verts[(i + 1) % n])).collect();
    let length = lens.iter().sum();
    let mut arcs = Vec::new();
    if role == LoopRole::Transition {
        let mut i = 0;
        let mut offset = 0.0;
        while i < n {
            let nb = labels[i].unwrap();
            let start = i;
            let mut len = 0.0;
            while i < n && labels[i] == Some(nb) {
                len += lens[i];
                i += 1;
            }
            arcs.push(InterfaceArc { neighbor: nb, start, edges: i - start, offset, length: len });
            offset += len;
        }
    }
    PartLoop { vertices: verts, role, length, arcs }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PartSummary {
    pub id: usize,
    pub name: Option<String>,
    pub faces: usize,
    pub loops: Vec<LoopSummary>,
    pub neighbors: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LoopSummary {
    pub role: LoopRole,
    pub vertices: usize,
    pub length: f64,
    pub arcs: Vec<InterfaceArc>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DecompositionSummary {
    pub parts: Vec<PartSummary>,
    pub adjacency: Vec<Vec<usize>>,
    pub vertices: usize,
    pub faces: usize,
}

impl Decomposition {
    pub fn summary(&self) -> DecompositionSummary {
        DecompositionSummary {
            parts: self
                .parts
                .iter()
                .map(|p| PartSummary {
                    id: p.id,
                    name: p.name.clone(),
                    faces: p.faces.len(),
                    loops: p
                        .loops
                        .iter()
                        .map(|l| LoopSummary { role: l.role, vertices: l.vertices.len(), length: l.length, arcs: l.arcs.clone() })
                        .collect(),
                    neighbors: self.adjacency[p.id].clone(),
                })
                .collect(),
            adjacency: self.adjacency.clone(),
            vertices: self.mesh.n_vertices(),
            faces: self.mesh.n_faces(),
        }
    }

    /// Undirected edges separating two parts.
    pub fn transition_edges(&self) -> HashSet<(usize, usize)> {
        let mut s = HashSet::new();
        for h in 0..self.mesh.n_halfedges() {
            if let Some(t) = self.mesh.twin(h) {
                if self.face_part[h / 3] != self.face_part[t / 3] {
                    let (a, b) = (self.mesh.origin(h), self.mesh.dest(h));
                    s.insert((a.min(b), a.max(b)));
                }
            }
        }
        s
    }
}
