//! Seamless cylindrical parameterization.

mod constraints;
mod energy;
mod solver;
mod tutte;

pub use constraints::*;
pub use energy::*;
pub use solver::*;
pub use tutte::*;

use crate::decomposition::{CylinderPart, Decomposition, LoopRole, PartLoop};
use crate::mesh::{cut_chains, CutMesh, MeshError, SeamKind, SurfaceMesh};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("no seam path between the loops of part {0}")]
    NoSeamPath(usize),
    #[error("cutting failed: {0}")]
    Cut(#[from] MeshError),
    #[error("seam tables are inconsistent with the decomposition: {0}")]
    Inconsistent(String),
    #[error("tutte system is singular for part {0}")]
    SingularTutte(usize),
    #[error("state has {0} flipped or degenerate triangles")]
    Flipped(usize),
    #[error("start is infeasible (constraint residual {0:e})")]
    Infeasible(f64),
    #[error("chart data does not match the mesh: {0}")]
    BadCharts(String),
}

/// Per-part chart bookkeeping on the cut mesh.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PartChart {
    pub part: usize,
    /// index of this part's cylinder seam in `CutMesh::seams`
    pub seam: usize,
    /// bottom-line copies in +x order; first and last are the two seam copies
    pub bottom: Vec<usize>,
    /// top-line copies in loop order (-x); first sits above the last bottom copy
    pub top: Vec<usize>,
    pub bottom_is_open: bool,
    pub top_is_open: bool,
    /// 3D lengths used to lay out the initial rectangle
    pub period: f64,
    pub height: f64,
}

/// The cutting schedule: seams per part plus the transition loops, and the
/// resulting cut mesh. Face ids of the cut mesh equal the working mesh's.
#[derive(Clone, Debug)]
pub struct ChartLayout {
    pub cut: CutMesh,
    pub charts: Vec<PartChart>,
    /// part of every cut vertex
    pub vertex_part: Vec<usize>,
    pub face_part: Vec<usize>,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);
impl Eq for HeapItem {}
impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then vertex id
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

fn junctions(l: &PartLoop) -> Vec<usize> {
    if l.arcs.len() > 1 {
        l.arcs.iter().map(|a| l.vertices[a.start]).collect()
    } else {
        vec![]
    }
}

/// Shortest edge path from the bottom loop to the top loop through part-interior vertices.
pub fn seam_path(mesh: &SurfaceMesh, face_part: &[usize], part: &CylinderPart) -> Option<Vec<usize>> {
    let n = mesh.n_vertices();
    let pid = part.id;
    // 0 = not in part, 1 = interior, 2 = bottom, 3 = top target, 4 = top junction
    let mut kind = vec![0u8; n];
    for &f in &part.faces {
        for v in mesh.face(f) {
            kind[v] = 1;
        }
    }
    for &v in &part.bottom_loop().vertices {
        kind[v] = 2;
    }
    for &v in &part.top_loop().vertices {
        kind[v] = 3;
    }
    for v in junctions(part.top_loop()) {
        kind[v] = 4;
    }
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for h in 0..mesh.n_halfedges() {
        let Some(t) = mesh.twin(h) else { continue };
        if h < t && face_part[h / 3] == pid && face_part[t / 3] == pid {
            let (a, b) = (mesh.origin(h), mesh.dest(h));
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut prev = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    for &v in &part.bottom_loop().vertices {
        dist[v] = 0.0;
        heap.push(HeapItem(0.0, v));
    }
    while let Some(HeapItem(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        if kind[v] == 3 {
            let mut path = vec![v];
            let mut u = v;
            while prev[u] != usize::MAX {
                u = prev[u];
                path.push(u);
            }
            path.reverse();
            return Some(path);
        }
        for &u in &adj[v] {
            if kind[u] != 1 && kind[u] != 3 {
                continue;
            }
            let nd = d + mesh.distance(u, v);
            if nd < dist[u] {
                dist[u] = nd;
                prev[u] = v;
                heap.push(HeapItem(nd, u));
            }
        }
    }
    None
}

impl ChartLayout {
    pub fn build(decomp: &Decomposition) -> Result<Self, ParamError> {
        let mesh = &decomp.mesh;
        let mut chains = Vec::new();
        let mut seam_paths = Vec::new();
        for p in &decomp.parts {
            let path = seam_path(mesh, &decomp.face_part, p).ok_or(ParamError::NoSeamPath(p.id))?;
            chains.push((SeamKind::Cylinder { part: p.id }, path.clone()));
            seam_paths.push(path);
        }
        for p in &decomp.parts {
            for l in &p.loops {
                for a in &l.arcs {
                    if a.neighbor > p.id {
                        chains.push((SeamKind::Interface { p: p.id, q: a.neighbor }, l.arc_vertices(a)));
                    }
                }
            }
        }
        let cut = cut_chains(mesh, &chains)?;

        let mut vertex_part = vec![usize::MAX; cut.mesh.n_vertices()];
        for (f, tri) in cut.mesh.faces().iter().enumerate() {
            for &v in tri {
                vertex_part[v] = decomp.face_part[f];
            }
        }

        let copy_in = |f: usize, v: usize| -> usize {
            let tri = mesh.face(f);
            let k = tri.iter().position(|&x| x == v).unwrap();
            cut.mesh.face(f)[k]
        };
        let line = |l: &PartLoop, start: usize| -> Result<Vec<usize>, ParamError> {
            let n = l.vertices.len();
            let s = l
                .vertices
                .iter()
                .position(|&v| v == start)
                .ok_or_else(|| ParamError::Inconsistent("seam does not end on the loop".into()))?;
            let mut out = Vec::with_capacity(n + 1);
            let mut last_face = 0;
            for k in 0..n {
                let (a, b) = l.edge(s + k);
                let h = mesh.halfedge(a, b).ok_or_else(|| ParamError::Inconsistent("loop edge missing".into()))?;
                last_face = h / 3;
                out.push(copy_in(last_face, a));
            }
            out.push(copy_in(last_face, start));
            Ok(out)
        };

        let mut charts = Vec::with_capacity(decomp.parts.len());
        for (pi, p) in decomp.parts.iter().enumerate() {
            let path = &seam_paths[pi];
            let (bl, tl) = (p.bottom_loop(), p.top_loop());
            let bottom = line(bl, path[0])?;
            let top = line(tl, *path.last().unwrap())?;
            let height: f64 = path.windows(2).map(|w| mesh.distance(w[0], w[1])).sum();
            let period = if tl.role == LoopRole::Transition { tl.length } else { 0.5 * (bl.length + tl.length) };
            charts.push(PartChart {
                part: p.id,
                seam: pi,
                bottom,
                top,
                bottom_is_open: bl.role == LoopRole::Open,
                top_is_open: tl.role == LoopRole::Open,
                period,
                height,
            });
        }
        Ok(ChartLayout { cut, charts, vertex_part, face_part: decomp.face_part.clone() })
    }

    pub fn n_vertices(&self) -> usize {
        self.cut.mesh.n_vertices()
    }
}

/// 2D coordinates per cut vertex plus the rest shapes of the triangles.
#[derive(Clone, Debug)]
pub struct ParamState {
    pub coords: Vec<[f64; 2]>,
    pub faces: Vec<[usize; 3]>,
    pub rest: Vec<RestTriangle>,
}

impl ParamState {
    pub fn new(mesh: &SurfaceMesh, coords: Vec<[f64; 2]>) -> Self {
        let rest = (0..mesh.n_faces())
            .map(|f| {
                let [a, b, c] = mesh.face(f);
                RestTriangle::from_points(&mesh.position(a), &mesh.position(b), &mesh.position(c))
            })
            .collect();
        ParamState { coords, faces: mesh.faces().to_vec(), rest }
    }

    pub fn x(&self) -> Vec<f64> {
        self.coords.iter().flat_map(|c| [c[0], c[1]]).collect()
    }

    pub fn set_x(&mut self, x: &[f64]) {
        for (i, c) in self.coords.iter_mut().enumerate() {
            *c = [x[2 * i], x[2 * i + 1]];
        }
    }

    pub fn signed_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        let (p, q, r) = (self.coords[a], self.coords[b], self.coords[c]);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
    }

    pub fn flipped_count(&self) -> usize {
        (0..self.faces.len()).filter(|&f| self.signed_area(f) <= 0.0).count()
    }

    pub fn mean_rest_area(&self) -> f64 {
        self.rest.iter().map(|r| r.area).sum::<f64>() / self.rest.len().max(1) as f64
    }

    pub fn distortions(&self) -> Vec<f64> {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.faces[f];
                self.rest[f].distortion(&self.coords[a], &self.coords[b], &self.coords[c])
            })
            .collect()
    }
}

/// Everything produced by one parameterization run.
#[derive(Clone, Debug)]
pub struct Parameterization {
    pub layout: ChartLayout,
    pub system: ConstraintSystem,
    pub initial: ParamState,
    pub state: ParamState,
    pub report: SolverReport,
}

pub fn parameterize(
    decomp: &Decomposition,
    opts: ConstraintOptions,
    cfg: &SolverConfig,
) -> Result<Parameterization, ParamError> {
    let layout = ChartLayout::build(decomp)?;
    let system = eliminate_redundant(&build_constraints(&layout, opts)?);
    let initial = tutte_initialize(&layout)?;
    let (state, report) = solve(&layout, &initial, &system, cfg)?;
    Ok(Parameterization { layout, system, initial, state, report })
}
