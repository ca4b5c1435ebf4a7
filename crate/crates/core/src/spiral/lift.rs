use super::{ChartFrame, SpiralError};
use crate::param::{ChartLayout, ParamState};
use serde::{Deserialize, Serialize};

/// A point on the working mesh: face, barycentric coordinates and 3D position.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct SurfacePoint {
    pub face: usize,
    pub bary: [f64; 3],
    pub pos: [f64; 3],
}

const BARY_TOL: f64 = 1e-9;

struct PartIndex {
    lo: [f64; 2],
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
    x_max: f64,
}

/// Point location in the period-extended charts.
pub struct Lifter<'a> {
    pub layout: &'a ChartLayout,
    pub state: &'a ParamState,
    pub frames: Vec<ChartFrame>,
    index: Vec<PartIndex>,
}

impl<'a> Lifter<'a> {
    pub fn new(layout: &'a ChartLayout, state: &'a ParamState, frames: Vec<ChartFrame>) -> Self {
        let n_parts = layout.charts.len();
        let mut faces_of: Vec<Vec<usize>> = vec![Vec::new(); n_parts];
        for (f, &p) in layout.face_part.iter().enumerate() {
            faces_of[p].push(f);
        }
        let index = faces_of
            .iter()
            .map(|faces| {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                let mut edge_sum = 0.0;
                for &f in faces {
                    let tri = state.faces[f];
                    for k in 0..3 {
                        let c = state.coords[tri[k]];
                        let d = state.coords[tri[(k + 1) % 3]];
                        edge_sum += ((c[0] - d[0]).powi(2) + (c[1] - d[1]).powi(2)).sqrt();
                        for a in 0..2 {
                            lo[a] = lo[a].min(c[a]);
                            hi[a] = hi[a].max(c[a]);
                        }
                    }
                }
                let mean = edge_sum / (3 * faces.len().max(1)) as f64;
                let cell = (2.0 * mean).max(1e-12);
                let nx = (((hi[0] - lo[0]) / cell).ceil() as usize).max(1);
                let ny = (((hi[1] - lo[1]) / cell).ceil() as usize).max(1);
                let mut cells = vec![Vec::new(); nx * ny];
                for &f in faces {
                    let tri = state.faces[f];
                    let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
                    for &v in &tri {
                        for k in 0..2 {
                            a[k] = a[k].min(state.coords[v][k]);
                            b[k] = b[k].max(state.coords[v][k]);
                        }
                    }
                    let ci = |x: f64, k: usize, n: usize| (((x - lo[k]) / cell).floor().max(0.0) as usize).min(n - 1);
                    for j in ci(a[1], 1, ny)..=ci(b[1], 1, ny) {
                        for i in ci(a[0], 0, nx)..=ci(b[0], 0, nx) {
                            cells[j * nx + i].push(f);
                        }
                    }
                }
                PartIndex { lo, cell, nx, ny, cells, x_max: hi[0] }
            })
            .collect();
        Lifter { layout, state, frames, index }
    }

    fn bary(&self, f: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.state.faces[f];
        let (a, b, c) = (self.state.coords[a], self.state.coords[b], self.state.coords[c]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (p[1] - a[1]) * (c[0] - a[0])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Best face for a point already reduced to chart coordinates.
    fn find(&self, part: usize, p: [f64; 2]) -> Option<(usize, [f64; 3], f64)> {
        let ix = &self.index[part];
        let fx = (p[0] - ix.lo[0]) / ix.cell;
        let fy = (p[1] - ix.lo[1]) / ix.cell;
        if fx < -1.0 || fy < -1.0 || fx > ix.nx as f64 + 1.0 || fy > ix.ny as f64 + 1.0 {
            return None;
        }
        let cx = (fx.floor().max(0.0) as usize).min(ix.nx - 1);
        let cy = (fy.floor().max(0.0) as usize).min(ix.ny - 1);
        let scan = |cells: &mut dyn Iterator<Item = usize>, best: &mut Option<(usize, [f64; 3], f64)>| {
            for c in cells {
                for &f in &ix.cells[c] {
                    let b = self.bary(f, p);
                    let m = b[0].min(b[1]).min(b[2]);
                    if best.as_ref().is_none_or(|x| m > x.2 || (m == x.2 && f < x.0)) {
                        *best = Some((f, b, m));
                    }
                }
            }
        };
        let mut best = None;
        scan(&mut std::iter::once(cy * ix.nx + cx), &mut best);
        if best.as_ref().is_none_or(|b| b.2 < 0.0) {
            // points on a cell border may belong to a face registered next door
            let (x0, x1) = (cx.saturating_sub(1), (cx + 1).min(ix.nx - 1));
            let (y0, y1) = (cy.saturating_sub(1), (cy + 1).min(ix.ny - 1));
            scan(&mut (y0..=y1).flat_map(|j| (x0..=x1).map(move |i| j * ix.nx + i)), &mut best);
        }
        best
    }

    /// Lifts an extended-chart point of `part` to the surface.
    pub fn locate(&self, part: usize, x: f64, y: f64) -> Result<SurfacePoint, SpiralError> {
        let l = self.frames[part].period;
        let ix = &self.index[part];
        let tol = 1e-9 * l;
        let k0 = ((x - ix.x_max - tol) / l).ceil() as i64;
        let k1 = ((x - ix.lo[0] + tol) / l).floor() as i64;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for k in k0..=k1 {
            if let Some(c) = self.find(part, [x - k as f64 * l, y]) {
                if best.as_ref().is_none_or(|b| c.2 > b.2) {
                    best = Some(c);
                }
            }
        }
        match best {
            Some((f, b, m)) if m >= -BARY_TOL => Ok(self.point(f, b)),
            _ => Err(SpiralError::PointLocation { part, x, y }),
        }
    }

    pub fn point(&self, face: usize, bary: [f64; 3]) -> SurfacePoint {
        let mut b = bary.map(|v| v.max(0.0));
        let s = b[0] + b[1] + b[2];
        b = b.map(|v| v / s);
        let tri = self.state.faces[face];
        let mesh = &self.layout.cut.mesh;
        let mut pos = [0.0; 3];
        for k in 0..3 {
            let q = mesh.position(tri[k]);
            for (a, c) in pos.iter_mut().zip([q.x, q.y, q.z]) {
                *a += b[k] * c;
            }
        }
        SurfacePoint { face, bary: b, pos }
    }

    /// Unit normal of a face in 3D.
    pub fn normal(&self, face: usize) -> [f64; 3] {
        let n = self.layout.cut.mesh.face_normal_raw(face).normalize();
        [n.x, n.y, n.z]
    }
}
