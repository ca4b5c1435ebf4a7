use super::{ChartLayout, ParamError, ParamState};
use crate::sparse::{CscPattern, Ldlt};
use std::collections::HashMap;

/// Uniform-weight Tutte embedding per part. Both loops go on horizontal lines
/// spaced by 3D edge length (scaled to the part period); the two seam sides are
/// coupled by a constant translation inside the linear system.
pub fn tutte_initialize(layout: &ChartLayout) -> Result<ParamState, ParamError> {
    let mesh = &layout.cut.mesh;
    let nv = mesh.n_vertices();
    let mut coords = vec![[f64::NAN; 2]; nv];
    let nbrs = mesh.vertex_neighbors();

    for ch in &layout.charts {
        let l = ch.period;
        let h = ch.height;
        place_line(mesh, &ch.bottom, l, 0.0, 1.0, &mut coords);
        place_line(mesh, &ch.top, l, h, -1.0, &mut coords);
        let seam = &layout.cut.seams[ch.seam];
        let (left, right) = (seam.left_vertices(), seam.right_vertices());
        let t = [coords[left[0]][0] - coords[right[0]][0], coords[left[0]][1] - coords[right[0]][1]];
        let t_top = [
            coords[*left.last().unwrap()][0] - coords[*right.last().unwrap()][0],
            coords[*left.last().unwrap()][1] - coords[*right.last().unwrap()][1],
        ];
        if (t[0] - t_top[0]).abs() > 1e-9 * l.max(1.0) || (t[1] - t_top[1]).abs() > 1e-9 * l.max(1.0) {
            return Err(ParamError::Inconsistent(format!("seam sides of part {} do not line up", ch.part)));
        }

        // unknown id and offset for every free vertex copy of this part
        let mut unknown: HashMap<usize, (usize, [f64; 2])> = HashMap::new();
        let mut copies: Vec<Vec<(usize, [f64; 2])>> = Vec::new();
        for j in 1..left.len() - 1 {
            let id = copies.len();
            unknown.insert(right[j], (id, [0.0, 0.0]));
            unknown.insert(left[j], (id, t));
            copies.push(vec![(right[j], [0.0, 0.0]), (left[j], t)]);
        }
        for v in 0..nv {
            if layout.vertex_part[v] == ch.part && coords[v][0].is_nan() && !unknown.contains_key(&v) {
                unknown.insert(v, (copies.len(), [0.0, 0.0]));
                copies.push(vec![(v, [0.0, 0.0])]);
            }
        }
        let n = copies.len();
        if n == 0 {
            continue;
        }
        let mut diag = vec![0.0; n];
        let mut off: HashMap<(usize, usize), f64> = HashMap::new();
        let mut rhs = vec![[0.0; 2]; n];
        for (u, cs) in copies.iter().enumerate() {
            for &(c, oc) in cs {
                for &w in &nbrs[c] {
                    diag[u] += 1.0;
                    match unknown.get(&w) {
                        Some(&(uw, ow)) => {
                            if uw != u {
                                *off.entry((u, uw)).or_insert(0.0) -= 1.0;
                            } else {
                                diag[u] -= 1.0;
                            }
                            for k in 0..2 {
                                rhs[u][k] += ow[k] - oc[k];
                            }
                        }
                        None => {
                            for k in 0..2 {
                                rhs[u][k] += coords[w][k] - oc[k];
                            }
                        }
                    }
                }
            }
        }
        let pat = CscPattern::from_entries(n, off.keys().copied());
        let mut vals = vec![0.0; pat.nnz()];
        for (u, d) in diag.iter().enumerate() {
            vals[pat.slot(u, u).unwrap()] = *d;
        }
        for (&(a, b), &v) in &off {
            vals[pat.slot(a, b).unwrap()] = v;
        }
        let mut fac = Ldlt::analyze(&pat);
        fac.factor(&vals).map_err(|_| ParamError::SingularTutte(ch.part))?;
        let xs = fac.solve(&rhs.iter().map(|r| r[0]).collect::<Vec<_>>());
        let ys = fac.solve(&rhs.iter().map(|r| r[1]).collect::<Vec<_>>());
        for (u, cs) in copies.iter().enumerate() {
            for &(c, oc) in cs {
                coords[c] = [xs[u] + oc[0], ys[u] + oc[1]];
            }
        }
    }
    if let Some(v) = coords.iter().position(|c| c[0].is_nan()) {
        return Err(ParamError::Inconsistent(format!("vertex {v} was not placed")));
    }
    let state = ParamState::new(mesh, coords);
    let flipped = state.flipped_count();
    if flipped > 0 {
        return Err(ParamError::Flipped(flipped));
    }
    Ok(state)
}

/// Lays `line` on y = `y`, starting at x = 0 (dir = 1) or x = l (dir = -1).
fn place_line(mesh: &crate::mesh::SurfaceMesh, line: &[usize], l: f64, y: f64, dir: f64, coords: &mut [[f64; 2]]) {
    let lens: Vec<f64> = line.windows(2).map(|w| mesh.distance(w[0], w[1])).collect();
    let total: f64 = lens.iter().sum();
    let scale = l / total;
    let x0 = if dir > 0.0 { 0.0 } else { l };
    let mut acc = 0.0;
    coords[line[0]] = [x0, y];
    for (k, len) in lens.iter().enumerate() {
        acc += len;
        let x = if k + 1 == lens.len() { l - x0 } else { x0 + dir * acc * scale };
        coords[line[k + 1]] = [x, y];
    }
}
