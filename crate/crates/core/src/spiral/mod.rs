//! Spiral design: straight lines in the period-extended charts, lifted to the surface.

mod lift;
mod trace;

pub use lift::*;
pub use trace::*;

use crate::decomposition::{validate_traversal, Decomposition, TraversalError};
use crate::mesh::SeamKind;
use crate::param::{ChartLayout, ParamState};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_WINDINGS: u32 = 6;
/// candidate positions per arc when searching Fermat crossing pairs
pub const CROSSING_SCAN: usize = 512;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpiralError {
    #[error(transparent)]
    Traversal(#[from] TraversalError),
    #[error("winding count of part {0} must be a positive integer")]
    BadWindings(usize),
    #[error("expected at most {expected} crossing entries, got {got}")]
    CrossingCount { expected: usize, got: usize },
    #[error("crossing {step} at {position} lies outside its interface arc (length {length})")]
    CrossingOutside { step: usize, position: f64, length: f64 },
    #[error("turn points of part {part} must lie in [0, {period})")]
    TurnOutside { part: usize, period: f64 },
    #[error("chart of part {0} is degenerate")]
    DegenerateChart(usize),
    #[error("parts {0} and {1} share no interface seam")]
    NoInterface(usize, usize),
    #[error("point ({x}, {y}) is outside the chart of part {part}")]
    PointLocation { part: usize, x: f64, y: f64 },
    #[error("curve intersects itself in part {part} near ({x}, {y})")]
    SelfIntersecting { part: usize, x: f64, y: f64 },
}

/// User choices for the spiral. Empty or missing entries take defaults.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SpiralSpec {
    pub traversal: Option<Vec<usize>>,
    /// per part
    pub windings: Vec<u32>,
    /// per traversal step: arc-length position along the interface seam, measured
    /// from its start in the orientation of the lower-numbered part
    pub crossings: Vec<Option<f64>>,
    /// per part: Fermat turn points x1, x2 as offsets along the open line, in [0, l)
    pub turns: Vec<Option<[f64; 2]>>,
    /// start offset on the open line of a single tube
    pub start: Option<f64>,
    pub samples_per_winding: Option<usize>,
}

impl SpiralSpec {
    pub fn windings_of(&self, part: usize) -> u32 {
        self.windings.get(part).copied().unwrap_or(DEFAULT_WINDINGS)
    }
}

/// Where a part's chart sits after optimization.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ChartFrame {
    pub part: usize,
    /// horizontal Cyl translation
    pub period: f64,
    pub y_bottom: f64,
    pub y_top: f64,
    /// x of the first bottom-line copy
    pub x_bottom: f64,
    /// x of the last top-line copy (left end of the top line)
    pub x_top: f64,
}

impl ChartFrame {
    pub fn height(&self) -> f64 {
        self.y_top - self.y_bottom
    }
}

pub fn chart_frames(layout: &ChartLayout, state: &ParamState) -> Result<Vec<ChartFrame>, SpiralError> {
    layout
        .charts
        .iter()
        .map(|ch| {
            let c = |v: usize| state.coords[v];
            let period = c(*ch.bottom.last().unwrap())[0] - c(ch.bottom[0])[0];
            let f = ChartFrame {
                part: ch.part,
                period,
                y_bottom: c(ch.bottom[0])[1],
                y_top: c(ch.top[0])[1],
                x_bottom: c(ch.bottom[0])[0],
                x_top: c(*ch.top.last().unwrap())[0],
            };
            if !(period > 0.0) || !(f.height() > 0.0) {
                return Err(SpiralError::DegenerateChart(ch.part));
            }
            Ok(f)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ChartLine {
    Bottom,
    Top,
}

/// Straight segment in the period-extended chart of one part.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ParamLine {
    pub part: usize,
    /// 1 for regular parts, 1 or 2 for Fermat parts
    pub index: usize,
    pub start: [f64; 2],
    pub end: [f64; 2],
}

impl ParamLine {
    pub fn at(&self, s: f64) -> [f64; 2] {
        [self.start[0] + s * (self.end[0] - self.start[0]), self.start[1] + s * (self.end[1] - self.start[1])]
    }
    pub fn ascending(&self) -> bool {
        self.end[1] > self.start[1]
    }
    pub fn x_range(&self) -> (f64, f64) {
        (self.start[0].min(self.end[0]), self.start[0].max(self.end[0]))
    }
    /// y where the line passes x, if inside its span
    pub fn y_at(&self, x: f64) -> Option<f64> {
        let (a, b) = self.x_range();
        if x < a || x > b {
            return None;
        }
        let s = (x - self.start[0]) / (self.end[0] - self.start[0]);
        Some(self.start[1] + s * (self.end[1] - self.start[1]))
    }
}

/// Where the curve passes from one part to the next.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Crossing {
    pub step: usize,
    pub from: usize,
    pub to: usize,
    pub seam: usize,
    pub position: f64,
    /// seam edge and fraction along it
    pub edge: usize,
    pub t: f64,
    pub point: [f64; 3],
    pub chart_from: [f64; 2],
    pub chart_to: [f64; 2],
}

/// Piece of open boundary that belongs to the ribbon outline, walked from `from_x` to `to_x`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BoundaryRun {
    pub part: usize,
    pub line: ChartLine,
    pub from_x: f64,
    pub to_x: f64,
}

/// Uniform x grid of a part: `origin + k * step`, `step = period / per_period`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PartGrid {
    pub part: usize,
    pub origin: f64,
    pub step: f64,
    pub per_period: usize,
}

impl PartGrid {
    pub fn index_of(&self, x: f64) -> Option<i64> {
        let k = ((x - self.origin) / self.step).round();
        ((x - self.origin - k * self.step).abs() <= 1e-9 * self.step).then_some(k as i64)
    }
    pub fn x(&self, k: i64) -> f64 {
        self.origin + k as f64 * self.step
    }
    /// grid indices strictly inside (a, b), a < b
    pub fn inside(&self, a: f64, b: f64) -> std::ops::RangeInclusive<i64> {
        let tol = 1e-9 * self.step;
        let mut lo = ((a - self.origin) / self.step).ceil() as i64;
        if self.x(lo) <= a + tol {
            lo += 1;
        }
        let mut hi = ((b - self.origin) / self.step).floor() as i64;
        if self.x(hi) >= b - tol {
            hi -= 1;
        }
        lo..=hi
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpiralPlan {
    pub traversal: Vec<usize>,
    pub windings: Vec<u32>,
    pub frames: Vec<ChartFrame>,
    pub grids: Vec<PartGrid>,
    /// in curve order
    pub lines: Vec<ParamLine>,
    pub crossings: Vec<Crossing>,
    /// ribbon outline pieces on open boundaries: start loop, Fermat bridges, end loop
    pub start_run: BoundaryRun,
    pub bridges: Vec<BoundaryRun>,
    pub end_run: BoundaryRun,
    pub warnings: Vec<String>,
}

impl SpiralPlan {
    pub fn lines_of(&self, part: usize) -> impl Iterator<Item = (usize, &ParamLine)> {
        self.lines.iter().enumerate().filter(move |(_, l)| l.part == part)
    }
    /// true when line `i` continues into line `i + 1` through a crossing
    pub fn joined(&self, i: usize) -> bool {
        i + 1 < self.lines.len() && self.lines[i].part != self.lines[i + 1].part
    }
}

/// Chart x along an interface arc for one side, unwrapped to be continuous.
struct ArcChart {
    /// cumulative 3D arc length at the seam vertices
    arc: Vec<f64>,
    xs: Vec<f64>,
    left: bool,
}

impl ArcChart {
    fn new(layout: &ChartLayout, state: &ParamState, seam: usize, part: usize) -> Self {
        let s = &layout.cut.seams[seam];
        let left = matches!(s.kind, SeamKind::Interface { p, .. } if p == part);
        let copies = if left { s.left_vertices() } else { s.right_vertices() };
        let mesh = &layout.cut.mesh;
        let mut arc = vec![0.0];
        for w in copies.windows(2) {
            arc.push(arc.last().unwrap() + mesh.distance(w[0], w[1]));
        }
        let mut xs: Vec<f64> = Vec::with_capacity(copies.len());
        // per edge, both ends come from the same face, so differences are continuous
        for (j, e) in s.edges.iter().enumerate() {
            let (a, b) = if left { (e.left[0], e.left[1]) } else { (e.right[0], e.right[1]) };
            if j == 0 {
                xs.push(state.coords[a][0]);
            }
            let d = state.coords[b][0] - state.coords[a][0];
            xs.push(xs[j] + d);
        }
        ArcChart { arc, xs, left }
    }

    fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    fn locate(&self, pos: f64) -> (usize, f64) {
        let n = self.arc.len() - 1;
        let j = match self.arc.binary_search_by(|a| a.total_cmp(&pos)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        };
        let len = self.arc[j + 1] - self.arc[j];
        (j, if len > 0.0 { ((pos - self.arc[j]) / len).clamp(0.0, 1.0) } else { 0.0 })
    }

    fn x_at(&self, pos: f64) -> f64 {
        let (j, t) = self.locate(pos);
        self.xs[j] + t * (self.xs[j + 1] - self.xs[j])
    }

    /// Arc positions where the unwrapped x is congruent to `target` mod `l`.
    fn solve(&self, target: f64, l: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for j in 0..self.xs.len() - 1 {
            let (a, b) = (self.xs[j], self.xs[j + 1]);
            let (lo, hi) = (a.min(b), a.max(b));
            let m0 = ((lo - target) / l).ceil() as i64;
            let m1 = ((hi - target) / l).floor() as i64;
            for m in m0..=m1 {
                let x = target + m as f64 * l;
                let t = if b != a { (x - a) / (b - a) } else { 0.0 };
                out.push(self.arc[j] + t * (self.arc[j + 1] - self.arc[j]));
            }
        }
        out
    }
}

fn interface_seam(layout: &ChartLayout, a: usize, b: usize) -> Option<usize> {
    let (p, q) = (a.min(b), a.max(b));
    layout.cut.seams.iter().position(|s| s.kind == SeamKind::Interface { p, q })
}

fn make_crossing(
    layout: &ChartLayout,
    state: &ParamState,
    step: usize,
    from: usize,
    to: usize,
    seam: usize,
    position: f64,
) -> Crossing {
    let arc = ArcChart::new(layout, state, seam, from);
    let (edge, t) = arc.locate(position);
    let s = &layout.cut.seams[seam];
    let e = s.edges[edge];
    let lerp = |a: usize, b: usize| {
        let (p, q) = (state.coords[a], state.coords[b]);
        [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
    };
    let (mine, theirs) = if arc.left { (e.left, e.right) } else { (e.right, e.left) };
    let mesh = &layout.cut.mesh;
    let (pa, pb) = (mesh.position(mine[0]), mesh.position(mine[1]));
    let point = pa + (pb - pa) * t;
    Crossing {
        step,
        from,
        to,
        seam,
        position,
        edge,
        t,
        point: [point.x, point.y, point.z],
        chart_from: lerp(mine[0], mine[1]),
        chart_to: lerp(theirs[0], theirs[1]),
    }
}

fn wrap(x: f64, l: f64) -> f64 {
    x - (x / l).floor() * l
}

/// Picks crossing positions for a Fermat part so the turn points sit half a period apart.
fn fermat_pair(
    arc_in: &ArcChart,
    arc_out: &ArcChart,
    fixed_in: Option<f64>,
    fixed_out: Option<f64>,
    l: f64,
) -> (f64, f64) {
    let cands = |a: &ArcChart, fixed: Option<f64>| -> Vec<f64> {
        match fixed {
            Some(p) => vec![p],
            None => (0..CROSSING_SCAN).map(|i| a.length() * (i as f64 + 0.5) / CROSSING_SCAN as f64).collect(),
        }
    };
    let ci = cands(arc_in, fixed_in);
    let co = cands(arc_out, fixed_out);
    let xo: Vec<f64> = co.iter().map(|&p| arc_out.x_at(p)).collect();
    let (mi, mo) = (0.5 * arc_in.length(), 0.5 * arc_out.length());
    let mut best = (f64::INFINITY, f64::INFINITY, 0.0, 0.0);
    for &pi in &ci {
        let xi = arc_in.x_at(pi);
        for (k, &po) in co.iter().enumerate() {
            let err = (wrap(xo[k] - xi, l) - 0.5 * l).abs();
            let tie = (pi - mi).abs() + (po - mo).abs();
            if err < best.0 - 1e-12 || (err <= best.0 + 1e-12 && tie < best.1) {
                best = (err, tie, pi, po);
            }
        }
    }
    let (_, _, mut pi, mut po) = best;
    // refine the free crossing so the offset is exact when the arc allows it
    let inside = |a: &ArcChart, p: f64| p > 0.0 && p < a.length();
    if fixed_out.is_none() {
        let target = arc_in.x_at(pi) + 0.5 * l;
        if let Some(p) = closest(arc_out.solve(target, l).into_iter().filter(|&p| inside(arc_out, p)), po) {
            po = p;
        }
    } else if fixed_in.is_none() {
        let target = arc_out.x_at(po) - 0.5 * l;
        if let Some(p) = closest(arc_in.solve(target, l).into_iter().filter(|&p| inside(arc_in, p)), pi) {
            pi = p;
        }
    }
    (pi, po)
}

fn closest(it: impl Iterator<Item = f64>, to: f64) -> Option<f64> {
    it.min_by(|a, b| (a - to).abs().total_cmp(&(b - to).abs()))
}

pub fn plan_lines(
    spec: &SpiralSpec,
    decomp: &Decomposition,
    layout: &ChartLayout,
    state: &ParamState,
) -> Result<SpiralPlan, SpiralError> {
    let n_parts = decomp.parts.len();
    let traversal = spec.traversal.clone().unwrap_or_else(|| (0..n_parts).collect());
    validate_traversal(decomp, &traversal)?;
    let frames = chart_frames(layout, state)?;
    let windings: Vec<u32> = (0..n_parts).map(|p| spec.windings_of(p)).collect();
    if let Some(p) = windings.iter().position(|&w| w == 0) {
        return Err(SpiralError::BadWindings(p));
    }
    let steps = traversal.len() - 1;
    if spec.crossings.len() > steps {
        return Err(SpiralError::CrossingCount { expected: steps, got: spec.crossings.len() });
    }
    for (p, t) in spec.turns.iter().enumerate() {
        if let (Some([a, b]), Some(f)) = (t, frames.get(p)) {
            if !(0.0..f.period).contains(a) || !(0.0..f.period).contains(b) {
                return Err(SpiralError::TurnOutside { part: p, period: f.period });
            }
        }
    }

    // seams and requested positions per step
    let mut seams = Vec::with_capacity(steps);
    let mut positions: Vec<Option<f64>> = Vec::with_capacity(steps);
    for (i, w) in traversal.windows(2).enumerate() {
        let s = interface_seam(layout, w[0], w[1]).ok_or(SpiralError::NoInterface(w[0], w[1]))?;
        let len = ArcChart::new(layout, state, s, w[0]).length();
        let pos = spec.crossings.get(i).copied().flatten();
        if let Some(p) = pos {
            if !(p > 0.0 && p < len) {
                return Err(SpiralError::CrossingOutside { step: i, position: p, length: len });
            }
        }
        seams.push(s);
        positions.push(pos);
    }
    // Fermat parts choose their free crossings; the rest default to arc midpoints
    for i in 1..traversal.len().saturating_sub(1) {
        let b = traversal[i];
        if spec.turns.get(b).copied().flatten().is_some() {
            continue;
        }
        let arc_in = ArcChart::new(layout, state, seams[i - 1], b);
        let arc_out = ArcChart::new(layout, state, seams[i], b);
        // positions are measured on the lower-numbered side; both sides share arc length
        let (pi, po) = fermat_pair(&arc_in, &arc_out, positions[i - 1], positions[i], frames[b].period);
        positions[i - 1] = Some(pi);
        positions[i] = Some(po);
    }
    let mut crossings = Vec::with_capacity(steps);
    for (i, w) in traversal.windows(2).enumerate() {
        let len = ArcChart::new(layout, state, seams[i], w[0]).length();
        let pos = positions[i].unwrap_or(0.5 * len);
        crossings.push(make_crossing(layout, state, i, w[0], w[1], seams[i], pos));
    }

    let mut warnings = Vec::new();
    let mut lines = Vec::new();
    let mut bridges = Vec::new();
    let mut grids = vec![None; n_parts];
    let target_samples = |p: usize, n_lines: usize| -> usize {
        let f = &frames[p];
        let width = f.height() / (windings[p] as f64 * n_lines as f64);
        let n = spec.samples_per_winding.unwrap_or_else(|| (f.period / (0.25 * width)).ceil() as usize);
        (n.max(8) + 1) / 2 * 2
    };
    let mut start_run = None;
    let mut end_run = None;
    for (i, &p) in traversal.iter().enumerate() {
        let f = &frames[p];
        let l = f.period;
        let span = windings[p] as f64 * l;
        let first = i == 0;
        let last = i + 1 == traversal.len();
        let bottom_run = |x: f64| BoundaryRun { part: p, line: ChartLine::Bottom, from_x: x, to_x: x + l };
        if first && last {
            let x0 = f.x_bottom + spec.start.unwrap_or(0.0);
            lines.push(ParamLine { part: p, index: 1, start: [x0, f.y_bottom], end: [x0 + span, f.y_top] });
            grids[p] = Some(PartGrid { part: p, origin: x0, step: l / target_samples(p, 1) as f64, per_period: target_samples(p, 1) });
            start_run = Some(bottom_run(x0));
            // walked with the part on the left, so -x along the top line
            end_run = Some(BoundaryRun { part: p, line: ChartLine::Top, from_x: x0 + span, to_x: x0 + span - l });
        } else if first {
            let xc = crossings[0].chart_from[0];
            let x0 = xc - span;
            lines.push(ParamLine { part: p, index: 1, start: [x0, f.y_bottom], end: [xc, f.y_top] });
            let n = target_samples(p, 1);
            grids[p] = Some(PartGrid { part: p, origin: x0, step: l / n as f64, per_period: n });
            start_run = Some(bottom_run(x0));
        } else if last {
            let xc = crossings[i - 1].chart_to[0];
            let x1 = xc - span;
            lines.push(ParamLine { part: p, index: 1, start: [xc, f.y_top], end: [x1, f.y_bottom] });
            let n = target_samples(p, 1);
            grids[p] = Some(PartGrid { part: p, origin: x1, step: l / n as f64, per_period: n });
            end_run = Some(bottom_run(x1));
        } else {
            let x_in = crossings[i - 1].chart_to[0];
            let x_out = crossings[i].chart_from[0];
            let snap = |x: f64, offset: Option<f64>| -> f64 {
                match offset {
                    None => x - span,
                    Some(o) => {
                        let base = f.x_bottom + o;
                        base + ((x - span - base) / l).round() * l
                    }
                }
            };
            let turns = spec.turns.get(p).copied().flatten();
            let x1 = snap(x_in, turns.map(|t| t[0]));
            let x2 = snap(x_out, turns.map(|t| t[1]));
            let d = wrap(x2 - x1, l);
            if (d - 0.5 * l).abs() > 1e-6 * l {
                warnings.push(format!(
                    "part {p}: Fermat turn points are {:.6} apart, half period is {:.6}; windings will not be evenly spaced",
                    d,
                    0.5 * l
                ));
            }
            lines.push(ParamLine { part: p, index: 1, start: [x_in, f.y_top], end: [x1, f.y_bottom] });
            lines.push(ParamLine { part: p, index: 2, start: [x2, f.y_bottom], end: [x_out, f.y_top] });
            let n = target_samples(p, 2);
            grids[p] = Some(PartGrid { part: p, origin: x1, step: l / n as f64, per_period: n });
            bridges.push(BoundaryRun { part: p, line: ChartLine::Bottom, from_x: x1, to_x: x1 + d });
        }
    }
    let plan = SpiralPlan {
        traversal,
        windings,
        frames,
        grids: grids.into_iter().map(|g| g.expect("every part is traversed")).collect(),
        lines,
        crossings,
        start_run: start_run.unwrap(),
        bridges,
        end_run: end_run.unwrap(),
        warnings,
    };
    check_simple(&plan)?;
    Ok(plan)
}

fn seg_intersection(a0: [f64; 2], a1: [f64; 2], b0: [f64; 2], b1: [f64; 2]) -> Option<(f64, f64)> {
    let d = [a1[0] - a0[0], a1[1] - a0[1]];
    let e = [b1[0] - b0[0], b1[1] - b0[1]];
    let den = d[0] * e[1] - d[1] * e[0];
    if den.abs() < 1e-300 {
        return None;
    }
    let w = [b0[0] - a0[0], b0[1] - a0[1]];
    let s = (w[0] * e[1] - w[1] * e[0]) / den;
    let r = (w[0] * d[1] - w[1] * d[0]) / den;
    Some((s, r))
}

/// Lines of one part, including all period copies, must not cross.
fn check_simple(plan: &SpiralPlan) -> Result<(), SpiralError> {
    for f in &plan.frames {
        let l = f.period;
        let lines: Vec<&ParamLine> = plan.lines.iter().filter(|x| x.part == f.part).collect();
        for (i, a) in lines.iter().enumerate() {
            for b in lines.iter().skip(i + 1) {
                let (a0, a1) = a.x_range();
                let (b0, b1) = b.x_range();
                let k0 = ((a0 - b1) / l).floor() as i64 - 1;
                let k1 = ((a1 - b0) / l).ceil() as i64 + 1;
                for k in k0..=k1 {
                    let sh = k as f64 * l;
                    let (bs, be) = ([b.start[0] + sh, b.start[1]], [b.end[0] + sh, b.end[1]]);
                    if let Some((s, r)) = seg_intersection(a.start, a.end, bs, be) {
                        let eps = 1e-12;
                        if s >= -eps && s <= 1.0 + eps && r >= -eps && r <= 1.0 + eps {
                            let p = a.at(s);
                            return Err(SpiralError::SelfIntersecting { part: f.part, x: p[0], y: p[1] });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
