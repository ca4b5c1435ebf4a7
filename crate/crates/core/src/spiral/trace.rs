use super::{Lifter, ParamLine, SpiralError, SpiralPlan};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SampleKind {
    /// line start or end
    End,
    /// on the part's uniform x grid
    Grid,
    /// crossing of a chart edge
    Edge,
    /// extra point keeping samples dense
    Fill,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurveSample {
    pub face: usize,
    pub bary: [f64; 3],
    pub pos: [f64; 3],
    pub part: usize,
    /// index into `SpiralPlan::lines`
    pub line: usize,
    /// extended chart coordinates
    pub x: f64,
    pub y: f64,
    /// connected piece of the curve; Fermat turns start a new strand
    pub strand: usize,
    pub kind: SampleKind,
    pub grid: Option<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SurfaceCurve {
    pub samples: Vec<CurveSample>,
    pub length: f64,
}

fn dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl SurfaceCurve {
    /// Indices of grid samples and line ends, per strand, with duplicates at crossings removed.
    pub fn uniform(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (i, c) in self.samples.iter().enumerate() {
            if i == 0 || c.strand != self.samples[i - 1].strand {
                out.push(Vec::new());
            }
            if !matches!(c.kind, SampleKind::End | SampleKind::Grid) {
                continue;
            }
            let v = out.last_mut().unwrap();
            if v.last().is_none_or(|&p| dist(&self.samples[p].pos, &c.pos) > 1e-12) {
                v.push(i);
            }
        }
        out
    }
}

/// Parameters along `line` where it crosses a chart edge of its part (all period copies).
fn edge_crossings(lifter: &Lifter, line: &ParamLine) -> Vec<f64> {
    let state = lifter.state;
    let mesh = &lifter.layout.cut.mesh;
    let l = lifter.frames[line.part].period;
    let (lx0, lx1) = line.x_range();
    let d = [line.end[0] - line.start[0], line.end[1] - line.start[1]];
    let mut out = Vec::new();
    for (f, &p) in lifter.layout.face_part.iter().enumerate() {
        if p != line.part {
            continue;
        }
        for k in 0..3 {
            let h = 3 * f + k;
            if mesh.twin(h).is_some_and(|t| t < h) {
                continue;
            }
            let u0 = state.coords[mesh.origin(h)];
            let u1 = state.coords[mesh.dest(h)];
            let (ex0, ex1) = (u0[0].min(u1[0]), u0[0].max(u1[0]));
            let m0 = ((lx0 - ex1) / l).ceil() as i64;
            let m1 = ((lx1 - ex0) / l).floor() as i64;
            let w = [u1[0] - u0[0], u1[1] - u0[1]];
            let den = d[0] * w[1] - d[1] * w[0];
            if den.abs() < 1e-300 {
                continue;
            }
            for m in m0..=m1 {
                let o = [u0[0] + m as f64 * l - line.start[0], u0[1] - line.start[1]];
                let s = (o[0] * w[1] - o[1] * w[0]) / den;
                let r = (o[0] * d[1] - o[1] * d[0]) / den;
                if s > 0.0 && s < 1.0 && (0.0..=1.0).contains(&r) {
                    out.push(s);
                }
            }
        }
    }
    out
}

/// Intersects every line with the chart triangulation and lifts the samples.
/// `spacing` bounds the chart distance between consecutive samples.
pub fn trace_curve(plan: &SpiralPlan, lifter: &Lifter, spacing: f64) -> Result<SurfaceCurve, SpiralError> {
    let mut samples: Vec<CurveSample> = Vec::new();
    let mut strand = 0;
    for (li, line) in plan.lines.iter().enumerate() {
        if li > 0 && !plan.joined(li - 1) {
            strand += 1;
        }
        let grid = &plan.grids[line.part];
        let (a, b) = line.x_range();
        let dx = line.end[0] - line.start[0];
        let mut params: Vec<(f64, SampleKind)> = vec![(0.0, SampleKind::End), (1.0, SampleKind::End)];
        for k in grid.inside(a, b) {
            params.push(((grid.x(k) - line.start[0]) / dx, SampleKind::Grid));
        }
        params.extend(edge_crossings(lifter, line).into_iter().map(|s| (s, SampleKind::Edge)));
        params.sort_by(|p, q| p.0.total_cmp(&q.0).then((p.1 as u8).cmp(&(q.1 as u8))));
        // near-duplicates keep the more specific kind (End, then Grid)
        params.dedup_by(|q, p| {
            let same = (q.0 - p.0).abs() < 1e-12;
            if same && (q.1 as u8) < (p.1 as u8) {
                *p = *q;
            }
            same
        });
        let chart_len = (dx * dx + (line.end[1] - line.start[1]).powi(2)).sqrt();
        let mut dense = Vec::with_capacity(params.len());
        for w in params.windows(2) {
            dense.push(w[0]);
            let gap = (w[1].0 - w[0].0) * chart_len;
            let extra = (gap / spacing).ceil() as usize;
            for j in 1..extra {
                dense.push((w[0].0 + (w[1].0 - w[0].0) * j as f64 / extra as f64, SampleKind::Fill));
            }
        }
        dense.push(*params.last().unwrap());
        for (s, kind) in dense {
            let [x, y] = line.at(s);
            let (x, y) = match kind {
                SampleKind::Grid => (grid.x(grid.index_of(x).unwrap()), y),
                SampleKind::End if s == 1.0 => (line.end[0], line.end[1]),
                SampleKind::End => (line.start[0], line.start[1]),
                _ => (x, y),
            };
            let p = lifter.locate(line.part, x, y)?;
            samples.push(CurveSample {
                face: p.face,
                bary: p.bary,
                pos: p.pos,
                part: line.part,
                line: li,
                x,
                y,
                strand,
                kind,
                grid: grid.index_of(x),
            });
        }
    }
    let mut length = 0.0;
    for w in samples.windows(2) {
        if w[0].strand == w[1].strand {
            length += dist(&w[0].pos, &w[1].pos);
        }
    }
    Ok(SurfaceCurve { samples, length })
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct SpacingStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub cv: f64,
    pub min: f64,
    pub max: f64,
}

impl SpacingStats {
    pub fn of(v: &[f64]) -> Self {
        if v.is_empty() {
            return SpacingStats::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        SpacingStats {
            count: v.len(),
            mean,
            std: var.sqrt(),
            cv: if mean > 0.0 { var.sqrt() / mean } else { 0.0 },
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Geodesic turning angle at one uniform sample.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Turning {
    pub sample: usize,
    pub part: usize,
    pub angle: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurveQuality {
    pub length: f64,
    pub spacing: SpacingStats,
    /// counts of |angle| in 5 degree bins
    pub turning_histogram: Vec<usize>,
    pub turning_median: f64,
    pub turning_max: f64,
    pub turning: Vec<Turning>,
}

/// Distances between adjacent windings along vertical rulings.
pub fn winding_spacings(plan: &SpiralPlan, lifter: &Lifter, curve: &SurfaceCurve) -> Result<Vec<f64>, SpiralError> {
    let mut out = Vec::new();
    for c in curve.samples.iter().filter(|c| c.kind == SampleKind::Grid) {
        let l = plan.frames[c.part].period;
        let mut above = f64::INFINITY;
        for (_, line) in plan.lines_of(c.part) {
            let (a, b) = line.x_range();
            for k in ((a - c.x) / l).ceil() as i64..=((b - c.x) / l).floor() as i64 {
                if let Some(y) = line.y_at(c.x + k as f64 * l) {
                    if y > c.y + 1e-12 && y < above {
                        above = y;
                    }
                }
            }
        }
        if above.is_finite() {
            let q = lifter.locate(c.part, c.x, above)?;
            out.push(dist(&c.pos, &q.pos));
        }
    }
    Ok(out)
}

fn v3(p: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

fn signed_angle(a: &Vector3<f64>, b: &Vector3<f64>, n: &Vector3<f64>) -> f64 {
    n.dot(&a.cross(b)).atan2(a.dot(b))
}

/// Intrinsic turning where the curve leaves face `f` along `e1` and enters face `g` along `e2`.
/// Across an edge the angles to the shared edge are compared, which is the same as
/// unfolding `g` onto the plane of `f`.
fn hinge_turn(lifter: &Lifter, f: usize, g: usize, e1: &Vector3<f64>, e2: &Vector3<f64>) -> f64 {
    let n1 = v3(&lifter.normal(f));
    let n2 = v3(&lifter.normal(g));
    if f == g {
        return signed_angle(e1, e2, &n1);
    }
    let cut = &lifter.layout.cut;
    let fb = cut.mesh.face(g);
    let shared: Vec<usize> =
        cut.mesh.face(f).into_iter().filter(|&a| fb.iter().any(|&b| cut.origin[a] == cut.origin[b])).collect();
    if let [a, b] = shared[..] {
        let e = cut.mesh.position(b) - cut.mesh.position(a);
        let t = signed_angle(&e, e2, &n2) - signed_angle(&e, e1, &n1);
        return (t + PI).rem_euclid(2.0 * PI) - PI;
    }
    // through a vertex there is no unique unfolding; project onto the mean plane
    let n = (n1 + n2).normalize();
    let p = |e: &Vector3<f64>| e - n * n.dot(e);
    signed_angle(&p(e1), &p(e2), &n)
}

/// Turning at every interior point of one strand's dense polyline, zero-length steps
/// dropped. Returns (sample index, arc length, angle); arc lengths of all kept points
/// come back in the second vector.
fn dense_turning(lifter: &Lifter, smp: &[CurveSample], strand: std::ops::Range<usize>) -> (Vec<(usize, f64, f64)>, Vec<(usize, f64)>) {
    let mut pts: Vec<usize> = vec![strand.start];
    // face of the segment leading to each point
    let mut seg_face: Vec<usize> = vec![usize::MAX];
    for j in strand.start + 1..strand.end {
        if dist(&smp[*pts.last().unwrap()].pos, &smp[j].pos) <= 1e-12 {
            continue;
        }
        // the raw predecessor is on the same line as j, also right after a crossing
        let (a, b) = (&smp[j - 1], &smp[j]);
        let face = match lifter.locate(b.part, 0.5 * (a.x + b.x), 0.5 * (a.y + b.y)) {
            Ok(p) => p.face,
            Err(_) => b.face,
        };
        pts.push(j);
        seg_face.push(face);
    }
    let mut arc = vec![0.0];
    for w in pts.windows(2) {
        arc.push(arc.last().unwrap() + dist(&smp[w[0]].pos, &smp[w[1]].pos));
    }
    let mut turns = Vec::new();
    for m in 1..pts.len().saturating_sub(1) {
        let (p, q, r) = (&smp[pts[m - 1]].pos, &smp[pts[m]].pos, &smp[pts[m + 1]].pos);
        let e1 = v3(q) - v3(p);
        let e2 = v3(r) - v3(q);
        turns.push((pts[m], arc[m], hinge_turn(lifter, seg_face[m], seg_face[m + 1], &e1, &e2)));
    }
    (turns, pts.into_iter().zip(arc).collect())
}

fn strands(curve: &SurfaceCurve) -> Vec<std::ops::Range<usize>> {
    let smp = &curve.samples;
    let mut out = Vec::new();
    let mut begin = 0;
    while begin < smp.len() {
        let end = begin + (begin..smp.len()).take_while(|&i| smp[i].strand == smp[begin].strand).count();
        out.push(begin..end);
        begin = end;
    }
    out
}

/// Integrated geodesic turning of the curve around every interior uniform sample.
/// Each uniform sample collects the turning of the dense polyline between the
/// arc-length midpoints to its neighbours.
pub fn turning_angles(lifter: &Lifter, curve: &SurfaceCurve) -> Vec<Turning> {
    let smp = &curve.samples;
    let mut out = Vec::new();
    for (uni, strand) in curve.uniform().into_iter().zip(strands(curve)) {
        if uni.len() < 3 {
            continue;
        }
        let (turns, kept) = dense_turning(lifter, smp, strand);
        let arc_of = |i: usize| kept.iter().find(|k| dist(&smp[k.0].pos, &smp[i].pos) <= 1e-12).map_or(0.0, |k| k.1);
        let u_arc: Vec<f64> = uni.iter().map(|&i| arc_of(i)).collect();
        let mut sums = vec![0.0; uni.len()];
        let mut k = 0;
        for (_, s, angle) in turns {
            while k + 1 < uni.len() && s > 0.5 * (u_arc[k] + u_arc[k + 1]) {
                k += 1;
            }
            sums[k] += angle;
        }
        for i in 1..uni.len() - 1 {
            out.push(Turning { sample: uni[i], part: smp[uni[i]].part, angle: sums[i] });
        }
    }
    out
}

/// Turning of the curve right at each transition crossing, in traversal order.
pub fn crossing_kinks(lifter: &Lifter, curve: &SurfaceCurve) -> Vec<f64> {
    let smp = &curve.samples;
    let mut out = Vec::new();
    for strand in strands(curve) {
        let (turns, _) = dense_turning(lifter, smp, strand);
        for (i, _, angle) in turns {
            if i + 1 < smp.len() && smp[i + 1].part != smp[i].part && smp[i + 1].strand == smp[i].strand {
                out.push(angle);
            }
        }
    }
    out
}

pub fn curve_quality(plan: &SpiralPlan, lifter: &Lifter, curve: &SurfaceCurve) -> Result<CurveQuality, SpiralError> {
    let spacing = SpacingStats::of(&winding_spacings(plan, lifter, curve)?);
    let turning = turning_angles(lifter, curve);
    let mut abs: Vec<f64> = turning.iter().map(|t| t.angle.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let mut hist = vec![0; 36];
    for a in &abs {
        hist[((a.to_degrees() / 5.0) as usize).min(35)] += 1;
    }
    Ok(CurveQuality {
        length: curve.length,
        spacing,
        turning_histogram: hist,
        turning_median: if abs.is_empty() { 0.0 } else { abs[abs.len() / 2] },
        turning_max: abs.last().copied().unwrap_or(0.0),
        turning,
    })
}
