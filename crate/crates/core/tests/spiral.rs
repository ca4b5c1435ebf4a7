use ribbon_core::decomposition::{apply_segmentation_spec, Decomposition, Segmentation};
use ribbon_core::param::*;
use ribbon_core::shapes::{self, TShapeParams};
use ribbon_core::spiral::*;

fn decompose(f: &shapes::Fixture) -> Decomposition {
    apply_segmentation_spec(&f.mesh, &f.segmentation).unwrap()
}

fn run(d: &Decomposition, opts: ConstraintOptions) -> Parameterization {
    parameterize(d, opts, &SolverConfig::default()).unwrap()
}

struct Traced {
    plan: SpiralPlan,
    curve: SurfaceCurve,
    quality: CurveQuality,
}

fn trace(d: &Decomposition, p: &Parameterization, spec: &SpiralSpec, state: &ParamState) -> Traced {
    let plan = plan_lines(spec, d, &p.layout, state).unwrap();
    let lifter = Lifter::new(&p.layout, state, plan.frames.clone());
    let curve = trace_curve(&plan, &lifter, 0.05).unwrap();
    let quality = curve_quality(&plan, &lifter, &curve).unwrap();
    Traced { plan, curve, quality }
}

fn cylinder() -> (Decomposition, Parameterization) {
    // 2 * 40 * 25 = 2000 triangles
    let m = shapes::cylinder(1.0, 3.0, 40, 25);
    let d = apply_segmentation_spec(&m, &Segmentation::default()).unwrap();
    let p = run(&d, ConstraintOptions::default());
    (d, p)
}

fn t_shape() -> (Decomposition, Parameterization) {
    let mut tp = TShapeParams::default();
    tp.n_lon = 32;
    tp.n_lat = 16;
    tp.hole_lon = 1;
    tp.hole_lat = 1;
    let d = decompose(&shapes::t_shape(&tp));
    let p = run(&d, ConstraintOptions::default());
    (d, p)
}

#[test]
fn single_tube_line_spans_w_periods() {
    let (d, p) = cylinder();
    let spec = SpiralSpec { windings: vec![5], ..Default::default() };
    let t = trace(&d, &p, &spec, &p.state);
    assert_eq!(t.plan.lines.len(), 1);
    let line = &t.plan.lines[0];
    let f = &t.plan.frames[0];
    assert!(((line.end[0] - line.start[0]) - 5.0 * f.period).abs() < 1e-12);
    assert_eq!(line.start[1], f.y_bottom);
    assert_eq!(line.end[1], f.y_top);
    assert!(t.plan.crossings.is_empty());
}

#[test]
fn helix_windings_are_evenly_spaced() {
    let (d, p) = cylinder();
    for w in [3u32, 8, 20] {
        let spec = SpiralSpec { windings: vec![w], ..Default::default() };
        let t = trace(&d, &p, &spec, &p.state);
        let s = &t.quality.spacing;
        assert!(s.count > 0);
        assert!(s.cv <= 0.01, "w={w}: cv {}", s.cv);
        // closed-form helix: windings are h / w apart along the axis
        let pitch = 3.0 / w as f64;
        assert!((s.mean - pitch).abs() <= 0.01 * pitch, "w={w}: mean {} vs {pitch}", s.mean);
        // every uniform sample sits on the helix z = h * x / (w l)
        let f = &t.plan.frames[0];
        let line = &t.plan.lines[0];
        for c in t.curve.samples.iter().filter(|c| c.kind == SampleKind::Grid) {
            let z = 3.0 * (c.x - line.start[0]) / (w as f64 * f.period);
            assert!((c.pos[2] - z).abs() < 1e-6, "z {} vs {z}", c.pos[2]);
        }
    }
}

#[test]
fn one_winding_barely_turns() {
    let (d, p) = cylinder();
    let spec = SpiralSpec { windings: vec![1], ..Default::default() };
    let t = trace(&d, &p, &spec, &p.state);
    // facets of the polygonal cylinder bend the chords slightly; all fall in the first 5 degree bin
    let n = t.quality.turning.len();
    assert!(n > 0);
    assert_eq!(t.quality.turning_histogram[0], n, "max {}", t.quality.turning_max);
}

#[test]
fn consecutive_samples_share_a_face_or_edge() {
    let (d, p) = t_shape();
    let t = trace(&d, &p, &SpiralSpec::default(), &p.state);
    let mesh = &p.layout.cut.mesh;
    let adjacent = |f: usize, g: usize| {
        f == g || (0..3).any(|k| mesh.twin(3 * f + k).is_some_and(|h| h / 3 == g))
    };
    let mut seam_steps = 0;
    for w in t.curve.samples.windows(2) {
        if w[0].strand != w[1].strand {
            continue;
        }
        if w[0].part != w[1].part {
            // passing a transition loop: the two points coincide in 3D
            let d: f64 = (0..3).map(|k| (w[0].pos[k] - w[1].pos[k]).powi(2)).sum::<f64>().sqrt();
            assert!(d < 1e-9, "{d:e}");
            seam_steps += 1;
            continue;
        }
        if !adjacent(w[0].face, w[1].face) {
            // cylinder seam: the faces touch across the cut
            let shared = mesh.face(w[0].face).iter().any(|&a| {
                mesh.face(w[1].face).iter().any(|&b| p.layout.cut.origin[a] == p.layout.cut.origin[b])
            });
            assert!(shared, "faces {} and {} are not adjacent", w[0].face, w[1].face);
        }
    }
    assert_eq!(seam_steps, t.plan.crossings.len());
}

#[test]
fn fermat_turns_are_half_a_period_apart() {
    let (d, p) = t_shape();
    let t = trace(&d, &p, &SpiralSpec::default(), &p.state);
    assert_eq!(t.plan.traversal.len(), 3);
    assert!(t.plan.warnings.is_empty(), "{:?}", t.plan.warnings);
    let mid = t.plan.traversal[1];
    let l = t.plan.frames[mid].period;
    let lines: Vec<&ParamLine> = t.plan.lines_of(mid).map(|(_, l)| l).collect();
    assert_eq!(lines.len(), 2);
    let (x1, x2) = (lines[0].end[0], lines[1].start[0]);
    let d = (x2 - x1).rem_euclid(l);
    // consecutive intersections with the open line are d and l - d apart
    assert!((d - (l - d)).abs() <= 1e-6, "{d} vs {}", l - d);
    assert_eq!(t.plan.bridges.len(), 1);
}

#[test]
fn user_turns_off_half_period_warn() {
    let (d, p) = t_shape();
    let mid = 1;
    let mut spec = SpiralSpec::default();
    spec.turns = vec![None; 3];
    spec.turns[mid] = Some([0.0, 0.1]);
    let plan = plan_lines(&spec, &d, &p.layout, &p.state).unwrap();
    assert_eq!(plan.warnings.len(), 1);
}

#[test]
fn two_part_chain_crosses_once() {
    let d = decompose(&shapes::tube_chain(2, 16, 6));
    let p = run(&d, ConstraintOptions::default());
    let t = trace(&d, &p, &SpiralSpec::default(), &p.state);
    assert_eq!(t.plan.crossings.len(), 1);
    let parts: Vec<usize> = t.curve.samples.iter().map(|c| c.part).collect();
    let switches = parts.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(switches, 1);
    assert!(t.curve.samples.iter().all(|c| c.strand == 0));
    // endpoints on the open loops of the first and last part
    let (a, b) = (t.curve.samples.first().unwrap(), t.curve.samples.last().unwrap());
    assert!(a.pos[2].abs() < 1e-9);
    assert!((b.pos[2] - 3.0).abs() < 1e-9);
}

#[test]
fn lifting_is_period_consistent() {
    let (_, p) = t_shape();
    let frames = chart_frames(&p.layout, &p.state).unwrap();
    let lifter = Lifter::new(&p.layout, &p.state, frames.clone());
    let mut worst: f64 = 0.0;
    for f in &frames {
        for i in 0..40 {
            for j in 1..10 {
                let x = f.x_bottom + f.period * i as f64 / 40.0;
                let y = f.y_bottom + f.height() * j as f64 / 10.0;
                let Ok(a) = lifter.locate(f.part, x, y) else { continue };
                let b = lifter.locate(f.part, x + f.period, y).unwrap();
                let c = lifter.locate(f.part, x - 3.0 * f.period, y).unwrap();
                for q in [b, c] {
                    worst = worst.max((0..3).map(|k| (a.pos[k] - q.pos[k]).abs()).fold(0.0, f64::max));
                }
            }
        }
    }
    assert!(worst <= 1e-8, "{worst:e}");
}

#[test]
fn optimized_charts_space_windings_more_evenly() {
    let m = shapes::bent_tube(24, 64);
    let d = apply_segmentation_spec(&m, &Segmentation::default()).unwrap();
    let p = run(&d, ConstraintOptions::default());
    let spec = SpiralSpec { windings: vec![8], ..Default::default() };
    let opt = trace(&d, &p, &spec, &p.state);
    let init = trace(&d, &p, &spec, &p.initial);
    assert!(
        opt.quality.spacing.cv < init.quality.spacing.cv,
        "optimized {} vs Tutte {}",
        opt.quality.spacing.cv,
        init.quality.spacing.cv
    );
}

/// Turning right at the crossing and the median turning per uniform sample.
fn seam_kink(d: &Decomposition, p: &Parameterization, windings: [u32; 2]) -> (f64, f64) {
    let spec = SpiralSpec { windings: windings.to_vec(), ..Default::default() };
    let plan = plan_lines(&spec, d, &p.layout, &p.state).unwrap();
    let lifter = Lifter::new(&p.layout, &p.state, plan.frames.clone());
    let curve = trace_curve(&plan, &lifter, 0.05).unwrap();
    let q = curve_quality(&plan, &lifter, &curve).unwrap();
    let kinks = crossing_kinks(&lifter, &curve);
    assert_eq!(kinks.len(), 1);
    (kinks[0].abs(), q.turning_median)
}

#[test]
fn missing_interface_rows_leave_a_kink() {
    let d = decompose(&shapes::frustum_chain(1.6, 1.0, 24, 8));
    let off = run(&d, ConstraintOptions { interface: false });
    let (kink, median) = seam_kink(&d, &off, [4, 4]);
    assert!(kink >= 5.0 * median, "kink {kink} vs median {median}");
}

#[test]
fn matching_slopes_cross_smoothly() {
    // equal parts and windings: the line continues straight through the rotated chart
    let d = decompose(&shapes::tube_chain(2, 16, 6));
    let on = run(&d, ConstraintOptions::default());
    let (kink, _) = seam_kink(&d, &on, [4, 4]);
    assert!(kink < 1e-9, "{kink:e}");
}

#[test]
fn crossing_lines_are_rejected() {
    let (d, p) = t_shape();
    let mut spec = SpiralSpec::default();
    // both turn points on the same spot make the two lines of the middle part meet
    spec.turns = vec![None, Some([0.3, 0.3]), None];
    assert!(matches!(plan_lines(&spec, &d, &p.layout, &p.state), Err(SpiralError::SelfIntersecting { .. })));
}

#[test]
fn bad_specs_are_rejected() {
    let (d, p) = cylinder();
    let zero = SpiralSpec { windings: vec![0], ..Default::default() };
    assert!(matches!(plan_lines(&zero, &d, &p.layout, &p.state), Err(SpiralError::BadWindings(0))));
    let (td, tp) = t_shape();
    let far = SpiralSpec { crossings: vec![Some(1e6)], ..Default::default() };
    assert!(matches!(plan_lines(&far, &td, &tp.layout, &tp.state), Err(SpiralError::CrossingOutside { .. })));
    let many = SpiralSpec { crossings: vec![None; 5], ..Default::default() };
    assert!(matches!(plan_lines(&many, &td, &tp.layout, &tp.state), Err(SpiralError::CrossingCount { .. })));
}
