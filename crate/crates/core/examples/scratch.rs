use nalgebra::Point3;
use ribbon_core::decomposition::*;
use ribbon_core::param::*;
use ribbon_core::shapes;
use ribbon_core::spiral::*;
fn hook(rad: f64, angle: f64) -> impl Fn(f64) -> Point3<f64> {
    move |t: f64| {
        if t <= 0.5 {
            Point3::new(0.0, 0.0, 2.0 * t)
        } else {
            let a = angle * (t - 0.5) * 2.0;
            Point3::new(rad * (1.0 - a.cos()), 0.0, 1.0 + rad * a.sin())
        }
    }
}
fn skew(bulge: f64, shear: f64) -> ribbon_core::mesh::SurfaceMesh {
    let m = shapes::revolution(|t| 1.0 + bulge * (std::f64::consts::PI * t).sin(), 2.0, 32, 32);
    let pos = m.positions().iter().map(|p| {
        let z = p.z;
        let s = if z > 1.0 { shear * (z - 1.0).powi(2) } else { 0.0 };
        Point3::new(p.x * (1.0 + 0.5 * s) + s, p.y, z)
    }).collect();
    m.with_positions(pos).unwrap()
}
fn main() {
    for (name, mesh, n, cut) in [
        ("skew", skew(0.0, 1.0), 32, 16),
        ("skewbulge", skew(0.6, 1.0), 32, 16),
        ("skewbulge2", skew(0.6, 2.0), 32, 12),
    ] {
        let mut ring = shapes::tube_ring(n, cut);
        ring.push(ring[0]);
        let seg = Segmentation { loops: vec![ring], open_sites: vec![], traversal: Some(vec![0, 1]), names: vec![] };
        let d = apply_segmentation_spec(&mesh, &seg).unwrap();
        for int in [true, false] {
            let p = parameterize(&d, ConstraintOptions { interface: int }, &SolverConfig::default()).unwrap();
            for w in [[4u32, 4], [6, 6]] {
                let spec = SpiralSpec { windings: w.to_vec(), ..Default::default() };
                let plan = plan_lines(&spec, &d, &p.layout, &p.state).unwrap();
                let lifter = Lifter::new(&p.layout, &p.state, plan.frames.clone());
                let curve = trace_curve(&plan, &lifter, 0.05).unwrap();
                let q = curve_quality(&plan, &lifter, &curve).unwrap();
                let kink = crossing_kinks(&lifter, &curve);
                let mut abs: Vec<f64> = q.turning.iter().map(|t| t.angle.abs()).collect();
                abs.sort_by(f64::total_cmp);
                let p90 = abs[abs.len() * 9 / 10];
                let fr: Vec<_> = plan.frames.iter().map(|f| (f.period, f.height())).collect();
                println!("{name} int={int} w={w:?} frames={fr:.3?} kink={:.5} median={:.2e} p90={p90:.2e} max={:.4}", kink[0], q.turning_median, q.turning_max);
            }
        }
    }
}
