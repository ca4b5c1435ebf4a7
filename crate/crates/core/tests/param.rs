use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ribbon_core::decomposition::{apply_segmentation_spec, Decomposition, Segmentation};
use ribbon_core::mesh::SeamKind;
use ribbon_core::param::*;
use ribbon_core::shapes::{self, TShapeParams};

fn decompose(f: &shapes::Fixture) -> Decomposition {
    apply_segmentation_spec(&f.mesh, &f.segmentation).unwrap()
}

fn tube() -> Decomposition {
    let m = shapes::cylinder(1.0, 2.0, 16, 6);
    apply_segmentation_spec(&m, &Segmentation::default()).unwrap()
}

fn t_decomp() -> Decomposition {
    let mut p = TShapeParams::default();
    p.n_lon = 32;
    p.n_lat = 16;
    p.hole_lon = 1;
    p.hole_lat = 1;
    decompose(&shapes::t_shape(&p))
}

fn run(d: &Decomposition) -> Parameterization {
    parameterize(d, ConstraintOptions::default(), &SolverConfig::default()).unwrap()
}

/// Max deviation of `sign * (a - b)` from its mean over seam vertex pairs.
fn transform_fit(state: &ParamState, pairs: &[(usize, usize)], sign: f64) -> f64 {
    let d: Vec<[f64; 2]> = pairs
        .iter()
        .map(|&(a, b)| {
            let (p, q) = (state.coords[a], state.coords[b]);
            [p[0] - sign * q[0], p[1] - sign * q[1]]
        })
        .collect();
    let n = d.len() as f64;
    let m = [d.iter().map(|v| v[0]).sum::<f64>() / n, d.iter().map(|v| v[1]).sum::<f64>() / n];
    d.iter().map(|v| (v[0] - m[0]).abs().max((v[1] - m[1]).abs())).fold(0.0, f64::max)
}

/// Fits the seam transform on every run of edges whose copies are contiguous.
/// Runs break where the seam crosses another part's cylinder cut.
fn check_seams(p: &Parameterization) {
    for seam in &p.layout.cut.seams {
        let sign = match seam.kind {
            SeamKind::Cylinder { .. } => 1.0,
            SeamKind::Interface { .. } => -1.0,
            SeamKind::Path => unreachable!(),
        };
        let mut runs: Vec<Vec<(usize, usize)>> = Vec::new();
        for (i, e) in seam.edges.iter().enumerate() {
            let joined = i > 0 && {
                let prev = &seam.edges[i - 1];
                prev.left[1] == e.left[0] && prev.right[1] == e.right[0]
            };
            if !joined {
                runs.push(vec![(e.left[0], e.right[0])]);
            }
            runs.last_mut().unwrap().push((e.left[1], e.right[1]));
        }
        assert!(runs.len() <= 3, "{} runs", runs.len());
        for run in &runs {
            let dev = transform_fit(&p.state, run, sign);
            assert!(dev <= 1e-8, "{:?} deviates by {dev:e}", seam.kind);
        }
    }
}

#[test]
fn row_counts_single_tube() {
    let d = tube();
    let layout = ChartLayout::build(&d).unwrap();
    let sys = build_constraints(&layout, ConstraintOptions::default()).unwrap();
    let seam = &layout.cut.seams[0];
    let n = seam.path.len();
    let ch = &layout.charts[0];
    assert_eq!(sys.count(|t| matches!(t, RowTag::Cyl { .. })), 2 * (n - 1));
    assert_eq!(sys.count(|t| matches!(t, RowTag::Str { .. })), (ch.top.len() - 1) + (ch.bottom.len() - 1));
    assert_eq!(sys.count(|t| matches!(t, RowTag::Int { .. })), 0);
}

#[test]
fn row_counts_two_part_chain() {
    let d = decompose(&shapes::tube_chain(2, 12, 4));
    let layout = ChartLayout::build(&d).unwrap();
    let sys = build_constraints(&layout, ConstraintOptions::default()).unwrap();
    let int_seams: Vec<_> = layout.cut.seams.iter().filter(|s| matches!(s.kind, SeamKind::Interface { .. })).collect();
    assert_eq!(int_seams.len(), 1);
    let s = int_seams[0].path.len();
    assert_eq!(sys.count(|t| matches!(t, RowTag::Int { .. })), 2 * (s - 1));
    let off = build_constraints(&layout, ConstraintOptions { interface: false }).unwrap();
    assert_eq!(off.count(|t| matches!(t, RowTag::Int { .. })), 0);
}

fn dense(sys: &ConstraintSystem) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(sys.rows.len(), sys.n_vars);
    for (i, r) in sys.rows.iter().enumerate() {
        for &(v, k) in &r.terms {
            c[(i, v)] += k;
        }
    }
    c
}

/// Exact rank over the rationals; all coefficients are small integers.
fn exact_rank(sys: &ConstraintSystem) -> usize {
    let mut m: Vec<Vec<(i128, i128)>> = (0..sys.rows.len()).map(|_| vec![(0, 1); sys.n_vars]).collect();
    for (i, r) in sys.rows.iter().enumerate() {
        for &(v, k) in &r.terms {
            assert_eq!(k.fract(), 0.0);
            m[i][v].0 += k as i128;
        }
    }
    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 { a.abs() } else { gcd(b, a % b) }
    }
    let norm = |(n, d): (i128, i128)| {
        let g = gcd(n, d).max(1) * d.signum();
        (n / g, d / g)
    };
    let mut rank = 0;
    for col in 0..sys.n_vars {
        let Some(p) = (rank..m.len()).find(|&r| m[r][col].0 != 0) else { continue };
        m.swap(rank, p);
        let piv = m[rank][col];
        for r in 0..m.len() {
            if r == rank || m[r][col].0 == 0 {
                continue;
            }
            // row_r -= (m[r][col] / piv) * row_rank
            let f = norm((m[r][col].0 * piv.1, m[r][col].1 * piv.0));
            for c in col..sys.n_vars {
                let a = m[r][c];
                let b = m[rank][c];
                let prod = norm((f.0 * b.0, f.1 * b.1));
                m[r][c] = norm((a.0 * prod.1 - prod.0 * a.1, a.1 * prod.1));
            }
        }
        rank += 1;
    }
    rank
}

#[test]
fn elimination_keeps_the_null_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in [tube(), decompose(&shapes::tube_chain(2, 8, 3)), t_decomp()] {
        let layout = ChartLayout::build(&d).unwrap();
        let sys = eliminate_redundant(&build_constraints(&layout, ConstraintOptions::default()).unwrap());
        let red = sys.reduction.as_ref().unwrap();
        let rank = exact_rank(&sys);
        assert_eq!(red.kept_rows.len(), rank);
        assert_eq!(red.n_free(), sys.n_vars - rank);
        assert_eq!(red.kept_rows.len() + red.dropped_rows.len(), sys.rows.len());
        let kept = ConstraintSystem {
            n_vars: sys.n_vars,
            rows: red.kept_rows.iter().map(|&i| sys.rows[i].clone()).collect(),
            reduction: None,
        };
        if sys.n_vars < 800 {
            let svd_rank = dense(&kept).rank(1e-9);
            assert_eq!(svd_rank, kept.rows.len(), "kept rows are independent");
        }
        for _ in 0..100 {
            let z: Vec<f64> = (0..red.n_free()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let x = red.expand(&z);
            assert!(sys.residual(&x) < 1e-12);
            assert_eq!(red.restrict(&x), z);
        }
    }
}

#[test]
fn tutte_start_is_valid() {
    for d in [tube(), decompose(&shapes::tube_chain(2, 12, 4)), t_decomp()] {
        let layout = ChartLayout::build(&d).unwrap();
        let sys = build_constraints(&layout, ConstraintOptions::default()).unwrap();
        let st = tutte_initialize(&layout).unwrap();
        assert_eq!(st.flipped_count(), 0);
        let x = st.x();
        for tag in [0, 1, 2] {
            let r = sys
                .rows
                .iter()
                .filter(|r| match r.tag {
                    RowTag::Cyl { .. } => tag == 0,
                    RowTag::Str { .. } => tag == 1,
                    RowTag::Int { .. } => tag == 2,
                })
                .map(|r| r.eval(&x).abs())
                .fold(0.0, f64::max);
            assert!(r <= 1e-10, "tag {tag} residual {r:e}");
        }
    }
}

#[test]
fn reduced_gradient_matches_differences() {
    let d = decompose(&shapes::tube_chain(2, 8, 3));
    let layout = ChartLayout::build(&d).unwrap();
    let sys = eliminate_redundant(&build_constraints(&layout, ConstraintOptions::default()).unwrap());
    let red = sys.reduction.as_ref().unwrap();
    let st = tutte_initialize(&layout).unwrap();
    let z0 = red.restrict(&st.x());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 100 {
        let z: Vec<f64> = z0.iter().map(|v| v + rng.random_range(-0.02..0.02)).collect();
        let x = red.expand(&z);
        let Some(asm) = assemble_energy(&st.faces, &st.rest, &x, PsdMode::None) else { continue };
        let g = red.pull_back(&asm.gradient);
        let k = rng.random_range(0..z.len());
        let h = 1e-6;
        let e = |dz: f64| {
            let mut zz = z.clone();
            zz[k] += dz;
            total_energy(&st.faces, &st.rest, &red.expand(&zz))
        };
        let fd = (e(h) - e(-h)) / (2.0 * h);
        assert!((fd - g[k]).abs() <= 1e-5 * (1.0 + g[k].abs()), "{fd} vs {}", g[k]);
        checked += 1;
    }
}

#[test]
fn cylinder_unrolls_isometrically() {
    let d = tube();
    let p = run(&d);
    assert!(p.report.converged, "{:?}", p.report.termination);
    assert!(p.report.max_residual <= 1e-9);
    assert!((p.report.distortion.max - 4.0).abs() < 1e-6, "{:?}", p.report.distortion);
    check_seams(&p);
    // restarting from the optimum is a fixed point
    let (again, rep) = solve(&p.layout, &p.state, &p.system, &SolverConfig::default()).unwrap();
    assert!(rep.iterations <= 1);
    let dev = again.x().iter().zip(p.state.x()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(dev < 1e-10, "{dev:e}");
}

#[test]
fn energy_decreases_and_stays_feasible() {
    let d = t_decomp();
    let p = run(&d);
    assert!(p.report.converged, "{:?} after {}", p.report.termination, p.report.iterations);
    assert!(p.report.energies.windows(2).all(|w| w[1] <= w[0]));
    assert!(p.report.max_residual <= 1e-9);
    assert_eq!(p.state.flipped_count(), 0);
    assert!(p.state.distortions().iter().all(|&d| d >= 4.0 - 1e-9));
    check_seams(&p);
    let csv = p.report.energy_csv();
    assert_eq!(csv.lines().count(), p.report.energies.len() + 1);
}

#[test]
fn chain_seams_are_rigid() {
    let p = run(&decompose(&shapes::frustum_chain(1.6, 1.0, 16, 5)));
    assert!(p.report.converged);
    check_seams(&p);
}

#[test]
fn infeasible_start_is_rejected() {
    let d = tube();
    let layout = ChartLayout::build(&d).unwrap();
    let sys = eliminate_redundant(&build_constraints(&layout, ConstraintOptions::default()).unwrap());
    let mut st = tutte_initialize(&layout).unwrap();
    let b = layout.charts[0].bottom[2];
    st.coords[b][1] += 0.1;
    assert!(matches!(solve(&layout, &st, &sys, &SolverConfig::default()), Err(ParamError::Infeasible(_))));
}
