use ribbon_core::decomposition::*;
use ribbon_core::mesh::SurfaceMesh;
use ribbon_core::shapes::{self, TShapeParams};
use std::collections::HashSet;

fn check_partition(d: &Decomposition) {
    let mut seen = vec![0; d.mesh.n_faces()];
    for p in &d.parts {
        for &f in &p.faces {
            seen[f] += 1;
        }
    }
    assert!(seen.iter().all(|&c| c == 1), "every face in exactly one part");

    // every transition edge is in exactly two parts' loops, and arcs cover them exactly
    let trans = d.transition_edges();
    let mut count = std::collections::HashMap::new();
    for p in &d.parts {
        for l in &p.loops {
            let mut covered = 0;
            for a in &l.arcs {
                covered += a.edges;
                let vs = l.arc_vertices(a);
                for w in vs.windows(2) {
                    *count.entry((w[0].min(w[1]), w[0].max(w[1]))).or_insert(0) += 1;
                }
            }
            if l.role == LoopRole::Transition {
                assert_eq!(covered, l.vertices.len());
                let total: f64 = l.arcs.iter().map(|a| a.length).sum();
                assert!((total - l.length).abs() < 1e-9 * l.length);
            }
        }
    }
    assert_eq!(count.len(), trans.len());
    for e in &trans {
        assert_eq!(count[e], 2);
    }
}

#[test]
fn straight_tube_is_one_part() {
    let m = shapes::cylinder(1.0, 3.0, 12, 6);
    let d = apply_segmentation_spec(&m, &Segmentation::default()).unwrap();
    assert_eq!(d.parts.len(), 1);
    assert!(d.parts[0].loops.iter().all(|l| l.role == LoopRole::Open));
    assert!(validate_traversal(&d, &[0]).is_ok());
    check_partition(&d);
}

#[test]
fn sphere_is_not_an_annulus() {
    let s = shapes::uv_sphere(12, 8, |_| 1.0);
    let err = apply_segmentation_spec(&s, &Segmentation::default()).unwrap_err();
    assert_eq!(err, DecompositionError::NotAnnulus { part: 0, euler: 2, boundary_loops: 0 });
    assert!(err.to_string().contains("not an annulus"));
}

fn t_fixture(one_ring: bool) -> (SurfaceMesh, Segmentation) {
    let mut p = TShapeParams::default();
    if one_ring {
        p.hole_lon = 0;
    }
    let f = shapes::t_shape(&p);
    (f.mesh, f.segmentation)
}

#[test]
fn t_shape_has_three_parts() {
    for one_ring in [false, true] {
        let (m, seg) = t_fixture(one_ring);
        if one_ring {
            assert_eq!(seg.open_sites.len(), 3);
        }
        let d = apply_segmentation_spec(&m, &seg).unwrap();
        assert_eq!(d.parts.len(), 3);
        for p in &d.parts {
            assert_eq!(p.loops[0].role, LoopRole::Open);
            assert_eq!(p.loops[1].role, LoopRole::Transition);
            // both neighbours on the transition loop, each once
            assert_eq!(p.loops[1].arcs.len(), 2);
            assert_eq!(p.neighbors().len(), 2);
        }
        check_partition(&d);
        for order in [[0, 1, 2], [2, 0, 1], [1, 2, 0]] {
            assert!(validate_traversal(&d, &order).is_ok());
        }
    }
}

#[test]
fn t_shape_arcs_follow_loop_orientation() {
    let (m, seg) = t_fixture(false);
    let d = apply_segmentation_spec(&m, &seg).unwrap();
    for p in &d.parts {
        let l = &p.loops[1];
        let mut expect = 0;
        let mut off = 0.0;
        for a in &l.arcs {
            assert_eq!(a.start, expect);
            assert!((a.offset - off).abs() < 1e-12);
            expect += a.edges;
            off += a.length;
        }
        // the part interior is on the left of each loop edge
        for i in 0..l.vertices.len() {
            let (a, b) = l.edge(i);
            let h = d.mesh.halfedge(a, b).unwrap();
            assert_eq!(d.face_part[h / 3], p.id);
        }
        // the neighbour sees the same arc reversed
        for a in &l.arcs {
            let q = &d.parts[a.neighbor];
            let qa = q.loops[1].arcs.iter().find(|x| x.neighbor == p.id).unwrap();
            assert_eq!(qa.edges, a.edges);
            let mut mine = l.arc_vertices(a);
            mine.reverse();
            assert_eq!(mine, q.loops[1].arc_vertices(qa));
        }
    }
}

#[test]
fn two_chain_has_one_arc_each() {
    let f = shapes::tube_chain(2, 12, 4);
    let d = apply_segmentation_spec(&f.mesh, &f.segmentation).unwrap();
    assert_eq!(d.parts.len(), 2);
    check_partition(&d);
    assert_eq!(d.adjacency, vec![vec![1], vec![0]]);
    for p in &d.parts {
        let arcs = interface_intervals(p);
        assert_eq!(arcs.len(), 1);
        assert_eq!(arcs[0].1.edges, 12);
    }
}

fn chain_decomp() -> Decomposition {
    // A-B-C chain built from the T shape by dropping the A-C adjacency
    let (m, seg) = t_fixture(false);
    let mut d = apply_segmentation_spec(&m, &seg).unwrap();
    d.adjacency = vec![vec![1], vec![0, 2], vec![1]];
    d
}

#[test]
fn chain_traversal() {
    let d = chain_decomp();
    assert!(validate_traversal(&d, &[0, 1, 2]).is_ok());
    assert!(validate_traversal(&d, &[2, 1, 0]).is_ok());
    assert_eq!(validate_traversal(&d, &[0, 2, 1]), Err(TraversalError::NotAdjacent { a: 0, b: 2 }));
    assert_eq!(validate_traversal(&d, &[0, 1]), Err(TraversalError::NotPermutation { parts: 3 }));
    assert_eq!(validate_traversal(&d, &[0, 1, 1]), Err(TraversalError::NotPermutation { parts: 3 }));
}

#[test]
fn middle_of_straight_chain_has_no_open_boundary() {
    // the middle link of a straight 3-chain has two transition loops
    let f = shapes::tube_chain(3, 12, 4);
    let err = apply_segmentation_spec(&f.mesh, &f.segmentation).unwrap_err();
    assert_eq!(err, DecompositionError::NoOpenBoundary { part: 1 });
}

#[test]
fn extra_hole_breaks_the_annulus() {
    let f = shapes::tube_chain(2, 12, 4);
    let mut seg = f.segmentation.clone();
    seg.open_sites.push(SiteSpec { kind: "hole".into(), ids: vec![2 * 12 + 3] });
    let err = apply_segmentation_spec(&f.mesh, &seg).unwrap_err();
    assert!(matches!(err, DecompositionError::NotAnnulus { part: 0, boundary_loops: 3, .. }));
}

#[test]
fn loops_must_be_edge_connected() {
    let m = shapes::cylinder(1.0, 3.0, 12, 6);
    let seg = Segmentation { loops: vec![vec![24, 26, 27, 24]], ..Default::default() };
    assert!(matches!(apply_segmentation_spec(&m, &seg), Err(DecompositionError::LoopNotConnected { .. })));
}

#[test]
fn segmentation_json_schema() {
    let src = r#"{"loops": [[1,2,3]], "open_sites": [{"type": "hole", "ids": [7]}], "traversal": [0], "names": ["a"]}"#;
    let s: Segmentation = serde_json::from_str(src).unwrap();
    assert_eq!(s.open_sites[0].kind, "hole");
    assert_eq!(s.traversal, Some(vec![0]));
    let back: Segmentation = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
    assert_eq!(back, s);
    let set: HashSet<_> = s.sites().unwrap().into_iter().map(|x| format!("{x:?}")).collect();
    assert!(set.contains("Hole(7)"));
}
