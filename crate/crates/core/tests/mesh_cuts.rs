use ribbon_core::mesh::*;
use ribbon_core::shapes;
use std::collections::HashSet;

fn tube() -> SurfaceMesh {
    shapes::cylinder(1.0, 2.0, 16, 8)
}

#[test]
fn tube_has_two_loops() {
    let m = tube();
    let loops = m.boundary_loops();
    assert_eq!(loops.len(), 2);
    for l in &loops {
        assert_eq!(l.vertices.len(), 16);
        let circ = 16.0 * 2.0 * (std::f64::consts::PI / 16.0).sin();
        assert!((l.length - circ).abs() < 1e-12);
    }
    assert_eq!(m.euler_characteristic(), 0);
}

#[test]
fn sphere_has_no_loops() {
    let s = shapes::uv_sphere(12, 8, |_| 1.0);
    assert!(s.boundary_loops().is_empty());
    assert_eq!(s.euler_characteristic(), 2);
}

#[test]
fn tube_with_hole_has_three_loops() {
    let m = tube();
    let v = 4 * 16 + 3;
    let (h, map) = insert_open_boundary(&m, &OpenSite::Hole(v)).unwrap();
    assert_eq!(h.boundary_loops().len(), 3);
    assert_eq!(map[v], None);
    assert_eq!(h.n_vertices(), m.n_vertices() - 1);
    assert_eq!(h.position(map[v + 1].unwrap()), m.position(v + 1));
}

#[test]
fn hole_in_sphere() {
    let s = shapes::uv_sphere(12, 8, |_| 1.0);
    let (h, _) = insert_open_boundary(&s, &OpenSite::Hole(20)).unwrap();
    let loops = h.boundary_loops();
    assert_eq!(loops.len(), 1);
    assert_eq!(h.euler_characteristic(), 1);
}

#[test]
fn hole_at_boundary_vertex_fails() {
    let m = tube();
    assert_eq!(insert_open_boundary(&m, &OpenSite::Hole(0)).unwrap_err(), MeshError::SiteTouchesBoundary(0));
    // next to the boundary is also rejected
    assert!(matches!(insert_open_boundary(&m, &OpenSite::Hole(16)), Err(MeshError::SiteTouchesBoundary(_))));
}

#[test]
fn slit_has_two_k_edges() {
    let m = tube();
    for k in 2..6 {
        let path: Vec<usize> = (0..=k).map(|j| (j + 1) * 16 + 5).collect();
        let (s, _) = insert_open_boundary(&m, &OpenSite::Slit(path)).unwrap();
        let loops = s.boundary_loops();
        assert_eq!(loops.len(), 3);
        let slit = loops.iter().find(|l| l.vertices.len() != 16).unwrap();
        assert_eq!(slit.halfedges.len(), 2 * k);
    }
}

#[test]
fn tube_seam_cut_gives_disk() {
    let m = tube();
    let path: Vec<usize> = (0..=8).map(|j| j * 16).collect();
    let cut = cut_along_path(&m, &CutPath::seam(path.clone())).unwrap();
    assert_eq!(cut.mesh.euler_characteristic(), 1);
    assert_eq!(cut.mesh.boundary_loops().len(), 1);
    assert_eq!(cut.mesh.n_vertices(), m.n_vertices() + path.len());
    assert_eq!(cut.glued_faces(), m.faces());
    let seam = &cut.seams[0];
    let (l, r) = (seam.left_vertices(), seam.right_vertices());
    assert_eq!(l.len(), 9);
    for j in 0..9 {
        assert_ne!(l[j], r[j]);
        assert_eq!(cut.origin[l[j]], path[j]);
        assert_eq!(cut.origin[r[j]], path[j]);
    }
    for e in &seam.edges {
        let ll = (cut.mesh.position(e.left[0]) - cut.mesh.position(e.left[1])).norm();
        let rl = (cut.mesh.position(e.right[0]) - cut.mesh.position(e.right[1])).norm();
        assert_eq!(ll, rl);
        assert!(cut.mesh.halfedge(e.left[0], e.left[1]).is_some(), "left copy keeps the path direction");
        assert!(cut.mesh.halfedge(e.right[1], e.right[0]).is_some());
    }
    // JSON table round trip
    let v: serde_json::Value = serde_json::from_str(&cut.seam_table_json()).unwrap();
    assert_eq!(v["seams"][0]["edges"].as_array().unwrap().len(), 8);
}

#[test]
fn torus_loop_and_seam_gives_disk() {
    let (nu, nv) = (12, 8);
    let t = shapes::torus(3.0, 1.0, nu, nv);
    let mut ring: Vec<usize> = (0..nu).collect();
    ring.push(0);
    let c1 = cut_along_path(&t, &CutPath::curve(ring)).unwrap();
    assert_eq!(c1.mesh.boundary_loops().len(), 2);
    assert_eq!(c1.mesh.euler_characteristic(), 0);
    // copies of vertex 0, one next to ring 1 and one next to ring nv-1
    let copies: Vec<usize> = (0..c1.origin.len()).filter(|&v| c1.origin[v] == 0).collect();
    assert_eq!(copies.len(), 2);
    let first_mid = (1..c1.origin.len()).find(|&v| c1.origin[v] == nu).unwrap();
    let last_mid = (1..c1.origin.len()).find(|&v| c1.origin[v] == (nv - 1) * nu).unwrap();
    let start = *copies.iter().find(|&&c| c1.mesh.has_edge(c, first_mid)).unwrap();
    let end = *copies.iter().find(|&&c| c1.mesh.has_edge(c, last_mid)).unwrap();
    let mut path = vec![start];
    for j in 1..nv {
        path.push((0..c1.origin.len()).find(|&v| c1.origin[v] == j * nu).unwrap());
    }
    path.push(end);
    let c2 = cut_along_path(&c1.mesh, &CutPath::seam(path)).unwrap();
    assert_eq!(c2.mesh.euler_characteristic(), 1);
    assert_eq!(c2.mesh.boundary_loops().len(), 1);
}

#[test]
fn repeated_vertex_is_rejected() {
    let m = tube();
    let path = vec![16, 32, 33, 17, 16, 0];
    assert_eq!(cut_along_path(&m, &CutPath::curve(path)).unwrap_err(), MeshError::SelfIntersectingPath(16));
}

#[test]
fn disconnected_path_is_rejected() {
    let m = tube();
    assert_eq!(cut_along_path(&m, &CutPath::seam(vec![0, 32])).unwrap_err(), MeshError::NotEdgeConnected(0, 32));
}

#[test]
fn seam_endpoint_must_be_on_boundary() {
    let m = tube();
    let err = cut_along_path(&m, &CutPath::seam(vec![0, 16, 32])).unwrap_err();
    assert_eq!(err, MeshError::SeamEndpointInterior(32));
}

#[test]
fn split_without_cuts_is_identity() {
    let m = tube();
    let (s, origin, _) = split_along_edges(&m, &HashSet::new()).unwrap();
    assert_eq!(s.faces(), m.faces());
    assert_eq!(origin, (0..m.n_vertices()).collect::<Vec<_>>());
}
