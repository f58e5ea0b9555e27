use std::collections::HashSet;

use convspline::quadrature::adaptive_integrate;
use convspline_tdbie::{assemble_rhs, sphere_exact_density, IncidentField, Point, SurfaceMesh};
use proptest::prelude::*;

fn edge_count(mesh: &SurfaceMesh) -> usize {
    let mut edges = HashSet::new();
    for t in mesh.triangles() {
        for i in 0..3 {
            let (a, b) = (t[i], t[(i + 1) % 3]);
            edges.insert((a.min(b), a.max(b)));
        }
    }
    edges.len()
}

#[test]
fn icosphere_is_a_closed_genus_zero_surface() {
    for s in 0..4 {
        let mesh = SurfaceMesh::unit_sphere(s).unwrap();
        let f = 20 * 4usize.pow(s as u32);
        assert_eq!(mesh.len(), f);
        let (v, e) = (mesh.vertices().len(), edge_count(&mesh));
        assert_eq!(e, 3 * f / 2);
        assert_eq!(v + f - e, 2);
        assert!(mesh.vertices().iter().all(|p| (p.norm() - 1.0).abs() <= 1e-12));
    }
}

#[test]
fn icosphere_area_approaches_sphere() {
    let full = 4.0 * std::f64::consts::PI;
    let deficits: Vec<f64> = (0..5).map(|s| full - SurfaceMesh::unit_sphere(s).unwrap().total_area()).collect();
    assert!(deficits[2] / full < 0.02, "{}", deficits[2] / full);
    for w in deficits.windows(2) {
        assert!(w[0] > 0.0 && w[1] < w[0]);
    }
}

#[test]
fn icosphere_normals_point_outward() {
    let mesh = SurfaceMesh::unit_sphere(2).unwrap();
    for i in 0..mesh.len() {
        let [a, b, c] = mesh.corners(i);
        assert!((b - a).cross(&(c - a)).dot(&mesh.centroid(i)) > 0.0);
    }
}

#[test]
fn off_round_trip() {
    let mesh = SurfaceMesh::unit_sphere(0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ico.off");
    mesh.write_off(&path).unwrap();
    let back = SurfaceMesh::read_off(&path).unwrap();
    assert_eq!(back.triangles(), mesh.triangles());
    for (p, q) in back.vertices().iter().zip(mesh.vertices()) {
        assert!((p - q).amax() <= 1e-15);
    }
    let text = "# comment\nOFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
    let tri = SurfaceMesh::from_off(text).unwrap();
    assert!((tri.total_area() - 0.5).abs() < 1e-15);
}

#[test]
fn element_geometry_of_the_square() {
    let mesh = SurfaceMesh::unit_square(2).unwrap();
    assert!((mesh.diameter() - 2f64.sqrt()).abs() < 1e-15);
    assert!((mesh.mean_element_size() - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    for i in 0..mesh.len() {
        assert!((mesh.area(i) - 0.125).abs() < 1e-15);
    }
}

#[test]
fn rhs_is_causal() {
    let mesh = SurfaceMesh::unit_square(3).unwrap();
    let field = IncidentField::new(0.2, Point::new(0.5, 0.5, 1.5));
    // The nearest point of the plate is 1.5 away from the source.
    let a = assemble_rhs(&mesh, &field, 1.29).unwrap();
    assert!(a.iter().all(|&v| v == 0.0));
    let a = assemble_rhs(&mesh, &field, 1.4).unwrap();
    assert!(a.iter().any(|&v| v != 0.0));
}

#[test]
fn rhs_is_uniform_on_congruent_sphere_faces() {
    let mesh = SurfaceMesh::unit_sphere(0).unwrap();
    let a = assemble_rhs(&mesh, &IncidentField::default(), 1.5).unwrap();
    let dens: Vec<f64> = a.iter().zip(mesh.areas()).map(|(v, s)| v / s).collect();
    let mean = dens.iter().sum::<f64>() / dens.len() as f64;
    assert!(mean > 0.0);
    assert!(dens.iter().all(|d| (d - mean).abs() <= 1e-13 * mean));
}

#[test]
fn rhs_spread_on_refined_spheres_shrinks() {
    // Faces of refined icospheres are not congruent, so `|x|` varies slightly across them.
    let spread = |s: usize| {
        let mesh = SurfaceMesh::unit_sphere(s).unwrap();
        let a = assemble_rhs(&mesh, &IncidentField::default(), 1.5).unwrap();
        let dens: Vec<f64> = a.iter().zip(mesh.areas()).map(|(v, s)| v / s).collect();
        let (lo, hi) = dens.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &d| (l.min(d), h.max(d)));
        (hi - lo) / hi
    };
    let (s1, s2, s3) = (spread(1), spread(2), spread(3));
    assert!(s2 < s1 && s3 < s2 && s3 < 0.2 * s1, "{s1} {s2} {s3}");
}

proptest! {
    #[test]
    fn t0_shift_is_a_time_translation(shift in -0.5f64..0.5, t in 0.5f64..3.0) {
        let mesh = SurfaceMesh::unit_square(2).unwrap();
        let src = Point::new(0.3, 0.4, 0.8);
        let shifted = assemble_rhs(&mesh, &IncidentField::new(shift, src), t).unwrap();
        let moved = assemble_rhs(&mesh, &IncidentField::new(0.0, src), t + shift).unwrap();
        prop_assert_eq!(shifted, moved);
    }
}

#[test]
fn exact_sphere_density_solves_the_reduced_equation() {
    // Uniform density on the unit sphere: (1/4π) ∫ u(t - |x - y|)/|x - y| dy = ½ ∫_0^2 u(t - ρ) dρ.
    for t0 in [0.0, 0.3] {
        for t in [0.7, 1.4, 2.05, 3.3, 5.9, 8.45] {
            let u = |s: f64| sphere_exact_density(t0, s);
            let lhs = 0.5 * adaptive_integrate(|rho| u(t - rho), 0.0, 2.0, &[], 1e-13, 1e-12).unwrap();
            let rhs = IncidentField::pulse(t + t0 - 1.0);
            assert!((lhs - rhs).abs() <= 1e-11, "t0={t0} t={t}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn exact_sphere_density_is_two_periodic_after_the_pulse() {
    assert_eq!(sphere_exact_density(0.0, 0.9), 0.0);
    let peak = (0..2000).map(|i| sphere_exact_density(0.0, i as f64 * 1e-3).abs()).fold(0.0, f64::max);
    for t in [3.1, 4.45, 7.77] {
        assert!((sphere_exact_density(0.0, t + 2.0) - sphere_exact_density(0.0, t)).abs() <= 1e-12 * peak);
    }
}
