use std::f64::consts::PI;

use proptest::prelude::*;

use baffle_core::mesh::io::{parse_json, parse_obj, parse_vtk, write_json, write_labels, write_obj, write_vtk};
use baffle_core::mesh::{
    cap_opening, check_topology, clip_along_curve_detailed, plane_intersection, plane_intersection_detailed, Bvh,
    ClosedPolyline3D, LabeledSurfaceMesh, Plane, Vec3,
};
use baffle_core::phantom::{closed_cylinder, icosphere, open_cylinder, torus};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Loop lengths of a plane section, longest first.
fn section_lengths(mesh: &LabeledSurfaceMesh, plane: &Plane) -> Vec<f64> {
    let mut l: Vec<f64> = plane_intersection(mesh, plane).iter().map(|p| p.length()).collect();
    l.sort_by(|a, b| b.total_cmp(a));
    l
}

/// Ramanujan's second approximation of an ellipse perimeter.
fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let h = ((a - b) / (a + b)).powi(2);
    PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()))
}

#[test]
fn primitives_are_closed_with_the_right_genus() {
    for (mesh, euler) in [
        (icosphere(1.0, 3), 2),
        (closed_cylinder(1.0, 2.0, 32, 8), 2),
        (torus(2.0, 0.5, 48, 24), 0),
    ] {
        let t = check_topology(&mesh);
        assert!(t.watertight && t.consistently_oriented);
        assert_eq!(t.euler_characteristic, euler);
        assert!(mesh.signed_volume() > 0.0);
    }
    let t = check_topology(&open_cylinder(1.0, 2.0, 32, 8));
    assert!(!t.watertight);
    assert_eq!(t.boundary_loops, 2);
}

#[test]
fn sphere_great_and_small_circles() {
    let m = icosphere(1.0, 5);
    let great = section_lengths(&m, &Plane::new(Vec3::zeros(), Vec3::new(0.3, -0.5, 0.8)).unwrap());
    assert_eq!(great.len(), 1);
    assert!(rel(great[0], 2.0 * PI) < 0.01);
    let h = 0.6;
    let small = section_lengths(&m, &Plane::new(Vec3::new(0.0, 0.0, h), Vec3::z()).unwrap());
    assert!(rel(small[0], 2.0 * PI * (1.0 - h * h).sqrt()) < 0.01);
    assert!(section_lengths(&m, &Plane::new(Vec3::new(0.0, 0.0, 1.2), Vec3::z()).unwrap()).is_empty());
}

#[test]
fn cylinder_oblique_section_is_an_ellipse() {
    let m = open_cylinder(1.0, 6.0, 256, 60);
    for deg in [0.0f64, 20.0, 45.0, 60.0] {
        let t = deg.to_radians();
        let plane = Plane::new(Vec3::new(0.0, 0.0, 3.0), Vec3::new(t.sin(), 0.0, t.cos())).unwrap();
        let l = section_lengths(&m, &plane);
        assert_eq!(l.len(), 1, "{deg} degrees");
        let exact = ellipse_perimeter(1.0 / t.cos(), 1.0);
        assert!(rel(l[0], exact) < 0.01, "{deg}: {} vs {exact}", l[0]);
    }
}

#[test]
fn torus_sections() {
    let (big, small) = (2.0, 0.5);
    let m = torus(big, small, 256, 96);
    let equator = section_lengths(&m, &Plane::new(Vec3::zeros(), Vec3::z()).unwrap());
    assert_eq!(equator.len(), 2);
    assert!(rel(equator[0], 2.0 * PI * (big + small)) < 0.01);
    assert!(rel(equator[1], 2.0 * PI * (big - small)) < 0.01);
    let meridian = section_lengths(&m, &Plane::new(Vec3::zeros(), Vec3::new(0.3, -1.0, 0.0)).unwrap());
    assert_eq!(meridian.len(), 2);
    for l in meridian {
        assert!(rel(l, 2.0 * PI * small) < 0.01);
    }
}

#[test]
fn section_loops_are_counter_clockwise_about_the_normal() {
    let m = icosphere(1.0, 4);
    let plane = Plane::new(Vec3::new(0.1, 0.0, 0.2), Vec3::new(0.0, 1.0, 1.0)).unwrap();
    let sec = plane_intersection_detailed(&m, &plane);
    assert_eq!(sec.open_chains, 0);
    assert!(sec.loops[0].signed_area(&plane) > 0.0);
    let flipped = plane.flipped();
    assert!(plane_intersection_detailed(&m, &flipped).loops[0].signed_area(&flipped) > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_sphere_sections_match_circles(
        nx in -1.0f64..1.0, ny in -1.0f64..1.0, nz in -1.0f64..1.0,
        d in -0.9f64..0.9,
    ) {
        let n = Vec3::new(nx, ny, nz);
        prop_assume!(n.norm() > 0.1);
        let n = n.normalize();
        let m = icosphere(1.0, 5);
        let l = section_lengths(&m, &Plane::new(n * d, n).unwrap());
        prop_assert_eq!(l.len(), 1);
        let exact = 2.0 * PI * (1.0 - d * d).sqrt();
        prop_assert!(rel(l[0], exact) < 0.01, "{} vs {}", l[0], exact);
    }

    #[test]
    fn random_cylinder_sections_match_ellipses(
        tilt in 0.0f64..1.1, azimuth in 0.0f64..(2.0 * PI), z0 in 2.5f64..3.5,
    ) {
        let m = open_cylinder(1.0, 6.0, 256, 60);
        let n = Vec3::new(tilt.sin() * azimuth.cos(), tilt.sin() * azimuth.sin(), tilt.cos());
        let l = section_lengths(&m, &Plane::new(Vec3::new(0.0, 0.0, z0), n).unwrap());
        prop_assert_eq!(l.len(), 1);
        let exact = ellipse_perimeter(1.0 / tilt.cos(), 1.0);
        prop_assert!(rel(l[0], exact) < 0.01);
    }
}

fn clip_and_cap(mesh: &LabeledSurfaceMesh, curve: Vec<Vec3>) -> (f64, f64) {
    let bvh = Bvh::new(mesh);
    let on: Vec<Vec3> = curve.iter().map(|p| bvh.closest_point(p).unwrap().point).collect();
    let out = clip_along_curve_detailed(mesh, &ClosedPolyline3D::new(on).unwrap()).unwrap();
    let a = cap_opening(&out.part_a, &out.cut, 9).unwrap();
    let b = cap_opening(&out.part_b, &out.cut, 9).unwrap();
    for part in [&a, &b] {
        assert!(check_topology(part).watertight);
    }
    (a.signed_volume(), b.signed_volume())
}

#[test]
fn clipping_and_capping_a_cylinder_conserves_volume() {
    let m = closed_cylinder(1.0, 4.0, 128, 64);
    let v0 = m.signed_volume();
    // slanted loop around the tube
    let curve: Vec<Vec3> = (0..200)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / 200.0;
            Vec3::new(t.cos(), t.sin(), 2.0 + 0.5 * t.cos())
        })
        .collect();
    let (a, b) = clip_and_cap(&m, curve);
    assert!(rel(a + b, v0) < 0.01, "{} vs {v0}", a + b);
    assert!(rel(a.min(b), 0.5 * v0) < 0.02);
}

#[test]
fn clipping_and_capping_a_sphere_conserves_volume() {
    let m = icosphere(1.0, 5);
    let v0 = m.signed_volume();
    for h in [-0.5, 0.0, 0.4] {
        let r = (1.0f64 - h * h).sqrt();
        let curve: Vec<Vec3> = (0..180)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 180.0;
                Vec3::new(r * t.cos(), r * t.sin(), h)
            })
            .collect();
        let (a, b) = clip_and_cap(&m, curve);
        assert!(rel(a + b, v0) < 0.01);
        // spherical cap volume above the plane
        let cap = PI * (1.0 - h).powi(2) * (2.0 + h) / 3.0;
        let ratio = cap / (4.0 * PI / 3.0);
        let got = a.min(b) / (a + b);
        assert!((got - ratio.min(1.0 - ratio)).abs() < 0.01, "{got} vs {ratio}");
    }
}

fn labeled_sphere() -> LabeledSurfaceMesh {
    let m = icosphere(1.3, 3);
    let labels: Vec<i32> = (0..m.face_count()).map(|f| if m.face_centroid(f).z > 0.0 { 1 } else { 6 }).collect();
    m.relabeled(labels)
        .unwrap()
        .with_label_map([("LV".to_string(), 1), ("ao".to_string(), 6)].into_iter().collect())
}

#[test]
fn json_round_trip_is_exact() {
    let m = labeled_sphere().map_vertices(|p| p * (1.0 / 3.0) + Vec3::new(1e-7, PI, -2.5));
    let back = parse_json(&write_json(&m)).unwrap();
    assert_eq!(back, m);
    assert_eq!(write_json(&back), write_json(&m));
}

#[test]
fn vtk_and_obj_round_trips_are_exact() {
    let m = labeled_sphere();
    let vtk = parse_vtk(&write_vtk(&m)).unwrap();
    assert_eq!(vtk.triangles(), m.triangles());
    assert_eq!(vtk.labels(), m.labels());
    let obj = parse_obj(&write_obj(&m), Some(&write_labels(&m))).unwrap();
    assert_eq!(obj.triangles(), m.triangles());
    assert_eq!(obj.labels(), m.labels());
    for (a, b) in vtk.vertices().iter().zip(m.vertices()).chain(obj.vertices().iter().zip(m.vertices())) {
        assert_eq!(a, b);
    }
}

#[test]
fn malformed_meshes_are_rejected() {
    assert!(parse_json("{\"vertices\": [[0,0,0]], \"triangles\": [[0,1,2]], \"labels\": [1]}").is_err());
    assert!(parse_json("not json").is_err());
    assert!(parse_vtk("# vtk DataFile Version 3.0\nx\nASCII\nDATASET POLYDATA\nPOINTS 2 double\n0 0 0\n").is_err());
    assert!(LabeledSurfaceMesh::new(vec![Vec3::zeros(); 3], vec![[0, 1, 2]], vec![]).is_err());
}
