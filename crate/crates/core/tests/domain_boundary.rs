use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;

use baffle_core::boundary::{densify_boundary, make_placeholder, order_points, BoundaryError, SparsePointSet};
use baffle_core::domain::{
    build_capped_domain, interface_loop, regularize_loop, transfer_labels, CappedDomain, DomainBundle,
};
use baffle_core::mesh::{anatomical_label_map, check_topology, Vec3};
use baffle_core::phantom::{VentricleParams, VentriclePhantom};

fn small_phantom() -> VentriclePhantom {
    VentriclePhantom::new(VentricleParams {
        segments: 64,
        lv_rings: 8,
        rv_rings: 64,
        ao_rings: 8,
        ..VentricleParams::default()
    })
}

fn capped(ph: &VentriclePhantom) -> CappedDomain {
    let labels = anatomical_label_map();
    let bundle = DomainBundle {
        combined: ph.combined.clone(),
        structures: ph.structures.clone(),
    };
    let labeled = transfer_labels(&bundle).unwrap();
    let (lv, rv, ao) = (labels["LV"], labels["RV"], labels["ao"]);
    let vsd = regularize_loop(&interface_loop(&labeled, lv, rv).unwrap(), &labeled, 64).unwrap();
    let aortic = regularize_loop(&interface_loop(&labeled, rv, ao).unwrap(), &labeled, 64).unwrap();
    build_capped_domain(&labeled, &vsd, &aortic).unwrap().0
}

#[test]
fn phantom_labels_follow_the_structures() {
    let ph = small_phantom();
    let bundle = DomainBundle {
        combined: ph.combined.clone(),
        structures: ph.structures.clone(),
    };
    let labeled = transfer_labels(&bundle).unwrap();
    let map = anatomical_label_map();
    assert_eq!(labeled.triangles(), ph.combined.triangles());
    for name in ["LV", "RV", "ao"] {
        assert!(labeled.has_label(map[name]), "{name} missing");
    }
    // every face takes the label of the structure whose surface it lies on
    let lv_end = -ph.params.lv_length * ph.scale;
    for f in 0..labeled.face_count() {
        if labeled.face_centroid(f).x < lv_end + 0.05 {
            assert_eq!(labeled.labels()[f], map["LV"]);
        }
    }
}

#[test]
fn capped_domain_is_closed_and_keeps_the_right_ventricle() {
    let ph = small_phantom();
    let c = capped(&ph);
    let topo = check_topology(&c.mesh);
    assert!(topo.watertight && topo.consistently_oriented, "{topo:?}");
    assert_eq!(topo.connected_components, 1);
    let map = anatomical_label_map();
    assert!(c.mesh.has_label(c.vsd_cap_label) && c.mesh.has_label(c.aortic_cap_label));
    assert_ne!(c.vsd_cap_label, c.aortic_cap_label);
    // only slivers of faces split by the cuts keep the removed labels
    for name in ["LV", "ao"] {
        assert!(c.mesh.area_of_label(map[name]) < 1e-4 * c.mesh.total_area(), "{name}");
    }
    assert_eq!(c.rv_wall_label, map["RV"]);
    assert_eq!(c.mesh.label_map()["vsd_cap"], c.vsd_cap_label);
    assert_eq!(c.mesh.label_map()["aortic_cap"], c.aortic_cap_label);
    let v = c.mesh.signed_volume();
    assert!(v > 0.0 && v < ph.combined.signed_volume());
}

#[test]
fn placeholder_is_independent_of_point_order() {
    let ph = small_phantom();
    let c = capped(&ph);
    let build = |points: Vec<Vec3>| {
        let sparse = SparsePointSet::new(points, "test").unwrap();
        let ordered = order_points(&sparse).unwrap();
        let curve = densify_boundary(&ordered, &c.mesh, 600).unwrap();
        let ph = make_placeholder(&c, &curve).unwrap();
        (curve, ph)
    };
    let (curve, placeholder) = build(ph.sparse_points.clone());
    let mut shuffled = ph.sparse_points.clone();
    shuffled.shuffle(&mut StdRng::seed_from_u64(3));
    let (curve2, placeholder2) = build(shuffled);
    assert_eq!(curve.points, curve2.points);
    assert_eq!(placeholder.mesh, placeholder2.mesh);

    let topo = check_topology(&placeholder.mesh);
    assert!(topo.watertight, "{topo:?}");
    assert!(placeholder.mesh.has_label(placeholder.placeholder_label));
    assert!(placeholder.mesh.has_label(c.vsd_cap_label) && placeholder.mesh.has_label(c.aortic_cap_label));
    // the dense curve runs along the mesh and the placeholder rim reuses its points exactly
    for p in &curve.points {
        assert!(placeholder.rim.contains(p));
    }
    assert!(placeholder.mesh.signed_volume() < c.mesh.signed_volume());
}

#[test]
fn boundary_input_errors() {
    let ph = small_phantom();
    let c = capped(&ph);
    let two = SparsePointSet::new(ph.sparse_points[..2].to_vec(), "test");
    assert!(matches!(two, Err(BoundaryError::Count { count: 2 })));
    let line: Vec<Vec3> = (0..6).map(|i| Vec3::new(i as f64 * 0.3, 0.0, 0.35)).collect();
    let collinear = SparsePointSet::new(line, "test").and_then(|s| order_points(&s));
    assert!(matches!(collinear, Err(BoundaryError::Collinear { .. })), "{collinear:?}");
    let lifted: Vec<Vec3> = ph.sparse_points.iter().map(|p| p + Vec3::new(0.0, 0.0, 3.0)).collect();
    let ordered = order_points(&SparsePointSet::new(lifted, "test").unwrap()).unwrap();
    assert!(densify_boundary(&ordered, &c.mesh, 600).is_err());
}
