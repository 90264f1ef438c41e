//! Preparation of the capped ventricular domain: label transfer from structure meshes,
//! interface loops between labeled regions, ray-cast loop regularization, truncation and
//! capping.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::{
    self, anatomical_label_map, best_fit_plane, cap_opening, check_topology, clip_along_curve_detailed,
    polygon, Bvh, ClosedPolyline3D, EdgeIndex, LabeledSurfaceMesh, MeshError, Vec2, Vec3,
};

#[derive(Debug, Error)]
pub enum DomainError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("no structure meshes supplied")]
    NoStructures,
    #[error("structures {first} and {second} share label {label}")]
    DuplicateLabel {
        first: String,
        second: String,
        label: i32,
    },
    #[error("structure {0} has no usable label")]
    UnlabeledStructure(String),
    #[error("label {0} is not present on the mesh")]
    LabelMissing(i32),
    #[error("regions {a} and {b} do not share an edge")]
    NotAdjacent { a: i32, b: i32 },
    #[error("ray {index} found no surface within {limit:.3} cm of the loop centroid")]
    RayMissed { index: usize, limit: f64 },
    #[error("regularized loop self-intersects in its plane (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("the two cutting loops coincide")]
    LoopsCoincide,
    #[error("no region lies between the two loops: {0}")]
    NoBetweenRegion(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = DomainError> = std::result::Result<T, E>;

/// Unlabeled combined blood-pool mesh plus the per-structure meshes whose labels it receives.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DomainBundle {
    pub combined: LabeledSurfaceMesh,
    pub structures: BTreeMap<String, LabeledSurfaceMesh>,
}

/// Watertight truncated domain with its cap and wall labels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CappedDomain {
    pub mesh: LabeledSurfaceMesh,
    pub vsd_cap_label: i32,
    pub aortic_cap_label: i32,
    pub rv_wall_label: i32,
}

/// A structure's label: its anatomical id when the name is a known one, else the label its
/// faces carry.
pub fn structure_label(name: &str, mesh: &LabeledSurfaceMesh) -> Option<i32> {
    if let Some(&id) = anatomical_label_map().get(name) {
        return Some(id);
    }
    let first = *mesh.labels().first()?;
    (first != mesh::UNLABELED && mesh.labels().iter().all(|&l| l == first)).then_some(first)
}

/// Gives every face of the combined mesh the label of the structure surface nearest to its
/// centroid. Exact distance ties go to the lower label.
pub fn transfer_labels(bundle: &DomainBundle) -> Result<LabeledSurfaceMesh> {
    if bundle.structures.is_empty() {
        return Err(DomainError::NoStructures);
    }
    let mut candidates: Vec<(i32, String, Bvh)> = Vec::new();
    for (name, m) in &bundle.structures {
        let label = structure_label(name, m).ok_or_else(|| DomainError::UnlabeledStructure(name.clone()))?;
        if let Some((_, other, _)) = candidates.iter().find(|c| c.0 == label) {
            return Err(DomainError::DuplicateLabel {
                first: other.clone(),
                second: name.clone(),
                label,
            });
        }
        if m.face_count() == 0 {
            return Err(DomainError::Invalid(format!("structure {name} has no faces")));
        }
        candidates.push((label, name.clone(), Bvh::new(m)));
    }
    candidates.sort_by_key(|c| c.0);
    let combined = &bundle.combined;
    let labels: Vec<i32> = (0..combined.face_count())
        .into_par_iter()
        .map(|f| {
            let c = combined.face_centroid(f);
            let mut best = (f64::INFINITY, candidates[0].0);
            for (label, _, bvh) in &candidates {
                let d = bvh.closest_point(&c).map_or(f64::INFINITY, |h| h.distance);
                if d < best.0 {
                    best = (d, *label);
                }
            }
            best.1
        })
        .collect();
    let mut map = combined.label_map().clone();
    for (label, name, _) in &candidates {
        map.insert(name.clone(), *label);
    }
    Ok(combined.relabeled(labels)?.with_label_map(map))
}

/// Edge chains separating two label regions.
#[derive(Clone, Debug)]
pub struct InterfaceChains {
    /// Vertex chains, longest first.
    pub chains: Vec<Vec<u32>>,
    pub closed: Vec<bool>,
    pub lengths: Vec<f64>,
}

pub fn interface_chains(labeled: &LabeledSurfaceMesh, label_a: i32, label_b: i32) -> Result<InterfaceChains> {
    for l in [label_a, label_b] {
        if !labeled.has_label(l) {
            return Err(DomainError::LabelMissing(l));
        }
    }
    let index = EdgeIndex::new(labeled);
    let mut adj: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut edges = Vec::new();
    for (e, fs) in index.faces.iter().enumerate() {
        if fs.len() != 2 {
            continue;
        }
        let (la, lb) = (labeled.labels()[fs[0] as usize], labeled.labels()[fs[1] as usize]);
        if (la == label_a && lb == label_b) || (la == label_b && lb == label_a) {
            let k = edges.len();
            edges.push(index.edges[e]);
            adj.entry(index.edges[e].0).or_default().push(k);
            adj.entry(index.edges[e].1).or_default().push(k);
        }
    }
    if edges.is_empty() {
        return Err(DomainError::NotAdjacent { a: label_a, b: label_b });
    }
    let other = |e: usize, v: u32| if edges[e].0 == v { edges[e].1 } else { edges[e].0 };
    let mut used = vec![false; edges.len()];
    let mut chains: Vec<(Vec<u32>, bool)> = Vec::new();
    // walk from a vertex along unused edges while the chain is unbranched
    let walk = |start: u32, first: usize, used: &mut Vec<bool>| -> (Vec<u32>, bool) {
        let mut chain = vec![start];
        let mut e = first;
        let mut v = start;
        loop {
            used[e] = true;
            v = other(e, v);
            if v == start {
                return (chain, true);
            }
            chain.push(v);
            let nexts: Vec<usize> = adj[&v].iter().copied().filter(|&x| !used[x]).collect();
            if adj[&v].len() != 2 || nexts.is_empty() {
                return (chain, false);
            }
            e = nexts[0];
        }
    };
    // open chains start at endpoints and junctions
    for (&v, es) in &adj {
        if es.len() == 2 {
            continue;
        }
        for &e in es {
            if !used[e] {
                chains.push(walk(v, e, &mut used));
            }
        }
    }
    for e in 0..edges.len() {
        if !used[e] {
            chains.push(walk(edges[e].0, e, &mut used));
        }
    }
    let length = |c: &[u32], closed: bool| -> f64 {
        let mut l: f64 = c.windows(2).map(|w| (labeled.vertex(w[1]) - labeled.vertex(w[0])).norm()).sum();
        if closed {
            l += (labeled.vertex(c[0]) - labeled.vertex(*c.last().unwrap())).norm();
        }
        l
    };
    let mut scored: Vec<(f64, Vec<u32>, bool)> =
        chains.into_iter().map(|(c, closed)| (length(&c, closed), c, closed)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok(InterfaceChains {
        lengths: scored.iter().map(|s| s.0).collect(),
        closed: scored.iter().map(|s| s.2).collect(),
        chains: scored.into_iter().map(|s| s.1).collect(),
    })
}

/// The longest chain separating regions `label_a` and `label_b`.
pub fn interface_loop(labeled: &LabeledSurfaceMesh, label_a: i32, label_b: i32) -> Result<ClosedPolyline3D> {
    let found = interface_chains(labeled, label_a, label_b)?;
    if found.chains.len() > 1 {
        log::info!(
            "interface {label_a}/{label_b}: {} chains, keeping the longest ({:.4} cm)",
            found.chains.len(),
            found.lengths[0]
        );
    }
    let pts = found.chains[0].iter().map(|&v| labeled.vertex(v)).collect();
    Ok(ClosedPolyline3D::new(pts)?)
}

pub const DEFAULT_RAYS: usize = 64;
pub const DEFAULT_SMOOTH_WINDOW: usize = 5;
pub const DEFAULT_SMOOTH_PASSES: usize = 2;

/// Ray-fan and smoothing parameters of loop regularization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizeOptions {
    pub n_rays: usize,
    /// Rotation of the ray fan in units of one angular slot.
    pub start_fraction: f64,
    /// Odd width of the cyclic moving average.
    pub smooth_window: usize,
    pub smooth_passes: usize,
}

impl Default for RegularizeOptions {
    fn default() -> Self {
        RegularizeOptions {
            n_rays: DEFAULT_RAYS,
            start_fraction: 0.0,
            smooth_window: DEFAULT_SMOOTH_WINDOW,
            smooth_passes: DEFAULT_SMOOTH_PASSES,
        }
    }
}

/// Replaces a raw loop by the first surface hits of `n_rays` equiangular rays cast in the
/// loop's best-fit plane from its centroid, followed by two cyclic moving-average passes of
/// width 5.
pub fn regularize_loop(raw: &ClosedPolyline3D, surface: &LabeledSurfaceMesh, n_rays: usize) -> Result<ClosedPolyline3D> {
    let opts = RegularizeOptions {
        n_rays,
        ..Default::default()
    };
    regularize_loop_with(raw, &Bvh::new(surface), &opts)
}

/// As [`regularize_loop`], with a prebuilt hierarchy and explicit options.
pub fn regularize_loop_with(raw: &ClosedPolyline3D, bvh: &Bvh, opts: &RegularizeOptions) -> Result<ClosedPolyline3D> {
    let RegularizeOptions {
        n_rays,
        start_fraction,
        smooth_window,
        smooth_passes,
    } = *opts;
    if n_rays < 3 {
        return Err(DomainError::Invalid(format!("need at least 3 rays, got {n_rays}")));
    }
    let plane = best_fit_plane(raw.points())?;
    let center = plane.point;
    let radius = raw.points().iter().map(|p| (p - center).norm()).sum::<f64>() / raw.len() as f64;
    let limit = 10.0 * radius;
    let (u, v) = plane.basis();
    let hits: Vec<Result<Vec3>> = (0..n_rays)
        .into_par_iter()
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * (k as f64 + start_fraction) / n_rays as f64;
            let dir = u * t.cos() + v * t.sin();
            bvh.ray_first_hit(&center, &dir, limit)
                .map(|(s, _)| center + dir * s)
                .ok_or(DomainError::RayMissed { index: k, limit })
        })
        .collect();
    let mut pts: Vec<Vec3> = hits.into_iter().collect::<Result<_>>()?;
    if smooth_window % 2 == 0 {
        return Err(DomainError::Invalid(format!("smoothing window {smooth_window} is not odd")));
    }
    for _ in 0..smooth_passes {
        pts = moving_average(&pts, smooth_window);
    }
    let flat: Vec<Vec2> = pts.iter().map(|p| plane.to_2d(p)).collect();
    if let Some((a, b)) = polygon::first_self_intersection(&flat) {
        return Err(DomainError::SelfIntersecting(a, b));
    }
    Ok(ClosedPolyline3D::new(pts)?)
}

fn moving_average(pts: &[Vec3], window: usize) -> Vec<Vec3> {
    let n = pts.len() as isize;
    let h = (window / 2) as isize;
    (0..n)
        .map(|i| {
            let s: Vec3 = (-h..=h).map(|d| pts[(i + d).rem_euclid(n) as usize]).sum();
            s / (2 * h + 1) as f64
        })
        .collect()
}

/// Geometry summary of a capped domain.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DomainReport {
    pub vsd_loop_planarity: f64,
    pub aortic_loop_planarity: f64,
    pub vsd_cap_area: f64,
    pub aortic_cap_area: f64,
    pub input_volume: Option<f64>,
    pub capped_volume: f64,
    pub face_count: usize,
}

/// Largest distance of a loop from its best-fit plane.
pub fn planarity_deviation(points: &[Vec3]) -> f64 {
    match best_fit_plane(points) {
        Ok(p) => points.iter().map(|q| p.signed_distance(q).abs()).fold(0.0, f64::max),
        Err(_) => 0.0,
    }
}

/// Cuts the labeled surface at both loops, keeps the region bounded by both and caps the
/// two openings with fresh labels (VSD first, then aortic).
pub fn build_capped_domain(
    labeled: &LabeledSurfaceMesh,
    vsd_loop: &ClosedPolyline3D,
    aortic_loop: &ClosedPolyline3D,
) -> Result<(CappedDomain, DomainReport)> {
    let scale = labeled.median_edge_length();
    let loop_gap = vsd_loop
        .points()
        .iter()
        .map(|p| aortic_loop.distance_to(p))
        .fold(0.0, f64::max);
    if loop_gap < 0.5 * scale {
        return Err(DomainError::LoopsCoincide);
    }

    let first = clip_along_curve_detailed(labeled, vsd_loop)?;
    let side = pick_side(&first.part_a, &first.part_b, aortic_loop, scale)?;
    let (keep, _) = if side { (&first.part_a, &first.part_b) } else { (&first.part_b, &first.part_a) };
    let second = clip_along_curve_detailed(keep, aortic_loop)?;
    // the between-region still has the VSD opening
    let has_vsd = |m: &LabeledSurfaceMesh| {
        mesh::boundary_loops(m).iter().any(|lp| {
            lp.iter()
                .all(|&v| first.cut.distance_to(&m.vertex(v)) <= 1e-9 * (1.0 + scale))
        })
    };
    let (a_vsd, b_vsd) = (has_vsd(&second.part_a), has_vsd(&second.part_b));
    let between = match (a_vsd, b_vsd) {
        (true, false) => second.part_a,
        (false, true) => second.part_b,
        _ => {
            return Err(DomainError::NoBetweenRegion(
                "the aortic loop does not separate the VSD opening from the rest".into(),
            ))
        }
    };
    let vsd_label = labeled.next_free_label();
    let mut reserved = labeled.label_map().clone();
    reserved.insert("vsd_cap".into(), vsd_label);
    let aortic_label = labeled.clone().with_label_map(reserved).next_free_label();
    let capped = cap_opening(&between, &first.cut, vsd_label)?;
    let capped = cap_opening(&capped, &second.cut, aortic_label)?;
    let mut map = capped.label_map().clone();
    map.insert("vsd_cap".into(), vsd_label);
    map.insert("aortic_cap".into(), aortic_label);
    let capped = capped.with_label_map(map);
    let topo = check_topology(&capped);
    if !topo.watertight {
        return Err(DomainError::Invalid(format!(
            "capped domain is not watertight ({} boundary edges, {} non-manifold edges)",
            topo.boundary_edges, topo.non_manifold_edges
        )));
    }
    let rv_wall_label = labeled.label_map().get("RV").copied().unwrap_or(2);
    let input_topo = check_topology(labeled);
    let report = DomainReport {
        vsd_loop_planarity: planarity_deviation(first.cut.points()),
        aortic_loop_planarity: planarity_deviation(second.cut.points()),
        vsd_cap_area: capped.area_of_label(vsd_label),
        aortic_cap_area: capped.area_of_label(aortic_label),
        input_volume: input_topo.watertight.then(|| labeled.signed_volume()),
        capped_volume: capped.signed_volume(),
        face_count: capped.face_count(),
    };
    Ok((
        CappedDomain {
            mesh: capped,
            vsd_cap_label: vsd_label,
            aortic_cap_label: aortic_label,
            rv_wall_label,
        },
        report,
    ))
}

/// True when `curve` lies on `a` (and not on `b`).
fn pick_side(a: &LabeledSurfaceMesh, b: &LabeledSurfaceMesh, curve: &ClosedPolyline3D, scale: f64) -> Result<bool> {
    let mean_dist = |m: &LabeledSurfaceMesh| {
        let bvh = Bvh::new(m);
        curve
            .points()
            .iter()
            .map(|p| bvh.closest_point(p).map_or(f64::INFINITY, |h| h.distance))
            .sum::<f64>()
            / curve.len() as f64
    };
    let (da, db) = (mean_dist(a), mean_dist(b));
    let tol = 0.5 * scale;
    match (da <= tol, db <= tol) {
        (true, false) => Ok(true),
        (false, true) => Ok(false),
        (true, true) => Err(DomainError::NoBetweenRegion(
            "the aortic loop runs along the VSD cut".into(),
        )),
        (false, false) => Err(DomainError::Invalid("aortic loop is not on the surface".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom;
    use std::f64::consts::PI;

    fn ring(r: f64, z: f64, n: usize) -> ClosedPolyline3D {
        ClosedPolyline3D::new(
            (0..n)
                .map(|i| {
                    let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                    Vec3::new(r * t.cos(), r * t.sin(), z)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn translated_copy_takes_the_single_label() {
        let s = phantom::icosphere(1.0, 2).relabeled(vec![2; 320]).unwrap();
        let bundle = DomainBundle {
            combined: s.translated(Vec3::new(0.01, 0.0, 0.0)).relabeled(vec![0; 320]).unwrap(),
            structures: [("RV".to_string(), s)].into_iter().collect(),
        };
        let out = transfer_labels(&bundle).unwrap();
        assert!(out.labels().iter().all(|&l| l == 2));
        assert_eq!(out.label_map()["RV"], 2);
    }

    #[test]
    fn two_spheres_label_themselves() {
        let a = phantom::icosphere(1.0, 2);
        let b = a.translated(Vec3::new(4.0, 0.0, 0.0));
        let bundle = DomainBundle {
            combined: a.merged(&b),
            structures: [("LV".to_string(), a.clone()), ("RV".to_string(), b.clone())].into_iter().collect(),
        };
        let out = transfer_labels(&bundle).unwrap();
        assert!(out.labels()[..320].iter().all(|&l| l == 1));
        assert!(out.labels()[320..].iter().all(|&l| l == 2));
        // idempotent
        let again = transfer_labels(&DomainBundle {
            combined: out.clone(),
            structures: bundle.structures.clone(),
        })
        .unwrap();
        assert_eq!(again.labels(), out.labels());
    }

    #[test]
    fn equidistant_centroid_goes_to_lower_label() {
        // one triangle in the plane x = 0, structures mirrored at x = ±1
        let tri = LabeledSurfaceMesh::uniform(
            vec![Vec3::new(0., 0., 0.), Vec3::new(0., 1., 0.), Vec3::new(0., 0., 1.)],
            vec![[0, 1, 2]],
            0,
        )
        .unwrap();
        let wall = |x: f64| {
            LabeledSurfaceMesh::uniform(
                vec![Vec3::new(x, -5., -5.), Vec3::new(x, 5., -5.), Vec3::new(x, 0., 5.)],
                vec![[0, 1, 2]],
                0,
            )
            .unwrap()
        };
        let bundle = DomainBundle {
            combined: tri,
            structures: [("ao".to_string(), wall(-1.0)), ("RV".to_string(), wall(1.0))].into_iter().collect(),
        };
        assert_eq!(transfer_labels(&bundle).unwrap().labels(), &[2]);
        let none = DomainBundle {
            combined: bundle.combined.clone(),
            structures: BTreeMap::new(),
        };
        assert!(matches!(transfer_labels(&none), Err(DomainError::NoStructures)));
    }

    #[test]
    fn sphere_hemispheres_share_the_equator() {
        let s = phantom::icosphere(1.0, 3);
        let labels = (0..s.face_count()).map(|f| if s.face_centroid(f).z > 0.0 { 1 } else { 2 }).collect();
        let s = s.relabeled(labels).unwrap();
        let found = interface_chains(&s, 1, 2).unwrap();
        assert_eq!(found.chains.len(), 1);
        assert!(found.closed[0]);
        let lp = interface_loop(&s, 1, 2).unwrap();
        assert!(lp.points().iter().all(|p| (p.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn half_labeled_tube_has_two_axial_chains() {
        let c = phantom::open_cylinder(1.0, 3.0, 32, 12);
        let labels = (0..c.face_count()).map(|f| if c.face_centroid(f).y > 0.0 { 1 } else { 2 }).collect();
        let c = c.relabeled(labels).unwrap();
        let found = interface_chains(&c, 1, 2).unwrap();
        assert_eq!(found.chains.len(), 2);
        assert!(found.closed.iter().all(|c| !c));
        assert!((found.lengths[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_regions_are_not_adjacent() {
        let a = phantom::icosphere(1.0, 1);
        let b = a.translated(Vec3::new(3.0, 0.0, 0.0)).relabeled(vec![2; 80]).unwrap();
        let m = a.merged(&b);
        assert!(matches!(interface_loop(&m, 1, 2), Err(DomainError::NotAdjacent { a: 1, b: 2 })));
    }

    #[test]
    fn noisy_circle_on_sphere_becomes_round() {
        let s = phantom::icosphere(1.0, 5);
        let z: f64 = 0.3;
        let r = (1.0 - z * z).sqrt();
        let noisy: Vec<Vec3> = (0..90)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 90.0;
                let k = 1.0 + 0.02 * (7.3 * t).sin() * (3.1 * t + 0.4).cos();
                Vec3::new(k * r * t.cos(), k * r * t.sin(), z + 0.01 * (5.0 * t).sin())
            })
            .collect();
        let out = regularize_loop(&ClosedPolyline3D::new(noisy).unwrap(), &s, 64).unwrap();
        let c = out.centroid();
        let radii: Vec<f64> = out.points().iter().map(|p| (p - c).norm()).collect();
        let mean = radii.iter().sum::<f64>() / radii.len() as f64;
        let std = (radii.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / radii.len() as f64).sqrt();
        assert!(std / mean < 0.005, "{}", std / mean);
    }

    #[test]
    fn planar_circle_on_cylinder_is_a_fixed_point() {
        let c = phantom::open_cylinder(1.0, 2.0, 256, 8);
        let raw = ring(1.0, 1.0, 64);
        let out = regularize_loop(&raw, &c, 64).unwrap();
        // each moving-average pass scales a sampled circle by the mean of cos(kδ), |k| ≤ 2
        let d = 2.0 * PI / 64.0;
        let shrink = ((1.0 + 2.0 * d.cos() + 2.0 * (2.0 * d).cos()) / 5.0).powi(2);
        for p in out.points() {
            assert!(((p.x * p.x + p.y * p.y).sqrt() - shrink).abs() < 1e-3);
            assert!((p.z - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn off_surface_centroid_fails() {
        // a loop hugging one side of the tube: its centroid is outside the tube section
        let c = phantom::open_cylinder(1.0, 2.0, 64, 8);
        let pts: Vec<Vec3> = (0..20)
            .map(|i| {
                let t = -0.4 + 0.8 * i as f64 / 19.0;
                let z = 1.0 + 0.3 * (i as f64 * 0.7).sin();
                Vec3::new(t.cos() + 2.0, t.sin(), z)
            })
            .collect();
        let err = regularize_loop(&ClosedPolyline3D::new(pts).unwrap(), &c, 64).unwrap_err();
        assert!(matches!(err, DomainError::RayMissed { .. } | DomainError::Mesh(_)), "{err}");
    }

    #[test]
    fn fan_rotation_by_one_slot_is_invisible() {
        let s = phantom::icosphere(1.0, 4);
        let raw = ring(0.8, 0.6, 40);
        let bvh = Bvh::new(&s);
        let a = regularize_loop_with(&raw, &bvh, &RegularizeOptions::default()).unwrap();
        let shifted = RegularizeOptions {
            start_fraction: 1.0,
            ..Default::default()
        };
        let b = regularize_loop_with(&raw, &bvh, &shifted).unwrap();
        // identical up to a cyclic shift by one
        for i in 0..64 {
            assert!((a.points()[(i + 1) % 64] - b.points()[i]).norm() < 1e-6);
        }
    }

    #[test]
    fn cylinder_truncation_volume() {
        let c = phantom::closed_cylinder(1.0, 1.0, 96, 40);
        let (dom, report) = build_capped_domain(&c, &ring(1.0, 0.2, 96), &ring(1.0, 0.8, 96)).unwrap();
        let want = PI * 0.6 * 48.0 * (2.0 * PI / 96.0).sin() / PI;
        assert!((report.capped_volume - want).abs() / want < 0.01);
        assert!(check_topology(&dom.mesh).watertight);
        assert!(report.capped_volume <= report.input_volume.unwrap());
        assert!(dom.mesh.has_label(dom.vsd_cap_label) && dom.mesh.has_label(dom.aortic_cap_label));
        assert!(report.vsd_loop_planarity < 1e-9);
    }

    #[test]
    fn identical_loops_are_rejected() {
        let c = phantom::closed_cylinder(1.0, 1.0, 64, 20);
        let err = build_capped_domain(&c, &ring(1.0, 0.5, 64), &ring(1.0, 0.5, 64)).unwrap_err();
        assert!(matches!(err, DomainError::LoopsCoincide));
    }

    #[test]
    fn spherical_frustum_volume() {
        let s = phantom::icosphere(1.0, 5);
        let (z1, z2) = (-0.3f64, 0.5f64);
        let bvh = Bvh::new(&s);
        let on = |z: f64| {
            let r = (1.0 - z * z).sqrt();
            let pts = (0..150)
                .map(|i| {
                    let t = 2.0 * PI * i as f64 / 150.0;
                    bvh.closest_point(&Vec3::new(r * t.cos(), r * t.sin(), z)).unwrap().point
                })
                .collect();
            ClosedPolyline3D::new(pts).unwrap()
        };
        let (dom, _) = build_capped_domain(&s, &on(z1), &on(z2)).unwrap();
        // segment between two parallel planes: π(z2 - z1) - π(z2³ - z1³)/3
        let exact = PI * (z2 - z1) - PI * (z2.powi(3) - z1.powi(3)) / 3.0;
        let v = dom.mesh.signed_volume();
        assert!((v - exact).abs() / exact < 0.01, "{v} vs {exact}");
    }
}
