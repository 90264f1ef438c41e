//! Thin-plate spline synthesis of the shaped baffle and its stitching into the final domain.

use faer::prelude::*;
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{BoundaryCurve, Placeholder};
use crate::domain::CappedDomain;
use crate::mesh::cdt::{interior_lattice, triangulate_polygon};
use crate::mesh::{
    boundary_loops, check_topology, geom, has_directed, polygon, principal_frame, LabeledSurfaceMesh,
    MeshError, Plane, Vec2, Vec3,
};
use crate::sections::{ArcFamily, SectionError, SectionLoop, ShapedSection};

/// Source points closer than this (cm) are treated as one landmark.
pub const MERGE_TOL: f64 = 1e-9;

/// Landmarks must be reproduced to this accuracy (cm).
pub const LANDMARK_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum TpsError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Section(#[from] SectionError),
    #[error("{count} distinct landmark(s); at least 3 are needed")]
    TooFewLandmarks { count: usize },
    #[error("landmark sources are collinear")]
    Collinear,
    #[error("the spline system is singular")]
    Singular,
    #[error("{source_count} source point(s) for {target_count} target point(s)")]
    LengthMismatch { source_count: usize, target_count: usize },
    #[error("{sections} section(s) but {shaped} shaped section(s)")]
    CountMismatch { sections: usize, shaped: usize },
    #[error("shaped section {position} belongs to section {found}, expected {expected}")]
    SectionOrder { position: usize, expected: usize, found: usize },
    #[error("no section landmarks: the baffle would only reproduce its boundary")]
    NoSections,
    #[error("landmarks {first} and {second} project to the same parameter point with different targets (fold in the parameterization)")]
    Fold { first: usize, second: usize },
    #[error("the stitch line does not project to a simple polygon (segments {0} and {1} cross)")]
    RimNotSimple(usize, usize),
    #[error("the final domain is not watertight ({boundary_edges} boundary edges, {non_manifold_edges} non-manifold edges)")]
    NotWatertight { boundary_edges: usize, non_manifold_edges: usize },
    #[error("baffle face {baffle_face} intersects face {other_face} near ({x:.4}, {y:.4}, {z:.4})")]
    SelfIntersection { baffle_face: usize, other_face: usize, x: f64, y: f64, z: f64 },
    #[error("landmark error {error:.3e} cm exceeds {limit:.0e} cm")]
    Inexact { error: f64, limit: f64 },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = TpsError> = std::result::Result<T, E>;

fn kernel(r2: f64) -> f64 {
    if r2 <= 0.0 {
        0.0
    } else {
        0.5 * r2 * r2.ln()
    }
}

/// Thin-plate spline from the plane to space: `f(p) = c + A p + Σ w_i U(|p - s_i|)` with
/// `U(r) = r² log r`, evaluated in normalized source coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TpsMap {
    /// Distinct source landmarks after merging.
    pub source: Vec<Vec2>,
    pub target: Vec<Vec3>,
    /// Kernel coefficients, one 3D vector per landmark.
    pub weights: Vec<Vec3>,
    /// Constant, x and y coefficients of the affine part, in normalized coordinates.
    pub affine: [Vec3; 3],
    pub regularization: f64,
    center: Vec2,
    scale: f64,
}

impl TpsMap {
    fn normalized(&self, p: &Vec2) -> Vec2 {
        (p - self.center) / self.scale
    }

    pub fn evaluate(&self, p: &Vec2) -> Vec3 {
        let q = self.normalized(p);
        let mut out = self.affine[0] + self.affine[1] * q.x + self.affine[2] * q.y;
        for (s, w) in self.source.iter().zip(&self.weights) {
            let d = q - self.normalized(s);
            out += w * kernel(d.norm_squared());
        }
        out
    }

    /// Evaluates at every point; the output order follows the input.
    pub fn evaluate_all(&self, points: &[Vec2]) -> Vec<Vec3> {
        points.par_iter().map(|p| self.evaluate(p)).collect()
    }

    /// Largest distance between a landmark target and the spline at its source.
    pub fn max_landmark_error(&self) -> f64 {
        self.source
            .par_iter()
            .zip(&self.target)
            .map(|(s, t)| (self.evaluate(s) - t).norm())
            .reduce(|| 0.0, f64::max)
    }

    /// Largest kernel coefficient magnitude (over landmarks and coordinates).
    pub fn max_weight(&self) -> f64 {
        self.weights.iter().map(|w| w.amax()).fold(0.0, f64::max)
    }
}

/// Merges sources within `merge_tol`, averaging their targets. Returns the merged points
/// and, for every input point, the index of its merged point. Merged points are ordered by
/// their first input index.
fn merge_duplicates(source: &[Vec2], target: &[Vec3], merge_tol: f64) -> (Vec<Vec2>, Vec<Vec3>, Vec<usize>) {
    let n = source.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| source[a].x.total_cmp(&source[b].x).then(a.cmp(&b)));
    let mut group = (0..n).collect::<Vec<usize>>();
    fn find(g: &mut [usize], mut i: usize) -> usize {
        while g[i] != i {
            g[i] = g[g[i]];
            i = g[i];
        }
        i
    }
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if source[j].x - source[i].x > merge_tol {
                break;
            }
            if (source[j] - source[i]).norm() <= merge_tol {
                let (ri, rj) = (find(&mut group, i), find(&mut group, j));
                let (lo, hi) = (ri.min(rj), ri.max(rj));
                group[hi] = lo;
            }
        }
    }
    let mut slot = vec![usize::MAX; n];
    let mut src = Vec::new();
    let mut sums: Vec<(Vec3, usize)> = Vec::new();
    let mut member = vec![0; n];
    for i in 0..n {
        let r = find(&mut group, i);
        if slot[r] == usize::MAX {
            slot[r] = src.len();
            src.push(source[r]);
            sums.push((Vec3::zeros(), 0));
        }
        sums[slot[r]].0 += target[i];
        sums[slot[r]].1 += 1;
        member[i] = slot[r];
    }
    let tgt = sums.into_iter().map(|(s, c)| s / c as f64).collect();
    (src, tgt, member)
}

/// Fitting parameters of [`tps_fit_with`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TpsOptions {
    pub regularization: f64,
    /// Sources closer than this are merged.
    pub merge_tol: f64,
    /// Largest landmark residual accepted for an interpolating fit.
    pub landmark_tol: f64,
}

impl Default for TpsOptions {
    fn default() -> Self {
        TpsOptions {
            regularization: 0.0,
            merge_tol: MERGE_TOL,
            landmark_tol: LANDMARK_TOL,
        }
    }
}

/// Fits the spline through the landmarks. With `regularization = 0` the landmarks are
/// interpolated; a positive value adds `λ I` to the kernel block for smoothing.
pub fn tps_fit(source: &[Vec2], target: &[Vec3], regularization: f64) -> Result<TpsMap> {
    let opts = TpsOptions {
        regularization,
        ..Default::default()
    };
    tps_fit_with(source, target, &opts)
}

pub fn tps_fit_with(source: &[Vec2], target: &[Vec3], opts: &TpsOptions) -> Result<TpsMap> {
    let TpsOptions {
        regularization,
        merge_tol,
        landmark_tol,
    } = *opts;
    if source.len() != target.len() {
        return Err(TpsError::LengthMismatch {
            source_count: source.len(),
            target_count: target.len(),
        });
    }
    if !(regularization >= 0.0) {
        return Err(TpsError::Invalid(format!("regularization {regularization} is negative")));
    }
    let (src, tgt, _) = merge_duplicates(source, target, merge_tol);
    let n = src.len();
    if n < 3 {
        return Err(TpsError::TooFewLandmarks { count: n });
    }
    let center = src.iter().sum::<Vec2>() / n as f64;
    let scale = src.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(TpsError::Collinear);
    }
    let q: Vec<Vec2> = src.iter().map(|p| (p - center) / scale).collect();
    let mut cov = nalgebra::Matrix2::<f64>::zeros();
    for p in &q {
        cov += p * p.transpose();
    }
    let eig = cov.symmetric_eigenvalues();
    if eig.min() <= 1e-12 * eig.max() {
        return Err(TpsError::Collinear);
    }

    let m = n + 3;
    let entry = |i: usize, j: usize| -> f64 {
        match (i < n, j < n) {
            (true, true) => {
                let k = kernel((q[i] - q[j]).norm_squared());
                if i == j {
                    k + regularization
                } else {
                    k
                }
            }
            (true, false) => poly(&q[i], j - n),
            (false, true) => poly(&q[j], i - n),
            (false, false) => 0.0,
        }
    };
    let a = Mat::<f64>::from_fn(m, m, entry);
    let b = Mat::<f64>::from_fn(m, 3, |i, c| if i < n { tgt[i][c] } else { 0.0 });
    let lu = a.partial_piv_lu();
    let mut x = lu.solve(&b);
    // one step of iterative refinement recovers the digits lost to conditioning
    let r = &b - &a * &x;
    x += lu.solve(&r);
    if (0..m).any(|i| (0..3).any(|c| !x[(i, c)].is_finite())) {
        return Err(TpsError::Singular);
    }
    let weights = (0..n).map(|i| Vec3::new(x[(i, 0)], x[(i, 1)], x[(i, 2)])).collect();
    let affine = [0, 1, 2].map(|k| Vec3::new(x[(n + k, 0)], x[(n + k, 1)], x[(n + k, 2)]));
    let map = TpsMap {
        source: src,
        target: tgt,
        weights,
        affine,
        regularization,
        center,
        scale,
    };
    if regularization == 0.0 {
        let err = map.max_landmark_error();
        if !(err <= landmark_tol) {
            return Err(if err.is_finite() {
                TpsError::Inexact {
                    error: err,
                    limit: landmark_tol,
                }
            } else {
                TpsError::Singular
            });
        }
    }
    Ok(map)
}

fn poly(p: &Vec2, k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => p.x,
        _ => p.y,
    }
}

/// Landmarks for the baffle spline in the parameter plane of the boundary curve.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Landmarks {
    /// Principal plane of the boundary curve; sources are coordinates in it.
    pub plane: Plane,
    pub source: Vec<Vec2>,
    pub target: Vec<Vec3>,
    /// The first `rim_count` landmarks are the stitch-line vertices, mapped to themselves.
    pub rim_count: usize,
}

/// Builds the landmark set: every stitch-line vertex maps to itself, and every interior point
/// of each shaped arc maps from its position before shaping (the arc at zero amplitude, or
/// the original arc vertex when the section kept its arc) to its shaped position. Sources are
/// the before-shaping positions projected onto the principal plane of `boundary`.
pub fn parameterize_landmarks(
    placeholder: &Placeholder,
    boundary: &BoundaryCurve,
    sections: &[SectionLoop],
    shaped: &[ShapedSection],
) -> Result<Landmarks> {
    if sections.len() != shaped.len() {
        return Err(TpsError::CountMismatch {
            sections: sections.len(),
            shaped: shaped.len(),
        });
    }
    if shaped.is_empty() {
        return Err(TpsError::NoSections);
    }
    for (k, (sec, sh)) in sections.iter().zip(shaped).enumerate() {
        if sec.index != sh.source.index {
            return Err(TpsError::SectionOrder {
                position: k,
                expected: sec.index,
                found: sh.source.index,
            });
        }
    }
    let frame = principal_frame(&boundary.points)?;
    let plane = frame.plane();
    let mut original = Vec::new();
    let mut target = Vec::new();
    for p in &placeholder.rim {
        original.push(*p);
        target.push(*p);
    }
    let rim_count = original.len();
    for sh in shaped {
        let before: Vec<Vec3> = if sh.unchanged {
            sh.new_arc.clone()
        } else {
            ArcFamily::new(&sh.source)?.lifted_arc(0.0)
        };
        if before.len() != sh.new_arc.len() {
            return Err(TpsError::Invalid(format!(
                "section {}: arc has {} points, expected {}",
                sh.source.index,
                sh.new_arc.len(),
                before.len()
            )));
        }
        let last = before.len().saturating_sub(1);
        for i in 1..last {
            original.push(before[i]);
            target.push(sh.new_arc[i]);
        }
    }
    let source: Vec<Vec2> = original.iter().map(|p| plane.to_2d(p)).collect();
    check_folds(&source, &target)?;
    Ok(Landmarks {
        plane,
        source,
        target,
        rim_count,
    })
}

fn check_folds(source: &[Vec2], target: &[Vec3]) -> Result<()> {
    let mut order: Vec<usize> = (0..source.len()).collect();
    order.sort_by(|&a, &b| source[a].x.total_cmp(&source[b].x).then(a.cmp(&b)));
    for (k, &i) in order.iter().enumerate() {
        for &j in &order[k + 1..] {
            if source[j].x - source[i].x > MERGE_TOL {
                break;
            }
            if (source[j] - source[i]).norm() <= MERGE_TOL && (target[j] - target[i]).norm() > MERGE_TOL {
                return Err(TpsError::Fold {
                    first: i.min(j),
                    second: i.max(j),
                });
            }
        }
    }
    Ok(())
}

/// The final domain with the shaped baffle in place of the placeholder.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FinalDomain {
    pub mesh: LabeledSurfaceMesh,
    pub baffle_label: i32,
    pub vsd_cap_label: i32,
    pub aortic_cap_label: i32,
    pub rv_wall_label: i32,
    pub report: FinalReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    pub baffle_vertices: usize,
    pub baffle_faces: usize,
    pub placeholder_volume: f64,
    pub final_volume: f64,
    pub max_landmark_error: f64,
}

/// Replaces the placeholder faces by the spline surface. The parameter-plane polygon of the
/// stitch line is triangulated together with the interior landmark sources and a lattice at
/// `spacing` (default: the mesh's median edge length); interior vertices are placed by the
/// spline, stitch vertices keep their exact coordinates. Fails when the result is not
/// watertight or the baffle intersects the rest of the surface.
pub fn build_final_domain(
    placeholder: &Placeholder,
    capped: &CappedDomain,
    landmarks: &Landmarks,
    tps: &TpsMap,
    spacing: Option<f64>,
) -> Result<FinalDomain> {
    let pmesh = &placeholder.mesh;
    let plabel = placeholder.placeholder_label;
    let spacing = spacing.unwrap_or_else(|| pmesh.median_edge_length());
    if !(spacing > 0.0) {
        return Err(TpsError::Invalid(format!("grid spacing {spacing} is not positive")));
    }
    let open = pmesh.filter_faces(|f| pmesh.labels()[f] != plabel);
    let loops = boundary_loops(&open);
    if loops.len() != 1 {
        return Err(TpsError::Invalid(format!(
            "removing the placeholder leaves {} openings",
            loops.len()
        )));
    }
    let mut ring: Vec<u32> = loops[0].clone();
    let plane = &landmarks.plane;
    let mut ring2: Vec<Vec2> = ring.iter().map(|&v| plane.to_2d(&open.vertex(v))).collect();
    if polygon::signed_area(&ring2) < 0.0 {
        ring.reverse();
        ring2.reverse();
    }
    if let Some((a, b)) = polygon::first_self_intersection(&ring2) {
        return Err(TpsError::RimNotSimple(a, b));
    }

    // interior vertices: landmark sources well inside the rim, then lattice points clear of them
    let to3 = |p: &Vec2| Vec3::new(p.x, p.y, 0.0);
    let nb = ring2.len();
    let clear_of_rim = |p: &Vec2, margin: f64| {
        polygon::point_in_polygon(p, &ring2)
            && (0..nb).all(|i| {
                geom::point_segment_distance(&to3(p), &to3(&ring2[i]), &to3(&ring2[(i + 1) % nb])) >= margin
            })
    };
    let mut interior: Vec<Vec2> = Vec::new();
    let mut grid = PointGrid::new(spacing);
    for s in &landmarks.source[landmarks.rim_count..] {
        if clear_of_rim(s, 0.25 * spacing) && !grid.any_within(s, 0.25 * spacing) {
            grid.insert(*s);
            interior.push(*s);
        }
    }
    for p in interior_lattice(&ring2, spacing) {
        if !grid.any_within(&p, 0.5 * spacing) {
            grid.insert(p);
            interior.push(p);
        }
    }
    let tris = triangulate_polygon(&ring2, &interior)?;

    let lifted = tps.evaluate_all(&interior);
    let mut vertices = open.vertices().to_vec();
    let base = vertices.len() as u32;
    vertices.extend(lifted);
    let id = |i: usize| if i < nb { ring[i] } else { base + (i - nb) as u32 };
    let mut patch: Vec<[u32; 3]> = tris.iter().map(|t| [id(t[0]), id(t[1]), id(t[2])]).collect();
    // the patch must run against the retained surface along the stitch line
    let (a, b) = (ring[0], ring[1]);
    let retained_has_ab = open.triangles().iter().any(|t| has_directed(*t, a, b));
    let patch_has_ab = patch.iter().any(|t| has_directed(*t, a, b));
    if retained_has_ab == patch_has_ab {
        for t in &mut patch {
            t.swap(1, 2);
        }
    }
    let baffle_label = pmesh.next_free_label();
    let mut triangles = open.triangles().to_vec();
    let mut labels = open.labels().to_vec();
    let first_patch = triangles.len();
    triangles.extend_from_slice(&patch);
    labels.extend(std::iter::repeat_n(baffle_label, patch.len()));
    let mut map = open.label_map().clone();
    map.retain(|_, v| *v != plabel);
    map.insert("baffle".into(), baffle_label);
    let mesh = LabeledSurfaceMesh::new(vertices, triangles, labels)?.with_label_map(map);

    let topo = check_topology(&mesh);
    if !topo.watertight {
        return Err(TpsError::NotWatertight {
            boundary_edges: topo.boundary_edges,
            non_manifold_edges: topo.non_manifold_edges,
        });
    }
    check_self_intersection(&mesh, first_patch)?;
    let report = FinalReport {
        baffle_vertices: interior.len(),
        baffle_faces: patch.len(),
        placeholder_volume: pmesh.signed_volume(),
        final_volume: mesh.signed_volume(),
        max_landmark_error: tps.max_landmark_error(),
    };
    Ok(FinalDomain {
        mesh,
        baffle_label,
        vsd_cap_label: capped.vsd_cap_label,
        aortic_cap_label: capped.aortic_cap_label,
        rv_wall_label: capped.rv_wall_label,
        report,
    })
}

/// Tests every face from `first` on against the whole mesh.
fn check_self_intersection(mesh: &LabeledSurfaceMesh, first: usize) -> Result<()> {
    let hit = crate::mesh::find_self_intersection(mesh, first);
    match hit {
        None => Ok(()),
        Some((f, g)) => {
            let c = mesh.face_centroid(f);
            Err(TpsError::SelfIntersection {
                baffle_face: f,
                other_face: g,
                x: c.x,
                y: c.y,
                z: c.z,
            })
        }
    }
}

/// Uniform bucket grid for "is any accepted point within r" queries with r ≤ cell size.
struct PointGrid {
    cell: f64,
    buckets: std::collections::HashMap<(i64, i64), Vec<Vec2>>,
}

impl PointGrid {
    fn new(cell: f64) -> Self {
        PointGrid {
            cell,
            buckets: Default::default(),
        }
    }

    fn key(&self, p: &Vec2) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: Vec2) {
        let k = self.key(&p);
        self.buckets.entry(k).or_default().push(p);
    }

    fn any_within(&self, p: &Vec2, r: f64) -> bool {
        let (kx, ky) = self.key(p);
        (-1..=1).any(|dx| {
            (-1..=1).any(|dy| {
                self.buckets
                    .get(&(kx + dx, ky + dy))
                    .is_some_and(|v| v.iter().any(|q| (q - p).norm() < r))
            })
        })
    }
}
