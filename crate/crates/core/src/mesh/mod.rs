//! Labeled triangle meshes and the geometric kernels the planning stages are built on.
//!
//! Units are centimeters throughout. Meshes are immutable once constructed; every kernel
//! takes `&LabeledSurfaceMesh` and returns a fresh mesh or a derived quantity.

mod bvh;
mod cap;
pub mod cdt;
mod clip;
pub mod geom;
mod intersect;
pub mod io;
pub mod polygon;
mod topology;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bvh::{Bvh, ClosestHit};
pub use cap::cap_opening;
pub use clip::{clip_along_curve, clip_along_curve_detailed, ClipOutcome};
pub use intersect::{plane_intersection, plane_intersection_detailed, PlaneIntersection, SectionContour};
pub use io::{load_mesh, save_mesh, LoadedMesh, MeshFormat};
pub use topology::{boundary_loops, check_topology, find_self_intersection, has_directed, EdgeIndex, TopologyReport};

pub type Vec3 = Vector3<f64>;
pub type Vec2 = Vector2<f64>;

/// Label given to faces that arrive without one.
pub const UNLABELED: i32 = 0;

/// Triangles with less area than this (cm²) are collapsed by [`LabeledSurfaceMesh::cleaned`].
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Conventional anatomical label map.
pub fn anatomical_label_map() -> BTreeMap<String, i32> {
    [("LV", 1), ("RV", 2), ("LA", 3), ("RA", 4), ("myo", 5), ("ao", 6), ("PA", 7)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("{format} parse error at line {line}: {message}")]
    Parse {
        format: &'static str,
        line: usize,
        message: String,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("face subset is empty")]
    EmptySubset,
    #[error("area-weighted normal is degenerate (resultant {magnitude:.3e} vs total area {area:.3e})")]
    DegenerateNormal { magnitude: f64, area: f64 },
    #[error("degenerate plane normal")]
    DegeneratePlane,
    #[error("polyline needs at least 3 distinct points, got {0}")]
    ShortPolyline(usize),
    #[error("curve does not split the surface into two parts ({components} connected components after cutting)")]
    NonSeparatingCurve { components: usize },
    #[error("could not embed curve on surface: {0}")]
    CurveEmbedding(String),
    #[error("loop is not a boundary of the mesh (closest boundary deviates by {deviation:.3e} cm)")]
    NotABoundary { deviation: f64 },
    #[error("mesh has no open boundary to cap")]
    NoBoundary,
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("points are collinear (singular values {s1:.3e}, {s2:.3e})")]
    Collinear { s1: f64, s2: f64 },
}

pub type Result<T, E = MeshError> = std::result::Result<T, E>;

/// Indexed triangle mesh with one integer region label (ModelFaceID) per face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledSurfaceMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    labels: Vec<i32>,
    #[serde(default)]
    label_map: BTreeMap<String, i32>,
}

impl LabeledSurfaceMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>, labels: Vec<i32>) -> Result<Self> {
        if labels.len() != triangles.len() {
            return Err(MeshError::Invalid(format!(
                "{} labels for {} triangles",
                labels.len(),
                triangles.len()
            )));
        }
        let n = vertices.len() as u32;
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(MeshError::Invalid(format!("triangle {i} references a vertex out of range")));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(MeshError::Invalid(format!("triangle {i} repeats a vertex")));
            }
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(MeshError::Invalid("non-finite vertex coordinate".into()));
        }
        Ok(Self {
            vertices,
            triangles,
            labels,
            label_map: BTreeMap::new(),
        })
    }

    /// Mesh with every face carrying `label`.
    pub fn uniform(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>, label: i32) -> Result<Self> {
        let labels = vec![label; triangles.len()];
        Self::new(vertices, triangles, labels)
    }

    pub fn with_label_map(mut self, map: BTreeMap<String, i32>) -> Self {
        self.label_map = map;
        self
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn label_map(&self) -> &BTreeMap<String, i32> {
        &self.label_map
    }

    pub fn vertex(&self, i: u32) -> Vec3 {
        self.vertices[i as usize]
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[face];
        [self.vertex(a), self.vertex(b), self.vertex(c)]
    }

    /// Twice-area vector (unnormalized normal) of a face.
    pub fn face_cross(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.corners(face);
        (b - a).cross(&(c - a))
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_cross(face).norm()
    }

    pub fn face_normal(&self, face: usize) -> Vec3 {
        let n = self.face_cross(face);
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vec3::zeros()
        }
    }

    pub fn face_centroid(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.corners(face);
        (a + b + c) / 3.0
    }

    pub fn total_area(&self) -> f64 {
        (0..self.face_count()).map(|f| self.face_area(f)).sum()
    }

    /// Enclosed volume by the divergence theorem. Positive for outward-oriented closed meshes.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|v| self.vertex(v));
                a.dot(&b.cross(&c))
            })
            .sum::<f64>()
            / 6.0
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        if self.vertices.is_empty() {
            0.0
        } else {
            (hi - lo).norm()
        }
    }

    pub fn median_edge_length(&self) -> f64 {
        let mut lengths: Vec<f64> = self
            .triangles
            .iter()
            .flat_map(|t| {
                (0..3).map(move |k| (t[k], t[(k + 1) % 3]))
            })
            .filter(|(a, b)| a < b)
            .map(|(a, b)| (self.vertex(a) - self.vertex(b)).norm())
            .collect();
        if lengths.is_empty() {
            return 0.0;
        }
        let mid = lengths.len() / 2;
        let (_, m, _) = lengths.select_nth_unstable_by(mid, f64::total_cmp);
        *m
    }

    pub fn label_set(&self) -> BTreeSet<i32> {
        self.labels.iter().copied().collect()
    }

    pub fn faces_with_label(&self, label: i32) -> Vec<usize> {
        (0..self.face_count()).filter(|&f| self.labels[f] == label).collect()
    }

    pub fn has_label(&self, label: i32) -> bool {
        self.labels.contains(&label)
    }

    /// Smallest positive label not used by any face nor the label map.
    pub fn next_free_label(&self) -> i32 {
        let used: BTreeSet<i32> = self.labels.iter().chain(self.label_map.values()).copied().collect();
        (1..).find(|l| !used.contains(l)).unwrap()
    }

    pub fn area_of_label(&self, label: i32) -> f64 {
        self.faces_with_label(label).into_iter().map(|f| self.face_area(f)).sum()
    }

    /// Same geometry with a new label per face.
    pub fn relabeled(&self, labels: Vec<i32>) -> Result<Self> {
        let mut out = Self::new(self.vertices.clone(), self.triangles.clone(), labels)?;
        out.label_map = self.label_map.clone();
        Ok(out)
    }

    /// Mesh made of the selected faces, with unused vertices dropped. Vertex and face order
    /// follow the source mesh.
    pub fn submesh(&self, faces: &[usize]) -> Self {
        let mut keep = vec![false; self.face_count()];
        for &f in faces {
            keep[f] = true;
        }
        self.filter_faces(|f| keep[f])
    }

    pub fn filter_faces(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let mut remap = vec![u32::MAX; self.vertices.len()];
        let mut used = vec![false; self.vertices.len()];
        let selected: Vec<usize> = (0..self.face_count()).filter(|&f| keep(f)).collect();
        for &f in &selected {
            for v in self.triangles[f] {
                used[v as usize] = true;
            }
        }
        let mut vertices = Vec::new();
        for (i, u) in used.iter().enumerate() {
            if *u {
                remap[i] = vertices.len() as u32;
                vertices.push(self.vertices[i]);
            }
        }
        let triangles = selected
            .iter()
            .map(|&f| self.triangles[f].map(|v| remap[v as usize]))
            .collect();
        let labels = selected.iter().map(|&f| self.labels[f]).collect();
        Self {
            vertices,
            triangles,
            labels,
            label_map: self.label_map.clone(),
        }
    }

    /// Disjoint union; `other`'s indices are shifted past this mesh's vertices.
    pub fn merged(&self, other: &Self) -> Self {
        let offset = self.vertices.len() as u32;
        let mut out = self.clone();
        out.vertices.extend_from_slice(&other.vertices);
        out.triangles
            .extend(other.triangles.iter().map(|t| t.map(|v| v + offset)));
        out.labels.extend_from_slice(&other.labels);
        for (k, v) in &other.label_map {
            out.label_map.entry(k.clone()).or_insert(*v);
        }
        out
    }

    pub fn translated(&self, offset: Vec3) -> Self {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v += offset;
        }
        out
    }

    pub fn map_vertices(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        let mut out = self.clone();
        for v in &mut out.vertices {
            *v = f(v);
        }
        out
    }

    pub fn flipped(&self) -> Self {
        let mut out = self.clone();
        for t in &mut out.triangles {
            t.swap(1, 2);
        }
        out
    }

    /// Welds exactly coincident vertices, collapses triangles below [`DEGENERATE_AREA`] onto
    /// their shortest edge and drops unreferenced vertices.
    pub fn cleaned(&self) -> Self {
        let mut vertices = self.vertices.clone();
        // exact-duplicate welding
        let mut canonical: Vec<u32> = (0..vertices.len() as u32).collect();
        {
            let mut order: Vec<u32> = (0..vertices.len() as u32).collect();
            order.sort_by(|&a, &b| {
                let (pa, pb) = (vertices[a as usize], vertices[b as usize]);
                pa.x.total_cmp(&pb.x)
                    .then(pa.y.total_cmp(&pb.y))
                    .then(pa.z.total_cmp(&pb.z))
                    .then(a.cmp(&b))
            });
            for w in order.windows(2) {
                if vertices[w[0] as usize] == vertices[w[1] as usize] {
                    canonical[w[1] as usize] = canonical[w[0] as usize];
                }
            }
        }
        let mut parent: Vec<u32> = canonical;
        fn find(parent: &mut [u32], mut v: u32) -> u32 {
            while parent[v as usize] != v {
                let p = parent[v as usize];
                parent[v as usize] = parent[p as usize];
                v = p;
            }
            v
        }
        let mut triangles = self.triangles.clone();
        let mut labels = self.labels.clone();
        loop {
            let mut collapsed = false;
            for t in triangles.iter_mut() {
                *t = t.map(|v| find(&mut parent, v));
            }
            for i in 0..triangles.len() {
                let t = triangles[i];
                if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                    continue;
                }
                let [a, b, c] = t.map(|v| vertices[v as usize]);
                if 0.5 * (b - a).cross(&(c - a)).norm() >= DEGENERATE_AREA {
                    continue;
                }
                let edges = [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])];
                let (u, v) = edges
                    .into_iter()
                    .min_by(|x, y| {
                        let lx = (vertices[x.0 as usize] - vertices[x.1 as usize]).norm();
                        let ly = (vertices[y.0 as usize] - vertices[y.1 as usize]).norm();
                        lx.total_cmp(&ly)
                    })
                    .unwrap();
                let (keep, drop) = (u.min(v), u.max(v));
                vertices[keep as usize] = 0.5 * (vertices[u as usize] + vertices[v as usize]);
                parent[drop as usize] = keep;
                collapsed = true;
            }
            if !collapsed {
                break;
            }
        }
        let mut kept_tris = Vec::with_capacity(triangles.len());
        let mut kept_labels = Vec::with_capacity(triangles.len());
        let mut seen = std::collections::HashSet::new();
        for (t, l) in triangles.into_iter().zip(labels.drain(..)) {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                continue;
            }
            let mut key = t;
            key.sort_unstable();
            if !seen.insert(key) {
                continue;
            }
            kept_tris.push(t);
            kept_labels.push(l);
        }
        let tmp = Self {
            vertices,
            triangles: kept_tris,
            labels: kept_labels,
            label_map: self.label_map.clone(),
        };
        tmp.filter_faces(|_| true)
    }

    /// One-ring face lists per vertex.
    pub fn vertex_faces(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (f, t) in self.triangles.iter().enumerate() {
            for &v in t {
                out[v as usize].push(f as u32);
            }
        }
        out
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut out = vec![Vec3::zeros(); self.vertices.len()];
        for f in 0..self.face_count() {
            let n = self.face_cross(f);
            for v in self.triangles[f] {
                out[v as usize] += n;
            }
        }
        for n in &mut out {
            let len = n.norm();
            if len > 0.0 {
                *n /= len;
            }
        }
        out
    }

    /// Generalized winding number of the surface around `p` (≈1 inside a closed outward mesh).
    pub fn winding_number(&self, p: &Vec3) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|v| self.vertex(v));
                geom::solid_angle(&(a - p), &(b - p), &(c - p))
            })
            .sum::<f64>()
            / (4.0 * std::f64::consts::PI)
    }

    pub fn contains_point(&self, p: &Vec3) -> bool {
        self.winding_number(p).abs() > 0.5
    }
}

/// Selection of faces for area-weighted queries.
#[derive(Clone, Debug)]
pub enum FaceSubset {
    Label(i32),
    Indices(Vec<usize>),
}

impl FaceSubset {
    pub fn faces(&self, mesh: &LabeledSurfaceMesh) -> Vec<usize> {
        match self {
            FaceSubset::Label(l) => mesh.faces_with_label(*l),
            FaceSubset::Indices(ix) => ix.clone(),
        }
    }
}

/// Normalized area-weighted mean face normal of a face subset.
pub fn area_weighted_normal(mesh: &LabeledSurfaceMesh, subset: &FaceSubset) -> Result<Vec3> {
    let faces = subset.faces(mesh);
    if faces.is_empty() {
        return Err(MeshError::EmptySubset);
    }
    let mut sum = Vec3::zeros();
    let mut area = 0.0;
    for &f in &faces {
        if f >= mesh.face_count() {
            return Err(MeshError::Invalid(format!("face index {f} out of range")));
        }
        let c = mesh.face_cross(f);
        sum += c;
        area += c.norm();
    }
    let magnitude = sum.norm();
    if area == 0.0 || magnitude <= 1e-9 * area {
        return Err(MeshError::DegenerateNormal {
            magnitude: 0.5 * magnitude,
            area: 0.5 * area,
        });
    }
    Ok(sum / magnitude)
}

/// Plane through `point` with unit `normal`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub point: Vec3,
    pub normal: Vec3,
}

impl Plane {
    pub fn new(point: Vec3, normal: Vec3) -> Result<Self> {
        let len = normal.norm();
        if !(len > 1e-300) || !len.is_finite() {
            return Err(MeshError::DegeneratePlane);
        }
        Ok(Self {
            point,
            normal: normal / len,
        })
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(&(p - self.point))
    }

    pub fn project(&self, p: &Vec3) -> Vec3 {
        p - self.normal * self.signed_distance(p)
    }

    /// Right-handed in-plane basis `(u, v)` with `u × v = normal`.
    pub fn basis(&self) -> (Vec3, Vec3) {
        orthonormal_basis(&self.normal)
    }

    pub fn to_2d(&self, p: &Vec3) -> Vec2 {
        let (u, v) = self.basis();
        let d = p - self.point;
        Vec2::new(d.dot(&u), d.dot(&v))
    }

    pub fn from_2d(&self, q: &Vec2) -> Vec3 {
        let (u, v) = self.basis();
        self.point + u * q.x + v * q.y
    }

    pub fn flipped(&self) -> Self {
        Self {
            point: self.point,
            normal: -self.normal,
        }
    }
}

/// Principal axes of a point cloud, sorted by decreasing spread.
#[derive(Clone, Copy, Debug)]
pub struct PrincipalFrame {
    pub centroid: Vec3,
    pub axes: [Vec3; 3],
    /// Singular values of the centered point matrix.
    pub singular_values: [f64; 3],
}

impl PrincipalFrame {
    /// Plane spanned by the two leading axes.
    pub fn plane(&self) -> Plane {
        Plane {
            point: self.centroid,
            normal: self.axes[2],
        }
    }

    /// Coordinates along the two leading axes.
    pub fn to_2d(&self, p: &Vec3) -> Vec2 {
        let d = p - self.centroid;
        Vec2::new(d.dot(&self.axes[0]), d.dot(&self.axes[1]))
    }
}

/// Principal component frame of `points`. Each axis is signed so that its largest
/// component is positive, and the third axis completes a right-handed frame.
pub fn principal_frame(points: &[Vec3]) -> Result<PrincipalFrame> {
    if points.len() < 3 {
        return Err(MeshError::ShortPolyline(points.len()));
    }
    let centroid = points.iter().sum::<Vec3>() / points.len() as f64;
    let mut cov = nalgebra::Matrix3::<f64>::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut axes = [Vec3::zeros(); 3];
    let mut sv = [0.0; 3];
    for (k, &i) in order.iter().enumerate() {
        let mut a: Vec3 = eig.eigenvectors.column(i).into_owned();
        let big = a.iamax();
        if a[big] < 0.0 {
            a = -a;
        }
        axes[k] = a.normalize();
        sv[k] = eig.eigenvalues[i].max(0.0).sqrt();
    }
    axes[2] = axes[0].cross(&axes[1]).normalize();
    if !(sv[1] >= 1e-9 * sv[0]) || sv[0] == 0.0 {
        return Err(MeshError::Collinear { s1: sv[0], s2: sv[1] });
    }
    Ok(PrincipalFrame {
        centroid,
        axes,
        singular_values: sv,
    })
}

/// Least-squares plane through the centroid; the normal is the direction of least spread.
pub fn best_fit_plane(points: &[Vec3]) -> Result<Plane> {
    Ok(principal_frame(points)?.plane())
}

/// Deterministic right-handed orthonormal completion of a unit vector.
pub fn orthonormal_basis(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let u = helper.cross(n).normalize();
    let v = n.cross(&u);
    (u, v)
}

/// Closed, ordered 3D polyline without repeated consecutive points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedPolyline3D {
    points: Vec<Vec3>,
}

impl ClosedPolyline3D {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        let mut out: Vec<Vec3> = Vec::with_capacity(points.len());
        for p in points {
            if out.last() != Some(&p) {
                out.push(p);
            }
        }
        while out.len() > 1 && out.first() == out.last() {
            out.pop();
        }
        if out.len() < 3 {
            return Err(MeshError::ShortPolyline(out.len()));
        }
        Ok(Self { points: out })
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Vec3> {
        self.points
    }

    pub fn segments(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        let n = self.points.len();
        (0..n).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    pub fn centroid(&self) -> Vec3 {
        self.points.iter().sum::<Vec3>() / self.points.len() as f64
    }

    pub fn reversed(&self) -> Self {
        let mut points = self.points.clone();
        points.reverse();
        Self { points }
    }

    /// Distance from `p` to the nearest point of the polyline.
    pub fn distance_to(&self, p: &Vec3) -> f64 {
        self.segments()
            .map(|(a, b)| geom::point_segment_distance(p, &a, &b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Polygon area after projecting onto `plane`.
    pub fn signed_area_in(&self, plane: &Plane) -> f64 {
        let pts: Vec<Vec2> = self.points.iter().map(|p| plane.to_2d(p)).collect();
        polygon::signed_area(&pts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(a: Vec3, b: Vec3, c: Vec3) -> LabeledSurfaceMesh {
        LabeledSurfaceMesh::uniform(vec![a, b, c], vec![[0, 1, 2]], 1).unwrap()
    }

    #[test]
    fn weighted_normal_mixes_by_area() {
        // area 1 facing +z, area 3 facing +x
        let z = tri(Vec3::new(0., 0., 0.), Vec3::new(2., 0., 0.), Vec3::new(0., 1., 0.));
        let x = tri(Vec3::new(5., 0., 0.), Vec3::new(5., 3., 0.), Vec3::new(5., 0., 2.));
        let m = z.merged(&x);
        assert!((m.face_area(0) - 1.0).abs() < 1e-12);
        assert!((m.face_area(1) - 3.0).abs() < 1e-12);
        let n = area_weighted_normal(&m, &FaceSubset::Indices(vec![0, 1])).unwrap();
        let want = Vec3::new(3., 0., 1.).normalize();
        assert!((n - want).norm() < 1e-12);
    }

    #[test]
    fn weighted_normal_of_closed_surface_is_degenerate() {
        let m = crate::phantom::icosphere(1.0, 2);
        let err = area_weighted_normal(&m, &FaceSubset::Label(1)).unwrap_err();
        assert!(matches!(err, MeshError::DegenerateNormal { .. }));
        assert!(matches!(
            area_weighted_normal(&m, &FaceSubset::Indices(vec![])),
            Err(MeshError::EmptySubset)
        ));
    }

    #[test]
    fn rejects_bad_indices_and_label_counts() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(LabeledSurfaceMesh::new(v.clone(), vec![[0, 1, 3]], vec![1]).is_err());
        assert!(LabeledSurfaceMesh::new(v.clone(), vec![[0, 1, 2]], vec![]).is_err());
        assert!(LabeledSurfaceMesh::new(v, vec![[0, 1, 1]], vec![1]).is_err());
    }

    #[test]
    fn cleaning_collapses_slivers() {
        // quad split with a zero-area sliver wedged along the diagonal
        let v = vec![
            Vec3::new(0., 0., 0.),
            Vec3::new(1., 0., 0.),
            Vec3::new(1., 1., 0.),
            Vec3::new(0., 1., 0.),
            Vec3::new(0.5, 0.5, 0.),
        ];
        let t = vec![[0, 1, 2], [0, 2, 3], [0, 4, 2]];
        let m = LabeledSurfaceMesh::new(v, t, vec![1, 2, 3]).unwrap();
        let c = m.cleaned();
        for f in 0..c.face_count() {
            assert!(c.face_area(f) >= DEGENERATE_AREA);
        }
        assert_eq!(c.face_count(), 2);
    }

    #[test]
    fn plane_basis_is_right_handed() {
        let p = Plane::new(Vec3::new(1., 2., 3.), Vec3::new(0.3, -0.4, 0.8)).unwrap();
        assert!((p.normal.norm() - 1.0).abs() < 1e-12);
        let (u, v) = p.basis();
        assert!((u.cross(&v) - p.normal).norm() < 1e-12);
        let q = Vec3::new(0.5, 0.1, -2.0);
        let back = p.from_2d(&p.to_2d(&q));
        assert!((back - p.project(&q)).norm() < 1e-12);
        assert!(Plane::new(Vec3::zeros(), Vec3::zeros()).is_err());
    }

    #[test]
    fn polyline_drops_repeats() {
        let l = ClosedPolyline3D::new(vec![
            Vec3::zeros(),
            Vec3::zeros(),
            Vec3::x(),
            Vec3::y(),
            Vec3::zeros(),
        ])
        .unwrap();
        assert_eq!(l.len(), 3);
        assert!(ClosedPolyline3D::new(vec![Vec3::zeros(), Vec3::x(), Vec3::x()]).is_err());
    }

    #[test]
    fn winding_number_inside_outside() {
        let m = crate::phantom::icosphere(1.0, 2);
        assert!(m.contains_point(&Vec3::new(0.1, 0.2, -0.3)));
        assert!(!m.contains_point(&Vec3::new(1.5, 0.0, 0.0)));
        assert!((m.signed_volume() - 4.0 / 3.0 * std::f64::consts::PI).abs() < 0.15);
    }
}
