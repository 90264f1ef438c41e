//! The baffle suture line: ordering of sparse surgeon-placed points, densification into a
//! surface-conforming closed curve, and the placeholder-capped ventricular mesh.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::CappedDomain;
use crate::mesh::{
    cap_opening, check_topology, clip_along_curve_detailed, polygon, principal_frame, Bvh, ClosedPolyline3D,
    LabeledSurfaceMesh, MeshError, Vec2, Vec3,
};

pub const MIN_POINTS: usize = 3;
pub const MAX_POINTS: usize = 64;
pub const DEFAULT_SAMPLES: usize = 600;
/// Largest admissible surface-projection distance as a fraction of the curve radius.
pub const MAX_PROJECTION_FRACTION: f64 = 0.1;

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("point file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("point JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{count} points given, expected between {MIN_POINTS} and {MAX_POINTS}")]
    Count { count: usize },
    #[error("point {index} is {distance:.3} cm from the mesh box, limit {limit:.3} cm")]
    TooFar { index: usize, distance: f64, limit: f64 },
    #[error("points are collinear (singular values {s1:.3e}, {s2:.3e})")]
    Collinear { s1: f64, s2: f64 },
    #[error("greedy tour crosses itself between tour edges {0} and {1}")]
    TourSelfIntersects(usize, usize),
    #[error("boundary curve crosses itself for parameters in [{start:.4}, {end:.4}]")]
    CurveSelfIntersects { start: f64, end: f64 },
    #[error("surface projection moved a sample by {max:.4} cm, limit {limit:.4} cm")]
    ProjectionTooFar { max: f64, limit: f64 },
    #[error("wrong side: {0}")]
    WrongSide(String),
}

pub type Result<T, E = BoundaryError> = std::result::Result<T, E>;

/// Sparse suture-line points in cm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsePointSet {
    pub points: Vec<Vec3>,
    #[serde(default)]
    pub source: String,
}

#[derive(Deserialize)]
struct PointsJson {
    points: Vec<[f64; 3]>,
    #[serde(default)]
    source: Option<String>,
}

impl SparsePointSet {
    pub fn new(points: Vec<Vec3>, source: impl Into<String>) -> Result<Self> {
        let set = SparsePointSet {
            points,
            source: source.into(),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        let count = self.points.len();
        if !(MIN_POINTS..=MAX_POINTS).contains(&count) {
            return Err(BoundaryError::Count { count });
        }
        if let Some(i) = self.points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(BoundaryError::Parse {
                line: i + 1,
                message: "non-finite coordinate".into(),
            });
        }
        Ok(())
    }

    /// Every point must lie within two bounding-box diagonals of the mesh box.
    pub fn check_near(&self, mesh: &LabeledSurfaceMesh) -> Result<()> {
        let (lo, hi) = mesh.bounding_box();
        let limit = 2.0 * mesh.bbox_diagonal();
        for (index, p) in self.points.iter().enumerate() {
            let outside = Vec3::from_fn(|k, _| (lo[k] - p[k]).max(p[k] - hi[k]).max(0.0));
            let distance = outside.norm();
            if distance > limit {
                return Err(BoundaryError::TooFar { index, distance, limit });
            }
        }
        Ok(())
    }

    /// `{"points": [[x, y, z], ...]}` with an optional `source` string.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: PointsJson = serde_json::from_str(text)?;
        Self::new(
            raw.points.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect(),
            raw.source.unwrap_or_else(|| "json".into()),
        )
    }

    /// Three whitespace-separated numbers per line; blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(BoundaryError::Parse {
                    line: i + 1,
                    message: format!("expected 3 columns, found {}", fields.len()),
                });
            }
            let mut p = [0.0; 3];
            for (k, f) in fields.iter().enumerate() {
                p[k] = f.parse().map_err(|_| BoundaryError::Parse {
                    line: i + 1,
                    message: format!("not a number: {f:?}"),
                })?;
            }
            points.push(Vec3::new(p[0], p[1], p[2]));
        }
        Self::new(points, "text")
    }

    /// Reads JSON when the file starts with `{`, whitespace columns otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if text.trim_start().starts_with('{') {
            Self::from_json(&text)
        } else {
            Self::from_text(&text)
        }
    }
}

/// Orders the points by a greedy nearest-neighbour tour in their principal-component plane,
/// starting from the point with the lowest first coordinate and running counter-clockwise.
pub fn order_points(sparse: &SparsePointSet) -> Result<SparsePointSet> {
    sparse.validate()?;
    let frame = principal_frame(&sparse.points).map_err(|e| match e {
        MeshError::Collinear { s1, s2 } => BoundaryError::Collinear { s1, s2 },
        other => other.into(),
    })?;
    let flat: Vec<Vec2> = sparse.points.iter().map(|p| frame.to_2d(p)).collect();
    let n = flat.len();
    let start = (0..n)
        .min_by(|&a, &b| flat[a].x.total_cmp(&flat[b].x).then(flat[a].y.total_cmp(&flat[b].y)))
        .unwrap();
    let mut used = vec![false; n];
    let mut tour = vec![start];
    used[start] = true;
    while tour.len() < n {
        let cur = flat[*tour.last().unwrap()];
        let next = (0..n)
            .filter(|&i| !used[i])
            .min_by(|&a, &b| {
                let (da, db) = ((flat[a] - cur).norm_squared(), (flat[b] - cur).norm_squared());
                da.total_cmp(&db)
                    .then(flat[a].x.total_cmp(&flat[b].x))
                    .then(flat[a].y.total_cmp(&flat[b].y))
            })
            .unwrap();
        used[next] = true;
        tour.push(next);
    }
    let ring: Vec<Vec2> = tour.iter().map(|&i| flat[i]).collect();
    if polygon::signed_area(&ring) < 0.0 {
        tour[1..].reverse();
    }
    let ring: Vec<Vec2> = tour.iter().map(|&i| flat[i]).collect();
    if let Some((a, b)) = polygon::first_self_intersection(&ring) {
        return Err(BoundaryError::TourSelfIntersects(a, b));
    }
    Ok(SparsePointSet {
        points: tour.iter().map(|&i| sparse.points[i]).collect(),
        source: sparse.source.clone(),
    })
}

/// Closed interpolating cubic spline with continuous second derivative, parameterized by
/// cumulative chord length.
#[derive(Clone, Debug)]
pub struct ClosedSpline {
    knots: Vec<f64>,
    values: Vec<Vec3>,
    second: Vec<Vec3>,
    period: f64,
}

impl ClosedSpline {
    pub fn new(points: &[Vec3]) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(BoundaryError::Count { count: n });
        }
        let h: Vec<f64> = (0..n).map(|i| (points[(i + 1) % n] - points[i]).norm()).collect();
        if let Some(i) = h.iter().position(|&x| x <= 0.0) {
            return Err(BoundaryError::Parse {
                line: i + 1,
                message: "consecutive points coincide".into(),
            });
        }
        let mut knots = Vec::with_capacity(n);
        let mut t = 0.0;
        for &hi in &h {
            knots.push(t);
            t += hi;
        }
        // h[i-1] m[i-1] + 2 (h[i-1] + h[i]) m[i] + h[i] m[i+1] = 6 (slope[i] - slope[i-1])
        let mut a = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DMatrix::<f64>::zeros(n, 3);
        for i in 0..n {
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            a[(i, prev)] += h[prev];
            a[(i, i)] += 2.0 * (h[prev] + h[i]);
            a[(i, next)] += h[i];
            let s = (points[next] - points[i]) / h[i] - (points[i] - points[prev]) / h[prev];
            for k in 0..3 {
                rhs[(i, k)] = 6.0 * s[k];
            }
        }
        let sol = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| MeshError::Invalid("spline system is singular".into()))?;
        Ok(ClosedSpline {
            knots,
            values: points.to_vec(),
            second: (0..n).map(|i| Vec3::new(sol[(i, 0)], sol[(i, 1)], sol[(i, 2)])).collect(),
            period: t,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn eval(&self, t: f64) -> Vec3 {
        let n = self.knots.len();
        let t = t.rem_euclid(self.period);
        let i = match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let j = (i + 1) % n;
        let t1 = if j == 0 { self.period } else { self.knots[j] };
        let h = t1 - self.knots[i];
        let (a, b) = ((t1 - t) / h, (t - self.knots[i]) / h);
        self.values[i] * a
            + self.values[j] * b
            + (self.second[i] * (a * a * a - a) + self.second[j] * (b * b * b - b)) * (h * h / 6.0)
    }
}

/// Dense closed boundary curve on the surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    pub points: Vec<Vec3>,
    pub n_samples: usize,
    /// Distance each spline sample moved when projected onto the surface.
    pub projection_distances: Vec<f64>,
}

impl BoundaryCurve {
    pub fn polyline(&self) -> Result<ClosedPolyline3D> {
        Ok(ClosedPolyline3D::new(self.points.clone())?)
    }

    pub fn max_projection_distance(&self) -> f64 {
        self.projection_distances.iter().copied().fold(0.0, f64::max)
    }

    /// Ratio of the longest to the shortest consecutive spacing.
    pub fn spacing_ratio(&self) -> f64 {
        let n = self.points.len();
        let d: Vec<f64> = (0..n).map(|i| (self.points[(i + 1) % n] - self.points[i]).norm()).collect();
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        hi / lo
    }
}

/// Fits a closed chord-length cubic spline through the ordered points, samples it at
/// `n_samples` equidistant parameters and projects every sample onto the closest surface point.
pub fn densify_boundary(ordered: &SparsePointSet, mesh: &LabeledSurfaceMesh, n_samples: usize) -> Result<BoundaryCurve> {
    densify_with(ordered, &Bvh::new(mesh), n_samples, MAX_PROJECTION_FRACTION)
}

/// [`densify_boundary`] against a prebuilt hierarchy, with the projection limit given as a
/// fraction of the curve's mean radius.
pub fn densify_with(
    ordered: &SparsePointSet,
    bvh: &Bvh,
    n_samples: usize,
    max_projection_fraction: f64,
) -> Result<BoundaryCurve> {
    ordered.validate()?;
    if n_samples < 3 {
        return Err(BoundaryError::Count { count: n_samples });
    }
    let spline = ClosedSpline::new(&ordered.points)?;
    let samples: Vec<Vec3> = (0..n_samples)
        .map(|k| spline.eval(spline.period() * k as f64 / n_samples as f64))
        .collect();
    let centroid = samples.iter().sum::<Vec3>() / n_samples as f64;
    let radius = samples.iter().map(|p| (p - centroid).norm()).sum::<f64>() / n_samples as f64;
    let mut points = Vec::with_capacity(n_samples);
    let mut distances = Vec::with_capacity(n_samples);
    for s in &samples {
        let hit = bvh
            .closest_point(s)
            .ok_or_else(|| MeshError::Invalid("empty surface".into()))?;
        points.push(hit.point);
        distances.push(hit.distance);
    }
    let max = distances.iter().copied().fold(0.0, f64::max);
    let limit = max_projection_fraction * radius;
    if max > limit {
        return Err(BoundaryError::ProjectionTooFar { max, limit });
    }
    let frame = principal_frame(&points)?;
    let flat: Vec<Vec2> = points.iter().map(|p| frame.to_2d(p)).collect();
    if let Some((a, b)) = polygon::first_self_intersection(&flat) {
        return Err(BoundaryError::CurveSelfIntersects {
            start: a as f64 / n_samples as f64,
            end: (b + 1) as f64 / n_samples as f64,
        });
    }
    Ok(BoundaryCurve {
        points,
        n_samples,
        projection_distances: distances,
    })
}

/// The capped domain clipped at the boundary curve, with the opening closed by a placeholder
/// surface.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Placeholder {
    pub mesh: LabeledSurfaceMesh,
    pub placeholder_label: i32,
    /// The embedded stitch line: the boundary points plus the edge crossings between them.
    pub rim: Vec<Vec3>,
}

pub fn make_placeholder(capped: &CappedDomain, boundary: &BoundaryCurve) -> Result<Placeholder> {
    let curve = boundary.polyline()?;
    let outcome = clip_along_curve_detailed(&capped.mesh, &curve)?;
    let has_caps = |m: &LabeledSurfaceMesh| m.has_label(capped.vsd_cap_label) && m.has_label(capped.aortic_cap_label);
    let kept = match (has_caps(&outcome.part_a), has_caps(&outcome.part_b)) {
        (true, false) => outcome.part_a,
        (false, true) => outcome.part_b,
        (true, true) => {
            return Err(BoundaryError::WrongSide(
                "both sides of the boundary carry the two caps".into(),
            ))
        }
        (false, false) => {
            return Err(BoundaryError::WrongSide(
                "the boundary separates the VSD cap from the aortic cap".into(),
            ))
        }
    };
    let placeholder_label = capped.mesh.next_free_label();
    let mesh = cap_opening(&kept, &outcome.cut, placeholder_label)?;
    let mut map = mesh.label_map().clone();
    map.insert("placeholder".into(), placeholder_label);
    let mesh = mesh.with_label_map(map);
    let topo = check_topology(&mesh);
    if !topo.watertight {
        return Err(MeshError::Invalid(format!(
            "placeholder mesh is not watertight ({} boundary edges)",
            topo.boundary_edges
        ))
        .into());
    }
    Ok(Placeholder {
        mesh,
        placeholder_label,
        rim: outcome.cut.into_points(),
    })
}
