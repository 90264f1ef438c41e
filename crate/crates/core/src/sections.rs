//! Cross-sections of the placeholder domain along the centerline, their split into a fixed arc
//! and a reshapeable baffle arc, the per-section parabolic amplitude that meets the target
//! area, and upper-hull smoothing of the amplitude profile.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::BoundaryCurve;
use crate::centerline::Centerline;
use crate::mesh::{
    best_fit_plane, geom, plane_intersection_detailed, polygon, LabeledSurfaceMesh, MeshError, Plane, Vec2, Vec3,
};

/// A section is discarded when more than this fraction of its vertices lie on the RV wall.
pub const RV_FRACTION_LIMIT: f64 = 0.75;
pub const DEFAULT_AREA_TOL: f64 = 1e-6;
const MAX_DOUBLINGS: usize = 64;
const MAX_BISECTIONS: usize = 200;

#[derive(Debug, Error)]
pub enum SectionError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("no cross-section was accepted ({skipped} skipped); the boundary curve and centerline do not match")]
    NoSections { skipped: usize },
    #[error("section {index}: target area {target:.4} cm² not reached after {MAX_DOUBLINGS} bracket doublings")]
    Infeasible { index: usize, target: f64 },
    #[error("target area must be positive, got {0}")]
    BadTarget(f64),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = SectionError> = std::result::Result<T, E>;

/// One accepted cross-section loop. The baffle arc runs forward (cyclically) from
/// `split_indices[0]` to `split_indices[1]`, the fixed arc from `split_indices[1]` back to
/// `split_indices[0]`; both include the two split vertices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionLoop {
    /// 0-based centerline sample.
    pub index: usize,
    pub plane: Plane,
    pub vertices: Vec<Vec3>,
    pub vertex_labels: Vec<i32>,
    pub split_indices: [usize; 2],
}

impl SectionLoop {
    fn cyclic(&self, from: usize, to: usize) -> Vec<usize> {
        let n = self.vertices.len();
        let mut out = vec![from];
        let mut i = from;
        while i != to {
            i = (i + 1) % n;
            out.push(i);
        }
        out
    }

    pub fn arc_baffle(&self) -> Vec<usize> {
        self.cyclic(self.split_indices[0], self.split_indices[1])
    }

    pub fn arc_fixed(&self) -> Vec<usize> {
        self.cyclic(self.split_indices[1], self.split_indices[0])
    }

    /// Area enclosed by the loop in its cutting plane.
    pub fn area(&self) -> f64 {
        let flat: Vec<Vec2> = self.vertices.iter().map(|p| self.plane.to_2d(p)).collect();
        polygon::loop_area(&flat)
    }
}

/// Why a centerline sample produced no usable section.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SectionStatus {
    Accepted,
    NoEnclosingLoop,
    RvDominated { fraction: f64 },
    NoSplit { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionRecord {
    pub index: usize,
    pub status: SectionStatus,
    pub raw_area: Option<f64>,
    pub rv_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionSet {
    pub sections: Vec<SectionLoop>,
    pub records: Vec<SectionRecord>,
}

/// Intersects the mesh with the normal plane at every centerline sample and keeps the
/// accepted, split section loops. Fails only when no section survives.
pub fn extract_sections(
    mesh: &LabeledSurfaceMesh,
    center: &Centerline,
    boundary: &BoundaryCurve,
    rv_wall_label: i32,
    placeholder_label: i32,
) -> Result<SectionSet> {
    extract_sections_with(mesh, center, boundary, rv_wall_label, placeholder_label, RV_FRACTION_LIMIT)
}

/// [`extract_sections`] with an explicit limit on the RV-wall vertex fraction.
pub fn extract_sections_with(
    mesh: &LabeledSurfaceMesh,
    center: &Centerline,
    boundary: &BoundaryCurve,
    rv_wall_label: i32,
    placeholder_label: i32,
    rv_limit: f64,
) -> Result<SectionSet> {
    if center.tangents.len() != center.points.len() {
        return Err(SectionError::Invalid("centerline has no tangents".into()));
    }
    let results: Vec<(SectionRecord, Option<SectionLoop>)> = (0..center.points.len())
        .into_par_iter()
        .map(|j| {
            let plane = Plane::new(center.points[j], center.tangents[j]).map_err(SectionError::from)?;
            Ok(section_at(mesh, j, plane, boundary, rv_wall_label, placeholder_label, rv_limit))
        })
        .collect::<Result<_>>()?;
    let mut set = SectionSet {
        sections: Vec::new(),
        records: Vec::new(),
    };
    for (rec, sec) in results {
        if let Some(s) = sec {
            set.sections.push(s);
        }
        set.records.push(rec);
    }
    if set.sections.is_empty() {
        return Err(SectionError::NoSections {
            skipped: set.records.len(),
        });
    }
    Ok(set)
}

/// Section of `mesh` by `plane`, keeping the loop that encloses `plane.point`.
pub fn section_at(
    mesh: &LabeledSurfaceMesh,
    index: usize,
    plane: Plane,
    boundary: &BoundaryCurve,
    rv_wall_label: i32,
    placeholder_label: i32,
    rv_limit: f64,
) -> (SectionRecord, Option<SectionLoop>) {
    let mut record = SectionRecord {
        index,
        status: SectionStatus::NoEnclosingLoop,
        raw_area: None,
        rv_fraction: None,
    };
    let center2 = plane.to_2d(&plane.point);
    let chosen = plane_intersection_detailed(mesh, &plane)
        .loops
        .into_iter()
        .filter_map(|c| {
            let flat: Vec<Vec2> = c.points.iter().map(|p| plane.to_2d(p)).collect();
            (flat.len() >= 3 && polygon::point_in_polygon(&center2, &flat))
                .then(|| (polygon::loop_area(&flat), c))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0));
    let Some((area, contour)) = chosen else {
        return (record, None);
    };
    record.raw_area = Some(area);
    let labels: Vec<i32> = contour.faces.iter().map(|&f| mesh.labels()[f as usize]).collect();
    let n = labels.len();
    let fraction = labels.iter().filter(|&&l| l == rv_wall_label).count() as f64 / n as f64;
    record.rv_fraction = Some(fraction);
    if fraction > rv_limit {
        record.status = SectionStatus::RvDominated { fraction };
        return (record, None);
    }
    let fail = |mut record: SectionRecord, reason: &str| {
        record.status = SectionStatus::NoSplit { reason: reason.into() };
        (record, None)
    };
    let Some(splits) = split_vertices(&contour.points, &plane, boundary) else {
        return fail(record, "the boundary curve does not cross this loop twice");
    };
    let mut section = SectionLoop {
        index,
        plane,
        vertices: contour.points,
        vertex_labels: labels,
        split_indices: splits,
    };
    let share = |arc: &[usize]| {
        arc.iter()
            .filter(|&&i| section.vertex_labels[i] == placeholder_label)
            .count() as f64
            / arc.len() as f64
    };
    let (fwd, bwd) = (share(&section.arc_baffle()), share(&section.arc_fixed()));
    if fwd <= 0.5 && bwd <= 0.5 {
        return fail(record, "neither arc is mostly placeholder");
    }
    if bwd > fwd {
        section.split_indices = [splits[1], splits[0]];
    }
    record.status = SectionStatus::Accepted;
    (record, Some(section))
}

/// Loop vertices nearest the two points where the boundary curve crosses the plane close to
/// this loop.
fn split_vertices(points: &[Vec3], plane: &Plane, boundary: &BoundaryCurve) -> Option<[usize; 2]> {
    let b = &boundary.points;
    let m = b.len();
    let sd: Vec<f64> = b.iter().map(|p| plane.signed_distance(p)).collect();
    let n = points.len();
    let mut crossings: Vec<(f64, usize)> = Vec::new();
    for i in 0..m {
        let k = (i + 1) % m;
        if (sd[i] >= 0.0) == (sd[k] >= 0.0) {
            continue;
        }
        let c = b[i] + (b[k] - b[i]) * (sd[i] / (sd[i] - sd[k]));
        let (dist, nearest) = (0..n)
            .map(|v| ((points[v] - c).norm(), v))
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))?;
        let seg = (0..n)
            .map(|v| geom::point_segment_distance(&c, &points[v], &points[(v + 1) % n]))
            .fold(f64::INFINITY, f64::min);
        crossings.push((seg.max(0.0) + 1e-3 * dist, nearest));
    }
    crossings.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let first = crossings.first()?.1;
    let second = crossings.iter().find(|c| c.1 != first)?.1;
    Some([first, second])
}

/// Section after reshaping: the fixed arc is kept and the baffle arc replaced by a parabola
/// over its chord.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapedSection {
    pub source: SectionLoop,
    pub amplitude: f64,
    /// Replacement baffle arc from the first split vertex to the second, same vertex count.
    pub new_arc: Vec<Vec3>,
    /// Unit in-plane direction of the displacement.
    pub chord_normal: Vec3,
    pub area: f64,
    /// True when the section already met the target and keeps its original arc.
    pub unchanged: bool,
}

impl ShapedSection {
    /// Closed loop: fixed arc followed by the interior of the new arc.
    pub fn loop_points(&self) -> Vec<Vec3> {
        let fixed = self.source.arc_fixed();
        let mut pts: Vec<Vec3> = fixed.iter().map(|&i| self.source.vertices[i]).collect();
        pts.extend(self.new_arc[1..self.new_arc.len() - 1].iter().copied());
        pts
    }
}

/// The section's geometry in its best-fit plane, ready for area evaluations.
#[derive(Clone, Debug)]
pub struct ArcFamily {
    plane: Plane,
    fixed: Vec<Vec2>,
    a: Vec2,
    b: Vec2,
    v: Vec2,
    samples: usize,
}

impl ArcFamily {
    pub fn new(section: &SectionLoop) -> Result<Self> {
        let plane = best_fit_plane(&section.vertices)?;
        let fixed: Vec<Vec2> = section
            .arc_fixed()
            .iter()
            .map(|&i| plane.to_2d(&section.vertices[i]))
            .collect();
        let baffle = section.arc_baffle();
        let a = plane.to_2d(&section.vertices[baffle[0]]);
        let b = plane.to_2d(&section.vertices[*baffle.last().unwrap()]);
        let chord = b - a;
        let len = chord.norm();
        if len == 0.0 {
            return Err(SectionError::Invalid(format!("section {}: zero chord", section.index)));
        }
        let mut v = Vec2::new(-chord.y, chord.x) / len;
        let centroid = fixed.iter().sum::<Vec2>() / fixed.len() as f64;
        if v.dot(&((a + b) * 0.5 - centroid)) < 0.0 {
            v = -v;
        }
        Ok(ArcFamily {
            plane,
            fixed,
            a,
            b,
            v,
            samples: baffle.len(),
        })
    }

    pub fn chord_length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// `samples` points of the parabola from `a` to `b` with apex offset `alpha`.
    pub fn arc(&self, alpha: f64) -> Vec<Vec2> {
        let n = self.samples.max(2);
        (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                self.a * (1.0 - s) + self.b * s + self.v * (alpha * 4.0 * s * (1.0 - s))
            })
            .collect()
    }

    /// The arc at amplitude `alpha` lifted back to 3D.
    pub fn lifted_arc(&self, alpha: f64) -> Vec<Vec3> {
        self.arc(alpha).iter().map(|q| self.plane.from_2d(q)).collect()
    }

    pub fn area(&self, alpha: f64) -> f64 {
        let arc = self.arc(alpha);
        let mut ring = self.fixed.clone();
        ring.extend_from_slice(&arc[1..arc.len() - 1]);
        polygon::loop_area(&ring)
    }

    /// Smallest amplitude in `[0, ∞)` whose area reaches `target`, to within `tol` in area.
    pub fn solve(&self, target: f64, tol: f64, index: usize) -> Result<f64> {
        if self.area(0.0) >= target {
            return Ok(0.0);
        }
        let mut hi = self.chord_length();
        let mut doublings = 0;
        while self.area(hi) < target {
            if doublings == MAX_DOUBLINGS {
                return Err(SectionError::Infeasible { index, target });
            }
            hi *= 2.0;
            doublings += 1;
        }
        let mut lo = 0.0;
        for _ in 0..MAX_BISECTIONS {
            if self.area(hi) - target <= tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.area(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Solves the amplitude of one section: zero when its current area already meets `target`,
/// else the bisection root of the parabolic family.
pub fn solve_amplitude(section: &SectionLoop, target: f64, tol: f64) -> Result<ShapedSection> {
    if !(target > 0.0) {
        return Err(SectionError::BadTarget(target));
    }
    let family = ArcFamily::new(section)?;
    let current = {
        let flat: Vec<Vec2> = section.vertices.iter().map(|p| family.plane.to_2d(p)).collect();
        polygon::loop_area(&flat)
    };
    if current >= target {
        return Ok(unchanged(section, &family, current));
    }
    let alpha = family.solve(target, tol, section.index)?;
    Ok(shape_at(section, &family, alpha))
}

fn unchanged(section: &SectionLoop, family: &ArcFamily, area: f64) -> ShapedSection {
    ShapedSection {
        source: section.clone(),
        amplitude: 0.0,
        new_arc: section.arc_baffle().iter().map(|&i| section.vertices[i]).collect(),
        chord_normal: family.plane.from_2d(&family.v) - family.plane.from_2d(&Vec2::zeros()),
        area,
        unchanged: true,
    }
}

fn shape_at(section: &SectionLoop, family: &ArcFamily, alpha: f64) -> ShapedSection {
    let arc2 = family.arc(alpha);
    let baffle = section.arc_baffle();
    let mut new_arc: Vec<Vec3> = arc2.iter().map(|q| family.plane.from_2d(q)).collect();
    // the stitch points keep their exact coordinates
    new_arc[0] = section.vertices[baffle[0]];
    *new_arc.last_mut().unwrap() = section.vertices[*baffle.last().unwrap()];
    ShapedSection {
        source: section.clone(),
        amplitude: alpha,
        new_arc,
        chord_normal: family.plane.from_2d(&family.v) - family.plane.from_2d(&Vec2::zeros()),
        area: family.area(alpha),
        unchanged: false,
    }
}

/// Raw and smoothed amplitudes over the accepted section indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeProfile {
    pub indices: Vec<usize>,
    pub raw: Vec<f64>,
    pub smoothed: Vec<f64>,
    /// Section indices of the upper-hull vertices.
    pub envelope_indices: Vec<usize>,
}

/// Value at `j` of the line through `(i, ai)` and `(k, ak)`.
pub fn interp(i: f64, ai: f64, k: f64, ak: f64, j: f64) -> f64 {
    ai + (ak - ai) * (j - i) / (k - i)
}

/// Upper chain of the convex hull of `(index, alpha)`, evaluated at every index by linear
/// interpolation between consecutive hull vertices.
pub fn smooth_amplitudes(raw: &[(usize, f64)]) -> AmplitudeProfile {
    let mut pts = raw.to_vec();
    pts.sort_by_key(|p| p.0);
    pts.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 = a.1.max(b.1);
            true
        } else {
            false
        }
    });
    let mut hull: Vec<usize> = Vec::new();
    let cross = |o: (usize, f64), a: (usize, f64), b: (usize, f64)| {
        (a.0 as f64 - o.0 as f64) * (b.1 - o.1) - (a.1 - o.1) * (b.0 as f64 - o.0 as f64)
    };
    for k in 0..pts.len() {
        while hull.len() >= 2 && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[k]) >= 0.0 {
            hull.pop();
        }
        hull.push(k);
    }
    let mut smoothed = Vec::with_capacity(pts.len());
    let mut seg = 0;
    for (k, p) in pts.iter().enumerate() {
        while seg + 1 < hull.len() && hull[seg + 1] < k {
            seg += 1;
        }
        let value = if hull.contains(&k) || hull.len() < 2 {
            p.1
        } else {
            let (i, l) = (pts[hull[seg]], pts[hull[seg + 1]]);
            interp(i.0 as f64, i.1, l.0 as f64, l.1, p.0 as f64)
        };
        smoothed.push(value);
    }
    AmplitudeProfile {
        indices: pts.iter().map(|p| p.0).collect(),
        raw: pts.iter().map(|p| p.1).collect(),
        smoothed,
        envelope_indices: hull.iter().map(|&k| pts[k].0).collect(),
    }
}

/// Result of reshaping all sections.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reshaped {
    pub profile: AmplitudeProfile,
    pub shaped: Vec<ShapedSection>,
    /// Sections whose smoothed amplitude fell short of their own root and were raised to it.
    pub raised: Vec<usize>,
}

/// Solves every section, smooths the amplitude profile and re-shapes each section at its
/// smoothed amplitude.
pub fn reshape_all(sections: &[SectionLoop], target: f64, tol: f64) -> Result<Reshaped> {
    if sections.is_empty() {
        return Err(SectionError::NoSections { skipped: 0 });
    }
    let solved: Vec<(ArcFamily, ShapedSection)> = sections
        .par_iter()
        .map(|s| Ok((ArcFamily::new(s)?, solve_amplitude(s, target, tol)?)))
        .collect::<Result<_>>()?;
    let raw: Vec<(usize, f64)> = solved.iter().map(|(_, s)| (s.source.index, s.amplitude)).collect();
    let profile = smooth_amplitudes(&raw);
    let mut raised = Vec::new();
    let mut shaped = Vec::with_capacity(solved.len());
    for (family, first) in &solved {
        let k = profile
            .indices
            .binary_search(&first.source.index)
            .map_err(|_| SectionError::Invalid("duplicate section index".into()))?;
        let alpha = profile.smoothed[k];
        if alpha == 0.0 && first.unchanged {
            shaped.push(first.clone());
            continue;
        }
        let mut out = shape_at(&first.source, family, alpha);
        if out.area < target - tol {
            let own = family.solve(target, tol, first.source.index)?;
            out = shape_at(&first.source, family, alpha.max(own));
            raised.push(first.source.index);
        }
        shaped.push(out);
    }
    if !raised.is_empty() {
        log::warn!("{} sections raised to their own feasible amplitude after smoothing", raised.len());
    }
    Ok(Reshaped {
        profile,
        shaped,
        raised,
    })
}

/// Per-sample CSV: `j,accepted,raw_area,alpha,alpha_smoothed,final_area` with 1-based `j`.
pub fn profile_csv(records: &[SectionRecord], reshaped: &Reshaped) -> String {
    let mut out = String::from("j,accepted,raw_area,alpha,alpha_smoothed,final_area\n");
    for r in records {
        let accepted = matches!(r.status, SectionStatus::Accepted);
        let raw_area = r.raw_area.map(|a| format!("{a:.9}")).unwrap_or_default();
        let (alpha, smooth, area) = match reshaped.profile.indices.binary_search(&r.index) {
            Ok(k) if accepted => (
                format!("{:.9}", reshaped.profile.raw[k]),
                format!("{:.9}", reshaped.profile.smoothed[k]),
                format!("{:.9}", reshaped.shaped[k].area),
            ),
            _ => Default::default(),
        };
        out.push_str(&format!(
            "{},{},{raw_area},{alpha},{smooth},{area}\n",
            r.index + 1,
            accepted as u8
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Upper unit semicircle (fixed, `n_fixed` segments) closed by a chord sampled with
    /// `n_chord` points, in the plane z = 0.
    fn semicircle_section(n_fixed: usize, n_chord: usize) -> SectionLoop {
        let mut vertices = Vec::new();
        // chord from (-1, 0) to (1, 0)
        for i in 0..n_chord {
            let s = i as f64 / (n_chord - 1) as f64;
            vertices.push(Vec3::new(-1.0 + 2.0 * s, 0.0, 0.0));
        }
        for i in 1..n_fixed {
            let t = PI * i as f64 / n_fixed as f64;
            vertices.push(Vec3::new(t.cos(), t.sin(), 0.0));
        }
        let n = vertices.len();
        let mut labels = vec![2; n];
        labels[..n_chord].fill(9);
        SectionLoop {
            index: 0,
            plane: Plane::new(Vec3::zeros(), Vec3::z()).unwrap(),
            vertices,
            vertex_labels: labels,
            split_indices: [0, n_chord - 1],
        }
    }

    #[test]
    fn arcs_partition_the_loop() {
        let s = semicircle_section(10, 5);
        let (b, f) = (s.arc_baffle(), s.arc_fixed());
        assert_eq!(b.len() + f.len(), s.vertices.len() + 2);
        assert_eq!(b.first(), f.last());
        assert_eq!(b.last(), f.first());
    }

    #[test]
    fn semicircle_amplitudes() {
        let s = semicircle_section(4000, 2001);
        let fixed_area = 0.5 * 4000.0 * (PI / 4000.0).sin();
        // parabolic segment area on the sampled arc is 4α/3 · (1 - 1/n²)
        let k = 4.0 / 3.0 * (1.0 - 1.0 / 2000f64.powi(2));
        for (target, alpha) in [(PI / 2.0 + 1.0, 0.75), (PI / 2.0 + 4.0 / 3.0, 1.0)] {
            let out = solve_amplitude(&s, target, 1e-9).unwrap();
            assert!((out.amplitude - alpha).abs() < 1e-4, "{}", out.amplitude);
            let exact = (target - fixed_area) / k;
            assert!((out.amplitude - exact).abs() < 1e-8);
            assert!(out.area >= target && out.area <= target + 1e-9);
            assert_eq!(out.new_arc.len(), 2001);
            assert_eq!(out.new_arc[0], s.vertices[0]);
            assert_eq!(out.new_arc[2000], s.vertices[2000]);
        }
    }

    #[test]
    fn satisfied_section_is_unchanged() {
        let s = semicircle_section(200, 20);
        let out = solve_amplitude(&s, 1.0, 1e-6).unwrap();
        assert_eq!(out.amplitude, 0.0);
        assert!(out.unchanged);
        let arc: Vec<Vec3> = s.arc_baffle().iter().map(|&i| s.vertices[i]).collect();
        assert_eq!(out.new_arc, arc);
    }

    #[test]
    fn area_grows_with_amplitude() {
        let s = semicircle_section(100, 31);
        let f = ArcFamily::new(&s).unwrap();
        let mut prev = f.area(0.0);
        for k in 1..50 {
            let a = f.area(0.1 * k as f64);
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn impossible_target_is_infeasible() {
        let s = semicircle_section(100, 31);
        assert!(matches!(
            solve_amplitude(&s, f64::MAX, 1e-6),
            Err(SectionError::Infeasible { .. })
        ));
        assert!(matches!(solve_amplitude(&s, -1.0, 1e-6), Err(SectionError::BadTarget(_))));
    }

    #[test]
    fn loop_area_examples() {
        let sq = [Vec2::new(0., 0.), Vec2::new(1., 0.), Vec2::new(1., 1.), Vec2::new(0., 1.)];
        assert_eq!(polygon::loop_area(&sq), 1.0);
        let rev: Vec<Vec2> = sq.iter().rev().copied().collect();
        assert_eq!(polygon::loop_area(&rev), 1.0);
        let ngon: Vec<Vec2> = (0..1000)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 1000.0;
                Vec2::new(t.cos(), t.sin())
            })
            .collect();
        assert!((polygon::loop_area(&ngon) - PI).abs() < 1e-4);
    }

    #[test]
    fn envelope_examples() {
        let p = smooth_amplitudes(&[(0, 2.0), (1, 0.0), (2, 2.0)]);
        assert_eq!(p.smoothed, vec![2.0, 2.0, 2.0]);
        let p = smooth_amplitudes(&[(0, 0.0), (1, 1.0), (2, 2.0), (3, 1.0), (4, 0.0)]);
        assert_eq!(p.smoothed, vec![0.0, 1.0, 2.0, 1.0, 0.0]);
        assert_eq!(p.envelope_indices, vec![0, 2, 4]);
        let p = smooth_amplitudes(&[(3, 0.5), (7, 0.5), (9, 0.5)]);
        assert_eq!(p.smoothed, vec![0.5; 3]);
    }

    #[test]
    fn gaps_in_indices_interpolate_on_accepted_sections() {
        let p = smooth_amplitudes(&[(0, 1.0), (5, 0.0), (10, 3.0)]);
        assert_eq!(p.envelope_indices, vec![0, 10]);
        assert!((p.smoothed[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn csv_has_a_row_per_sample() {
        let s = semicircle_section(200, 21);
        let r = reshape_all(&[s], PI / 2.0 + 0.5, 1e-6).unwrap();
        let records = vec![
            SectionRecord {
                index: 0,
                status: SectionStatus::Accepted,
                raw_area: Some(1.5),
                rv_fraction: Some(0.5),
            },
            SectionRecord {
                index: 1,
                status: SectionStatus::NoEnclosingLoop,
                raw_area: None,
                rv_fraction: None,
            },
        ];
        let csv = profile_csv(&records, &r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "j,accepted,raw_area,alpha,alpha_smoothed,final_area");
        assert!(lines[1].starts_with("1,1,1.500000000,"));
        assert_eq!(lines[2], "2,0,,,,");
    }
}
