//! Shape-preserving centerline between the inlet and outlet caps, with short ramps that align
//! it with the cap normals, and finite-difference tangents.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use nalgebra::Matrix3;

use crate::mesh::{
    area_weighted_normal, check_topology, orthonormal_basis, FaceSubset, LabeledSurfaceMesh, MeshError, Vec3,
};

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_WINDOW: usize = 3;

#[derive(Debug, Error)]
pub enum CenterlineError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("cap label {0} is not present")]
    CapMissing(i32),
    #[error("cap label {label} is split into {components} pieces")]
    CapFragmented { label: i32, components: usize },
    #[error("inlet and outlet centroids coincide")]
    CoincidentCaps,
    #[error("control points {index} and {} coincide", index + 1)]
    ZeroChord { index: usize },
    #[error("sample index {j} outside 1..={m}")]
    IndexOutOfRange { j: usize, m: usize },
    #[error("tangent at sample {j} is undefined: its stencil points coincide")]
    ZeroTangent { j: usize },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = CenterlineError> = std::result::Result<T, E>;

/// Cap centroid, unit normal pointing into the flow domain, and radius of the equal-area disk.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapFrame {
    pub centroid: Vec3,
    pub normal: Vec3,
    pub effective_radius: f64,
}

/// Builds the frame of the faces labeled `cap_label`. The normal is the area-weighted face
/// normal, flipped if needed so that a point just off the centroid along it lies inside the
/// mesh.
pub fn cap_frame(mesh: &LabeledSurfaceMesh, cap_label: i32) -> Result<CapFrame> {
    let faces = mesh.faces_with_label(cap_label);
    if faces.is_empty() {
        return Err(CenterlineError::CapMissing(cap_label));
    }
    let cap = mesh.submesh(&faces);
    let components = check_topology(&cap).connected_components;
    if components != 1 {
        return Err(CenterlineError::CapFragmented {
            label: cap_label,
            components,
        });
    }
    let area: f64 = faces.iter().map(|&f| mesh.face_area(f)).sum();
    let centroid = faces
        .iter()
        .map(|&f| mesh.face_centroid(f) * mesh.face_area(f))
        .sum::<Vec3>()
        / area;
    let outward = area_weighted_normal(mesh, &FaceSubset::Label(cap_label))?;
    let radius = (area / std::f64::consts::PI).sqrt();
    let eps = 1e-3 * radius;
    let mut normal = -outward;
    if check_topology(mesh).watertight
        && !mesh.contains_point(&(centroid + normal * eps))
        && mesh.contains_point(&(centroid - normal * eps))
    {
        normal = -normal;
    }
    Ok(CapFrame {
        centroid,
        normal,
        effective_radius: radius,
    })
}

/// Piecewise cubic Hermite interpolant with shape-preserving (monotone) slopes.
#[derive(Clone, Debug)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    /// `x` strictly increasing, at least two nodes.
    pub fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(CenterlineError::Invalid("interpolant needs two or more matching nodes".into()));
        }
        if let Some(i) = (0..n - 1).find(|&i| x[i + 1] <= x[i]) {
            return Err(CenterlineError::ZeroChord { index: i });
        }
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d.fill(delta[0]);
        } else {
            for k in 1..n - 1 {
                let (a, b) = (delta[k - 1], delta[k]);
                if a == 0.0 || b == 0.0 || a.signum() != b.signum() {
                    continue;
                }
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / a + w2 / b);
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Pchip {
            x: x.to_vec(),
            y: y.to_vec(),
            d,
        })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => return self.y[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

/// One-sided three-point end slope, limited to keep the end interval monotone.
fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Sampled centerline from the inlet centroid to the outlet centroid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Centerline {
    pub points: Vec<Vec3>,
    pub tangents: Vec<Vec3>,
    /// `[p_0, p_in, q_in, q_out, p_out, p_N]`.
    pub control_points: [Vec3; 6],
}

/// Centerline between two cap frames whose normals point into the domain. The outlet's flow
/// direction is the reverse of its frame normal.
pub fn build_centerline(inlet: &CapFrame, outlet: &CapFrame) -> Result<Centerline> {
    build_centerline_from(
        inlet.centroid,
        inlet.normal,
        inlet.effective_radius,
        outlet.centroid,
        -outlet.normal,
        outlet.effective_radius,
        DEFAULT_SAMPLES,
    )
}

/// Centerline from explicit inlet and outlet data. Both normals point along the flow: into the
/// domain at the inlet and out of it at the outlet.
///
/// The control points are interpolated coordinate-wise twice, once in a frame aligned with
/// each ramp, and the two sample sequences are blended with smoothstep weights running from
/// the inlet curve to the outlet curve. Both frames move with the data, so the result is
/// equivariant under rigid motions, and each end follows the curve built in its own ramp frame.
pub fn build_centerline_from(
    p_in: Vec3,
    n_in: Vec3,
    r_in: f64,
    p_out: Vec3,
    n_out: Vec3,
    r_out: f64,
    samples: usize,
) -> Result<Centerline> {
    if (p_out - p_in).norm() == 0.0 {
        return Err(CenterlineError::CoincidentCaps);
    }
    if samples < 2 {
        return Err(CenterlineError::Invalid(format!("need at least 2 samples, got {samples}")));
    }
    let n_in = n_in.try_normalize(0.0).ok_or(CenterlineError::Invalid("zero inlet normal".into()))?;
    let n_out = n_out.try_normalize(0.0).ok_or(CenterlineError::Invalid("zero outlet normal".into()))?;
    let (l_in, l_out) = (r_in / 4.0, r_out / 4.0);
    let control = [
        p_in - n_in * (0.5 * r_in),
        p_in,
        p_in + n_in * l_in,
        p_out - n_out * l_out,
        p_out,
        p_out + n_out * (0.5 * r_out),
    ];
    let mut s = [0.0; 6];
    for i in 1..6 {
        let chord = (control[i] - control[i - 1]).norm();
        if chord == 0.0 {
            return Err(CenterlineError::ZeroChord { index: i - 1 });
        }
        s[i] = s[i - 1] + chord;
    }
    let near_in = ramp_curve(&control, &s, &ramp_frame(&n_in, &n_out, &(p_out - p_in)), samples)?;
    let near_out = ramp_curve(&control, &s, &ramp_frame(&n_out, &n_in, &(p_out - p_in)), samples)?;
    let mut points: Vec<Vec3> = near_in
        .iter()
        .zip(&near_out)
        .enumerate()
        .map(|(k, (a, b))| {
            let u = k as f64 / (samples - 1) as f64;
            let w = u * u * (3.0 - 2.0 * u);
            a * (1.0 - w) + b * w
        })
        .collect();
    points[0] = p_in;
    points[samples - 1] = p_out;
    if let Some(i) = (1..samples).find(|&i| (points[i] - points[i - 1]).norm() == 0.0) {
        return Err(CenterlineError::Invalid(format!("samples {} and {i} coincide", i - 1)));
    }
    let mut line = Centerline {
        points,
        tangents: Vec::new(),
        control_points: control,
    };
    line.tangents = (1..=samples)
        .map(|j| tangent_at(&line, j, DEFAULT_WINDOW))
        .collect::<Result<_>>()?;
    Ok(line)
}

/// Frame (as matrix rows) whose first axis is the ramp direction `n`; the second axis comes
/// from the other ramp direction, else from the cap-to-cap chord.
fn ramp_frame(n: &Vec3, other: &Vec3, chord: &Vec3) -> Matrix3<f64> {
    let perp = |v: &Vec3| v - n * n.dot(v);
    let e2 = [perp(other), perp(chord)]
        .into_iter()
        .find(|v| v.norm() > 1e-6 * (1.0 + chord.norm()))
        .map(|v| v.normalize())
        // every control point is on one line; the completion does not affect the result
        .unwrap_or_else(|| orthonormal_basis(n).0);
    let e3 = n.cross(&e2);
    Matrix3::from_rows(&[n.transpose(), e2.transpose(), e3.transpose()])
}

/// Per-coordinate monotone interpolation of the control points in `frame`, sampled at
/// `samples` equidistant parameters from the second to the fifth control point.
fn ramp_curve(control: &[Vec3; 6], s: &[f64; 6], frame: &Matrix3<f64>, samples: usize) -> Result<Vec<Vec3>> {
    let origin = control[1];
    let local = control.map(|p| frame * (p - origin));
    let coord = |k: usize| Pchip::new(s, &local.map(|p| p[k]));
    let (fx, fy, fz) = (coord(0)?, coord(1)?, coord(2)?);
    let back = frame.transpose();
    let (a, b) = (s[1], s[4]);
    Ok((0..samples)
        .map(|k| {
            let t = a + (b - a) * k as f64 / (samples - 1) as f64;
            origin + back * Vec3::new(fx.eval(t), fy.eval(t), fz.eval(t))
        })
        .collect())
}

/// Central-difference tangent at 1-based sample `j` over a window of `w` samples each side,
/// clamped to the ends.
pub fn tangent_at(center: &Centerline, j: usize, w: usize) -> Result<Vec3> {
    let m = center.points.len();
    if j < 1 || j > m {
        return Err(CenterlineError::IndexOutOfRange { j, m });
    }
    let lo = j.saturating_sub(w).max(1);
    let hi = (j + w).min(m);
    let diff = center.points[hi - 1] - center.points[lo - 1];
    diff.try_normalize(0.0).ok_or(CenterlineError::ZeroTangent { j })
}

impl Centerline {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Total polyline length.
    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}
