//! Procedural test geometry: primitives with known analytic properties and a ventricle-like
//! domain for end-to-end runs.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use crate::mesh::{LabeledSurfaceMesh, Vec3};

/// Outward-oriented icosphere; `subdiv` levels of 4-to-1 refinement (20·4^subdiv faces).
pub fn icosphere(r: f64, subdiv: u32) -> LabeledSurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1., t, 0.),
        (1., t, 0.),
        (-1., -t, 0.),
        (1., -t, 0.),
        (0., -1., t),
        (0., 1., t),
        (0., -1., -t),
        (0., 1., -t),
        (t, 0., -1.),
        (t, 0., 1.),
        (-t, 0., -1.),
        (-t, 0., 1.),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdiv {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let k = (a.min(b), a.max(b));
            *mid.entry(k).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                verts.len() as u32 - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| v * r).collect();
    LabeledSurfaceMesh::uniform(verts, faces, 1).unwrap()
}

/// Torus around the z axis with tube radius `r`; `nu` segments around z, `nv` around the tube.
pub fn torus(big_r: f64, r: f64, nu: usize, nv: usize) -> LabeledSurfaceMesh {
    let mut verts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = 2.0 * PI * i as f64 / nu as f64;
        for j in 0..nv {
            let v = 2.0 * PI * j as f64 / nv as f64;
            let w = big_r + r * v.cos();
            verts.push(Vec3::new(w * u.cos(), w * u.sin(), r * v.sin()));
        }
    }
    let id = |i: usize, j: usize| ((i % nu) * nv + (j % nv)) as u32;
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    LabeledSurfaceMesh::uniform(verts, faces, 1).unwrap()
}

/// Tube of radius `r` along z from 0 to `h`, without end caps. Ring `k` sits at z = k·h/nrings.
pub fn open_cylinder(r: f64, h: f64, nseg: usize, nrings: usize) -> LabeledSurfaceMesh {
    let (verts, faces) = tube(r, h, nseg, nrings);
    LabeledSurfaceMesh::uniform(verts, faces, 1).unwrap()
}

/// Cylinder closed by two flat fans.
pub fn closed_cylinder(r: f64, h: f64, nseg: usize, nrings: usize) -> LabeledSurfaceMesh {
    let (mut verts, mut faces) = tube(r, h, nseg, nrings);
    let bottom = verts.len() as u32;
    verts.push(Vec3::new(0.0, 0.0, 0.0));
    let top = bottom + 1;
    verts.push(Vec3::new(0.0, 0.0, h));
    let ring = |i: usize, k: usize| (k * nseg + i % nseg) as u32;
    for i in 0..nseg {
        faces.push([bottom, ring(i + 1, 0), ring(i, 0)]);
        faces.push([top, ring(i, nrings), ring(i + 1, nrings)]);
    }
    LabeledSurfaceMesh::uniform(verts, faces, 1).unwrap()
}

fn tube(r: f64, h: f64, nseg: usize, nrings: usize) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let mut verts = Vec::with_capacity(nseg * (nrings + 1));
    for k in 0..=nrings {
        let z = h * k as f64 / nrings as f64;
        for i in 0..nseg {
            let t = 2.0 * PI * i as f64 / nseg as f64;
            verts.push(Vec3::new(r * t.cos(), r * t.sin(), z));
        }
    }
    let id = |i: usize, k: usize| (k * nseg + i % nseg) as u32;
    let mut faces = Vec::with_capacity(2 * nseg * nrings);
    for k in 0..nrings {
        for i in 0..nseg {
            let (a, b, c, d) = (id(i, k), id(i + 1, k), id(i + 1, k + 1), id(i, k + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    (verts, faces)
}

/// Cube `[0, side]³` without its top face; each face is an `n`×`n` grid of quads.
pub fn open_box(side: f64, n: usize) -> LabeledSurfaceMesh {
    // (origin, a, b) with a × b the outward normal
    let faces_def = [
        (Vec3::zeros(), Vec3::y(), Vec3::x()),
        (Vec3::zeros(), Vec3::x(), Vec3::z()),
        (Vec3::y(), Vec3::z(), Vec3::x()),
        (Vec3::zeros(), Vec3::z(), Vec3::y()),
        (Vec3::x(), Vec3::y(), Vec3::z()),
    ];
    let mut lookup: HashMap<(i64, i64, i64), u32> = HashMap::new();
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |p: Vec3, verts: &mut Vec<Vec3>| -> u32 {
        let k = (
            (p.x * n as f64).round() as i64,
            (p.y * n as f64).round() as i64,
            (p.z * n as f64).round() as i64,
        );
        *lookup.entry(k).or_insert_with(|| {
            verts.push(p * side);
            verts.len() as u32 - 1
        })
    };
    for (o, a, b) in faces_def {
        let at = |i: usize, j: usize| o + a * (i as f64 / n as f64) + b * (j as f64 / n as f64);
        for i in 0..n {
            for j in 0..n {
                let p00 = vid(at(i, j), &mut verts);
                let p10 = vid(at(i + 1, j), &mut verts);
                let p11 = vid(at(i + 1, j + 1), &mut verts);
                let p01 = vid(at(i, j + 1), &mut verts);
                faces.push([p00, p10, p11]);
                faces.push([p00, p11, p01]);
            }
        }
    }
    LabeledSurfaceMesh::uniform(verts, faces, 1).unwrap()
}

/// Reference target area the ventricle phantom is dimensioned for; other targets scale every
/// length by the square root of the area ratio.
pub const VENTRICLE_REFERENCE_AREA: f64 = 0.849;

/// Shape parameters of the ventricle phantom, in cm at the reference target area.
///
/// The phantom is a closed tube along x: a left-ventricle stub on `[-lv_length, 0]`, the right
/// ventricle on `[0, rv_length]` and an aortic stub beyond. The cross-section at `x` is a
/// half-ellipse of half-width `W` and depth `D` below `z = 0` and one of height `U` above.
/// In the middle of the right ventricle the lower part narrows into a trough while the upper
/// part rises into a dome, so the suture line `z = lid_height` is a closed oval on the RV wall
/// and the flat placeholder lid leaves a tunnel that is too small until it is shaped.
#[derive(Clone, Debug, PartialEq)]
pub struct VentricleParams {
    pub lv_length: f64,
    pub rv_length: f64,
    pub ao_length: f64,
    pub width_in: f64,
    pub width_out: f64,
    pub depth_in: f64,
    pub depth_out: f64,
    pub width_mid: f64,
    pub depth_mid: f64,
    pub dome_end: f64,
    pub dome_mid: f64,
    pub lid_height: f64,
    /// Smoothstep ramp of the dome, measured from each end of the right ventricle.
    pub dome_ramp: (f64, f64),
    /// Smoothstep ramp of the trough, measured from each end of the right ventricle.
    pub trough_ramp: (f64, f64),
    pub segments: usize,
    pub lv_rings: usize,
    pub rv_rings: usize,
    pub ao_rings: usize,
    pub sparse_points: usize,
}

impl Default for VentricleParams {
    fn default() -> Self {
        VentricleParams {
            lv_length: 0.5,
            rv_length: 4.0,
            ao_length: 0.5,
            width_in: 0.8,
            width_out: 0.75,
            depth_in: 0.5,
            depth_out: 0.5,
            width_mid: 0.55,
            depth_mid: 0.28,
            dome_end: 0.3,
            dome_mid: 0.9,
            lid_height: 0.35,
            dome_ramp: (0.3, 1.3),
            trough_ramp: (0.9, 1.7),
            segments: 128,
            lv_rings: 20,
            rv_rings: 160,
            ao_rings: 20,
            sparse_points: 14,
        }
    }
}

fn smoothstep(x: f64, a: f64, b: f64) -> f64 {
    let u = ((x - a) / (b - a)).clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// The generated phantom: the unlabeled blood pool, the three structure meshes that label it,
/// and suture points on the dome.
#[derive(Clone, Debug)]
pub struct VentriclePhantom {
    pub params: VentricleParams,
    /// Length scale applied to `params`.
    pub scale: f64,
    pub combined: LabeledSurfaceMesh,
    pub structures: BTreeMap<String, LabeledSurfaceMesh>,
    pub sparse_points: Vec<Vec3>,
}

impl VentricleParams {
    /// `(W, D, U)` at `x` in unscaled coordinates.
    pub fn profile(&self, x: f64) -> (f64, f64, f64) {
        let l = self.rv_length;
        let t = (x / l).clamp(0.0, 1.0);
        let ramp = |(a, b): (f64, f64)| smoothstep(x, a, b) * (1.0 - smoothstep(x, l - b, l - a));
        let dome = ramp(self.dome_ramp);
        let trough = ramp(self.trough_ramp);
        let w_end = self.width_in + (self.width_out - self.width_in) * t;
        let d_end = self.depth_in + (self.depth_out - self.depth_in) * t;
        (
            w_end + (self.width_mid - w_end) * trough,
            d_end + (self.depth_mid - d_end) * trough,
            self.dome_end + (self.dome_mid - self.dome_end) * dome,
        )
    }

    fn ring_positions(&self) -> Vec<f64> {
        let mut xs = Vec::new();
        for k in 0..self.lv_rings {
            xs.push(-self.lv_length + self.lv_length * k as f64 / self.lv_rings as f64);
        }
        for k in 0..self.rv_rings {
            xs.push(self.rv_length * k as f64 / self.rv_rings as f64);
        }
        for k in 0..=self.ao_rings {
            xs.push(self.rv_length + self.ao_length * k as f64 / self.ao_rings as f64);
        }
        xs
    }

    fn ring_point(&self, x: f64, i: usize) -> Vec3 {
        let (w, d, u) = self.profile(x);
        let th = 2.0 * PI * i as f64 / self.segments as f64;
        let r = if th < PI { u } else { d };
        Vec3::new(x, w * th.cos(), r * th.sin())
    }

    /// Closed tube over rings `k0..=k1` of `xs` with flat fans at both ends.
    fn closed_tube(&self, xs: &[f64], k0: usize, k1: usize, scale: f64) -> LabeledSurfaceMesh {
        let n = self.segments;
        let rings = k1 - k0;
        let mut verts = Vec::with_capacity(n * (rings + 1) + 2);
        for &x in &xs[k0..=k1] {
            for i in 0..n {
                verts.push(self.ring_point(x, i) * scale);
            }
        }
        let id = |i: usize, k: usize| (k * n + i % n) as u32;
        let mut faces = Vec::with_capacity(2 * n * (rings + 1));
        for k in 0..rings {
            for i in 0..n {
                faces.push([id(i, k), id(i + 1, k), id(i + 1, k + 1)]);
                faces.push([id(i, k), id(i + 1, k + 1), id(i, k + 1)]);
            }
        }
        for (k, outward) in [(0, -1.0), (rings, 1.0)] {
            let ring: Vec<Vec3> = (0..n).map(|i| verts[id(i, k) as usize]).collect();
            let center = ring.iter().sum::<Vec3>() / n as f64;
            let c = verts.len() as u32;
            verts.push(center);
            for i in 0..n {
                if outward > 0.0 {
                    faces.push([c, id(i, k), id(i + 1, k)]);
                } else {
                    faces.push([c, id(i + 1, k), id(i, k)]);
                }
            }
        }
        LabeledSurfaceMesh::uniform(verts, faces, 0).unwrap()
    }

    /// Points where the suture plane meets the upper wall, `count` of them equally spaced by
    /// arclength around the oval, unscaled.
    fn suture_points(&self, count: usize) -> Vec<Vec3> {
        let h = self.lid_height;
        let above = |x: f64| self.profile(x).2 - h;
        let mid = 0.5 * self.rv_length;
        let root = |mut lo: f64, mut hi: f64| {
            // `lo` is below the lid, `hi` above
            for _ in 0..200 {
                let m = 0.5 * (lo + hi);
                if above(m) > 0.0 {
                    hi = m;
                } else {
                    lo = m;
                }
            }
            0.5 * (lo + hi)
        };
        let xa = root(0.0, mid);
        let xb = root(self.rv_length, mid);
        let (xc, half) = (0.5 * (xa + xb), 0.5 * (xb - xa));
        let dense = 20_000;
        let oval: Vec<Vec3> = (0..dense)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / dense as f64;
                let x = xc - half * phi.cos();
                let (w, _, u) = self.profile(x);
                let y = w * (1.0 - (h / u).min(1.0).powi(2)).sqrt();
                Vec3::new(x, if phi < PI { -y } else { y }, h)
            })
            .collect();
        let mut cum = vec![0.0];
        for k in 0..dense {
            let d = (oval[(k + 1) % dense] - oval[k]).norm();
            cum.push(cum[k] + d);
        }
        let total = cum[dense];
        (0..count)
            .map(|m| {
                let s = total * (m as f64 + 0.5) / count as f64;
                let k = cum.partition_point(|&c| c <= s) - 1;
                let t = (s - cum[k]) / (cum[k + 1] - cum[k]);
                oval[k] + (oval[(k + 1) % dense] - oval[k]) * t
            })
            .collect()
    }
}

impl VentriclePhantom {
    /// Phantom dimensioned for the reference target area.
    pub fn new(params: VentricleParams) -> Self {
        Self::scaled(params, 1.0)
    }

    /// Phantom whose lengths are scaled so its shaping problem corresponds to `target_area`.
    pub fn for_target_area(params: VentricleParams, target_area: f64) -> Self {
        Self::scaled(params, (target_area / VENTRICLE_REFERENCE_AREA).sqrt())
    }

    fn scaled(params: VentricleParams, scale: f64) -> Self {
        let xs = params.ring_positions();
        let (k_vsd, k_ao) = (params.lv_rings, params.lv_rings + params.rv_rings);
        let last = xs.len() - 1;
        let combined = params.closed_tube(&xs, 0, last, scale);
        let mut structures = BTreeMap::new();
        structures.insert("LV".to_string(), params.closed_tube(&xs, 0, k_vsd, scale));
        structures.insert("RV".to_string(), params.closed_tube(&xs, k_vsd, k_ao, scale));
        structures.insert("ao".to_string(), params.closed_tube(&xs, k_ao, last, scale));
        let sparse_points = params
            .suture_points(params.sparse_points)
            .into_iter()
            .map(|p| p * scale)
            .collect();
        VentriclePhantom {
            params,
            scale,
            combined,
            structures,
            sparse_points,
        }
    }
}
