//! Shared synthetic fixtures for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use baffle_core::boundary::{BoundaryCurve, Placeholder};
use baffle_core::centerline::Centerline;
use baffle_core::domain::CappedDomain;
use baffle_core::mesh::{LabeledSurfaceMesh, Vec3};

pub const WALL: i32 = 1;
pub const RV_WALL: i32 = 2;
pub const INLET: i32 = 3;
pub const OUTLET: i32 = 4;
pub const PLACEHOLDER: i32 = 5;

/// Tube along x whose cross-section is an upper half-disk of radius `radius(x)`: a
/// semicircular wall and a flat placeholder floor at z = 0, closed by two half-disk caps.
pub struct HalfCylinder {
    pub length: f64,
    pub rings: usize,
    pub arc_segments: usize,
    pub chord_segments: usize,
    pub radius: fn(f64) -> f64,
}

pub struct HalfCylinderCase {
    pub placeholder: Placeholder,
    pub capped: CappedDomain,
    pub boundary: BoundaryCurve,
    pub centerline: Centerline,
}

pub fn unit_radius(_: f64) -> f64 {
    1.0
}

/// Radius 1 with a smooth 30% pinch centred at x = 2.
pub fn pinched_radius(x: f64) -> f64 {
    1.0 - 0.3 * (-((x - 2.0) / 0.4).powi(2)).exp()
}

impl HalfCylinder {
    pub fn new(radius: fn(f64) -> f64) -> Self {
        HalfCylinder {
            length: 4.0,
            rings: 79,
            arc_segments: 48,
            chord_segments: 24,
            radius,
        }
    }

    fn ring_len(&self) -> usize {
        self.arc_segments + self.chord_segments
    }

    fn ring(&self, x: f64) -> Vec<Vec3> {
        let r = (self.radius)(x);
        let mut pts = Vec::with_capacity(self.ring_len());
        for i in 0..=self.arc_segments {
            let t = PI * i as f64 / self.arc_segments as f64;
            pts.push(Vec3::new(x, r * t.cos(), r * t.sin()));
        }
        for i in 1..self.chord_segments {
            pts.push(Vec3::new(x, -r + 2.0 * r * i as f64 / self.chord_segments as f64, 0.0));
        }
        pts
    }

    pub fn x(&self, k: usize) -> f64 {
        self.length * k as f64 / self.rings as f64
    }

    pub fn build(&self, samples: usize) -> HalfCylinderCase {
        let n = self.ring_len();
        let mut vertices = Vec::new();
        for k in 0..=self.rings {
            vertices.extend(self.ring(self.x(k)));
        }
        let id = |k: usize, i: usize| (k * n + i % n) as u32;
        let mut tris = Vec::new();
        let mut labels = Vec::new();
        for k in 0..self.rings {
            for i in 0..n {
                let label = if i < self.arc_segments { WALL } else { PLACEHOLDER };
                tris.push([id(k, i), id(k, i + 1), id(k + 1, i)]);
                tris.push([id(k, i + 1), id(k + 1, i + 1), id(k + 1, i)]);
                labels.extend([label, label]);
            }
        }
        for (k, label, flip) in [(0, INLET, true), (self.rings, OUTLET, false)] {
            let x = self.x(k);
            let center = vertices.len() as u32;
            vertices.push(Vec3::new(x, 0.0, 4.0 * (self.radius)(x) / (3.0 * PI)));
            for i in 0..n {
                let (a, b) = (id(k, i), id(k, i + 1));
                tris.push(if flip { [center, b, a] } else { [center, a, b] });
                labels.push(label);
            }
        }
        let map = [("wall", WALL), ("vsd_cap", INLET), ("aortic_cap", OUTLET), ("placeholder", PLACEHOLDER)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let mesh = LabeledSurfaceMesh::new(vertices.clone(), tris, labels)
            .unwrap()
            .with_label_map(map);

        // stitch line: the +y floor edge, the outlet chord, the -y floor edge, the inlet chord
        let mut rim = Vec::new();
        for k in 0..=self.rings {
            rim.push(vertices[id(k, 0) as usize]);
        }
        for i in (self.arc_segments + 1..n).rev() {
            rim.push(vertices[id(self.rings, i) as usize]);
        }
        for k in (0..=self.rings).rev() {
            rim.push(vertices[id(k, self.arc_segments) as usize]);
        }
        for i in self.arc_segments + 1..n {
            rim.push(vertices[id(0, i) as usize]);
        }
        rim.reverse();
        let boundary = BoundaryCurve {
            n_samples: rim.len(),
            projection_distances: vec![0.0; rim.len()],
            points: rim.clone(),
        };

        let points: Vec<Vec3> = (0..samples)
            .map(|j| {
                let x = self.length * (j as f64 + 0.5) / samples as f64;
                Vec3::new(x, 0.0, 0.4 * (self.radius)(x))
            })
            .collect();
        let centerline = Centerline {
            tangents: vec![Vec3::x(); samples],
            control_points: [points[0]; 6],
            points,
        };
        HalfCylinderCase {
            placeholder: Placeholder {
                mesh: mesh.clone(),
                placeholder_label: PLACEHOLDER,
                rim,
            },
            capped: CappedDomain {
                mesh,
                vsd_cap_label: INLET,
                aortic_cap_label: OUTLET,
                rv_wall_label: RV_WALL,
            },
            boundary,
            centerline,
        }
    }
}

/// Area of a half-disk polygon with `arc` chords on a circle of radius `r`.
pub fn polygonal_half_disk(r: f64, arc: usize) -> f64 {
    0.5 * r * r * arc as f64 * (PI / arc as f64).sin()
}
