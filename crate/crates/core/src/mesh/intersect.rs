use std::collections::HashMap;

use super::topology::key;
use super::{ClosedPolyline3D, LabeledSurfaceMesh, Plane, Vec3};

/// One closed plane/mesh contour. `faces[i]` is the triangle that carries the segment from
/// `points[i]` to `points[i + 1]`.
#[derive(Clone, Debug)]
pub struct SectionContour {
    pub points: Vec<Vec3>,
    pub faces: Vec<u32>,
}

impl SectionContour {
    pub fn polyline(&self) -> Option<ClosedPolyline3D> {
        ClosedPolyline3D::new(self.points.clone()).ok()
    }

    /// Signed area in the plane's 2D frame.
    pub fn signed_area(&self, plane: &Plane) -> f64 {
        let pts: Vec<_> = self.points.iter().map(|p| plane.to_2d(p)).collect();
        super::polygon::signed_area(&pts)
    }
}

#[derive(Clone, Debug, Default)]
pub struct PlaneIntersection {
    pub loops: Vec<SectionContour>,
    /// Chains that did not close (non-manifold or open input); they are dropped.
    pub open_chains: usize,
}

/// Closed contours where `plane` cuts the mesh. Vertices exactly on the plane count as lying
/// on its positive side, so every crossing sits strictly inside an edge's closed span and
/// contours never branch. Loops are oriented counter-clockwise about the plane normal when
/// the mesh is outward oriented (holes come out clockwise).
pub fn plane_intersection_detailed(mesh: &LabeledSurfaceMesh, plane: &Plane) -> PlaneIntersection {
    let sd: Vec<f64> = mesh.vertices().iter().map(|v| plane.signed_distance(v)).collect();
    let above: Vec<bool> = sd.iter().map(|d| *d >= 0.0).collect();

    let mut node_of: HashMap<(u32, u32), usize> = HashMap::new();
    let mut node_pos: Vec<Vec3> = Vec::new();
    // directed segment node -> (node, face)
    let mut next: Vec<Option<(usize, u32)>> = Vec::new();
    let mut has_prev: Vec<bool> = Vec::new();
    let mut branching = false;

    let mut node = |a: u32, b: u32, node_pos: &mut Vec<Vec3>, next: &mut Vec<Option<(usize, u32)>>, has_prev: &mut Vec<bool>| -> usize {
        let k = key(a, b);
        *node_of.entry(k).or_insert_with(|| {
            let (lo, hi) = k;
            let (dl, dh) = (sd[lo as usize], sd[hi as usize]);
            let t = dl / (dl - dh);
            let pl = mesh.vertex(lo);
            let ph = mesh.vertex(hi);
            let p = pl + (ph - pl) * t;
            node_pos.push(plane.project(&p));
            next.push(None);
            has_prev.push(false);
            node_pos.len() - 1
        })
    };

    for (f, t) in mesh.triangles().iter().enumerate() {
        let s = t.map(|v| above[v as usize]);
        if s[0] == s[1] && s[1] == s[2] {
            continue;
        }
        // the edge leaving the positive side and the edge entering it, in winding order
        let mut down = None;
        let mut up = None;
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            match (s[k], s[(k + 1) % 3]) {
                (true, false) => down = Some((a, b)),
                (false, true) => up = Some((a, b)),
                _ => {}
            }
        }
        let (Some(d), Some(u)) = (down, up) else { continue };
        let nu = node(u.0, u.1, &mut node_pos, &mut next, &mut has_prev);
        let nd = node(d.0, d.1, &mut node_pos, &mut next, &mut has_prev);
        // walking from the descending crossing to the ascending one keeps the solid on the left
        if next[nd].is_some() || has_prev[nu] {
            branching = true;
            continue;
        }
        next[nd] = Some((nu, f as u32));
        has_prev[nu] = true;
    }

    let mut visited = vec![false; node_pos.len()];
    let mut out = PlaneIntersection::default();
    if branching {
        out.open_chains += 1;
    }
    for start in 0..node_pos.len() {
        if visited[start] {
            continue;
        }
        let mut pts = Vec::new();
        let mut faces = Vec::new();
        let mut cur = start;
        let closed = loop {
            visited[cur] = true;
            pts.push(node_pos[cur]);
            match next[cur] {
                Some((n, f)) => {
                    faces.push(f);
                    if n == start {
                        break true;
                    }
                    if visited[n] {
                        break false;
                    }
                    cur = n;
                }
                None => break false,
            }
        };
        if !closed {
            out.open_chains += 1;
            continue;
        }
        // merge coincident consecutive points (crossings landing on an on-plane vertex)
        let mut mp: Vec<Vec3> = Vec::with_capacity(pts.len());
        let mut mf: Vec<u32> = Vec::with_capacity(pts.len());
        for (p, f) in pts.into_iter().zip(faces) {
            if mp.last() == Some(&p) {
                *mf.last_mut().unwrap() = f;
            } else {
                mp.push(p);
                mf.push(f);
            }
        }
        while mp.len() > 1 && mp.first() == mp.last() {
            mp.pop();
            let f = mf.pop().unwrap();
            let _ = f;
        }
        if mp.len() >= 3 {
            out.loops.push(SectionContour { points: mp, faces: mf });
        }
    }
    out
}

pub fn plane_intersection(mesh: &LabeledSurfaceMesh, plane: &Plane) -> Vec<ClosedPolyline3D> {
    let res = plane_intersection_detailed(mesh, plane);
    if res.open_chains > 0 {
        log::warn!("plane intersection discarded {} open chain(s)", res.open_chains);
    }
    res.loops.iter().filter_map(|l| l.polyline()).collect()
}
