//! Cutting a surface along a closed curve drawn on it.
//!
//! The curve is first embedded into the mesh: every curve point becomes a mesh vertex
//! (splitting the face or edge it lands on), then consecutive points are joined by tracing
//! the intersection of the surface with the plane that contains both points and their mean
//! normal. Edge crossings of that trace become new vertices and the crossed faces are
//! re-triangulated so the whole curve runs along mesh edges. Flood filling faces without
//! crossing curve edges then yields the two sides.

use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use super::topology::{face_components, has_directed, key, EdgeIndex};
use super::{
    geom, orthonormal_basis, polygon, Bvh, ClosedPolyline3D, LabeledSurfaceMesh, MeshError,
    Result, Vec2, Vec3,
};

/// Both sides of a cut plus the embedded cut path.
#[derive(Clone, Debug)]
pub struct ClipOutcome {
    /// Side to the left of the curve direction (seen from the outward normal).
    pub part_a: LabeledSurfaceMesh,
    pub part_b: LabeledSurfaceMesh,
    /// The embedded curve: input points plus the edge crossings inserted between them.
    pub cut: ClosedPolyline3D,
    /// Input points that were moved onto the surface.
    pub reprojected: usize,
    /// Input points farther from the surface than the curve-on-mesh tolerance.
    pub beyond_tolerance: usize,
    pub max_projection_distance: f64,
}

/// Points closer to the surface than this (cm) are embedded with their exact coordinates.
const ON_SURFACE: f64 = 1e-9;
/// Trace crossings this close to an edge end (as an edge fraction) go through the vertex.
const EDGE_SNAP: f64 = 1e-6;

pub fn clip_along_curve(
    mesh: &LabeledSurfaceMesh,
    curve: &ClosedPolyline3D,
) -> Result<(LabeledSurfaceMesh, LabeledSurfaceMesh)> {
    let out = clip_along_curve_detailed(mesh, curve)?;
    Ok((out.part_a, out.part_b))
}

pub fn clip_along_curve_detailed(
    mesh: &LabeledSurfaceMesh,
    curve: &ClosedPolyline3D,
) -> Result<ClipOutcome> {
    if mesh.face_count() == 0 {
        return Err(MeshError::Invalid("empty mesh".into()));
    }
    let median_edge = mesh.median_edge_length();
    let tolerance = 0.5 * median_edge;
    let snap = 1e-4 * median_edge;
    let bvh = Bvh::new(mesh);
    let mut work = Work::new(mesh);

    let mut reprojected = 0;
    let mut beyond = 0;
    let mut max_dist = 0.0f64;
    let mut curve_ids: Vec<u32> = Vec::with_capacity(curve.len());
    for p in curve.points() {
        let hit = bvh
            .closest_point(p)
            .ok_or_else(|| MeshError::Invalid("empty mesh".into()))?;
        max_dist = max_dist.max(hit.distance);
        let q = if hit.distance > ON_SURFACE {
            reprojected += 1;
            if hit.distance > tolerance {
                beyond += 1;
            }
            hit.point
        } else {
            *p
        };
        let id = work.insert_point(&q, hit.face as u32, snap)?;
        if curve_ids.last() != Some(&id) {
            curve_ids.push(id);
        }
    }
    while curve_ids.len() > 1 && curve_ids.first() == curve_ids.last() {
        curve_ids.pop();
    }
    if beyond > 0 {
        log::warn!("{beyond} curve point(s) were farther than {tolerance:.3e} cm from the surface and were re-projected");
    }
    {
        let mut seen = HashSet::new();
        for &id in &curve_ids {
            if !seen.insert(id) {
                return Err(MeshError::CurveEmbedding(
                    "curve passes through the same surface point twice".into(),
                ));
            }
        }
    }
    if curve_ids.len() < 3 {
        return Err(MeshError::CurveEmbedding(
            "fewer than three distinct curve points on the surface".into(),
        ));
    }

    let tracer = Tracer::new(&work);
    let mut steps: Vec<Step> = Vec::new();
    for i in 0..curve_ids.len() {
        let from = curve_ids[i];
        let to = curve_ids[(i + 1) % curve_ids.len()];
        steps.extend(tracer.trace(from, to)?);
    }
    let start = PathPoint::Vertex(curve_ids[0]);
    let rebuilt = work.embed(start, &steps)?;

    let index = EdgeIndex::new(&rebuilt.mesh);
    let cut: HashSet<(u32, u32)> = rebuilt
        .path
        .iter()
        .zip(rebuilt.path.iter().cycle().skip(1))
        .map(|(&a, &b)| key(a, b))
        .collect();
    for &(a, b) in &cut {
        if index.find(a, b).is_none() {
            return Err(MeshError::CurveEmbedding(
                "embedded curve crosses itself".into(),
            ));
        }
    }
    let (component, count) = face_components(&rebuilt.mesh, &index, |e| cut.contains(&e));
    if count != 2 {
        return Err(MeshError::NonSeparatingCurve { components: count });
    }
    let (p0, p1) = (rebuilt.path[0], rebuilt.path[1]);
    let left = index
        .faces_of(p0, p1)
        .iter()
        .copied()
        .find(|&f| has_directed(rebuilt.mesh.triangles()[f as usize], p0, p1))
        .ok_or_else(|| MeshError::CurveEmbedding("cut edge without an oriented face".into()))?;
    let side_a = component[left as usize];
    let part_a = rebuilt.mesh.filter_faces(|f| component[f] == side_a);
    let part_b = rebuilt.mesh.filter_faces(|f| component[f] != side_a);
    let cut_line = ClosedPolyline3D::new(
        rebuilt
            .path
            .iter()
            .map(|&v| rebuilt.mesh.vertex(v))
            .collect(),
    )?;
    Ok(ClipOutcome {
        part_a,
        part_b,
        cut: cut_line,
        reprojected,
        beyond_tolerance: beyond,
        max_projection_distance: max_dist,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum PathPoint {
    Vertex(u32),
    /// Crossing of edge `(a, b)` with `a < b` at fraction `t` from `a`.
    Cross { a: u32, b: u32, t: f64 },
}

#[derive(Clone, Copy, Debug)]
struct Step {
    point: PathPoint,
    /// Face containing the segment from the previous point, `None` when the segment runs
    /// along an existing edge.
    face: Option<u32>,
}

/// Mutable triangle soup with edge adjacency, used while inserting curve points.
struct Work {
    verts: Vec<Vec3>,
    tris: Vec<[u32; 3]>,
    labels: Vec<i32>,
    alive: Vec<bool>,
    origin: Vec<u32>,
    descendants: Vec<Vec<u32>>,
    edge_faces: HashMap<(u32, u32), Vec<u32>>,
    curve_vertex: HashSet<u32>,
    label_map: BTreeMap<String, i32>,
}

impl Work {
    fn new(mesh: &LabeledSurfaceMesh) -> Self {
        let mut w = Self {
            verts: mesh.vertices().to_vec(),
            tris: Vec::with_capacity(mesh.face_count() + 64),
            labels: Vec::with_capacity(mesh.face_count() + 64),
            alive: Vec::new(),
            origin: Vec::new(),
            descendants: vec![Vec::new(); mesh.face_count()],
            edge_faces: HashMap::with_capacity(mesh.face_count() * 2),
            curve_vertex: HashSet::new(),
            label_map: mesh.label_map().clone(),
        };
        for (f, t) in mesh.triangles().iter().enumerate() {
            w.add_face(*t, mesh.labels()[f], f as u32);
        }
        w
    }

    fn add_face(&mut self, t: [u32; 3], label: i32, origin: u32) -> u32 {
        let id = self.tris.len() as u32;
        self.tris.push(t);
        self.labels.push(label);
        self.alive.push(true);
        self.origin.push(origin);
        self.descendants[origin as usize].push(id);
        for k in 0..3 {
            self.edge_faces
                .entry(key(t[k], t[(k + 1) % 3]))
                .or_default()
                .push(id);
        }
        id
    }

    fn remove_face(&mut self, f: u32) {
        self.alive[f as usize] = false;
        let t = self.tris[f as usize];
        for k in 0..3 {
            if let Some(v) = self.edge_faces.get_mut(&key(t[k], t[(k + 1) % 3])) {
                v.retain(|&x| x != f);
            }
        }
        let o = self.origin[f as usize] as usize;
        self.descendants[o].retain(|&x| x != f);
    }

    fn corners(&self, f: u32) -> [Vec3; 3] {
        self.tris[f as usize].map(|v| self.verts[v as usize])
    }

    /// Makes `p` a mesh vertex and returns its id.
    fn insert_point(&mut self, p: &Vec3, original_face: u32, snap: f64) -> Result<u32> {
        let mut best: Option<(f64, u32)> = None;
        for &f in &self.descendants[original_face as usize] {
            let [a, b, c] = self.corners(f);
            let (q, _) = geom::closest_point_on_triangle(p, &a, &b, &c);
            let d = (q - p).norm();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, f));
            }
        }
        let (_, f) = best.ok_or_else(|| MeshError::CurveEmbedding("lost track of a face".into()))?;
        let t = self.tris[f as usize];
        // near a corner: move the corner onto the curve point
        let (corner_d, corner) = t
            .iter()
            .map(|&v| ((self.verts[v as usize] - p).norm(), v))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        if corner_d <= snap {
            if !self.curve_vertex.contains(&corner) {
                self.verts[corner as usize] = *p;
                self.curve_vertex.insert(corner);
            }
            return Ok(corner);
        }
        let id = self.verts.len() as u32;
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let d = geom::point_segment_distance(p, &self.verts[a as usize], &self.verts[b as usize]);
            if d <= snap {
                self.verts.push(*p);
                self.curve_vertex.insert(id);
                let faces = self.edge_faces.get(&key(a, b)).cloned().unwrap_or_default();
                for g in faces {
                    let tg = self.tris[g as usize];
                    let label = self.labels[g as usize];
                    let origin = self.origin[g as usize];
                    let j = (0..3)
                        .find(|&j| key(tg[j], tg[(j + 1) % 3]) == key(a, b))
                        .unwrap();
                    let (u, v, w) = (tg[j], tg[(j + 1) % 3], tg[(j + 2) % 3]);
                    self.remove_face(g);
                    self.add_face([u, id, w], label, origin);
                    self.add_face([id, v, w], label, origin);
                }
                return Ok(id);
            }
        }
        self.verts.push(*p);
        self.curve_vertex.insert(id);
        let label = self.labels[f as usize];
        let origin = self.origin[f as usize];
        self.remove_face(f);
        self.add_face([t[0], t[1], id], label, origin);
        self.add_face([t[1], t[2], id], label, origin);
        self.add_face([t[2], t[0], id], label, origin);
        Ok(id)
    }

    fn opposite(&self, a: u32, b: u32, f: u32) -> Option<u32> {
        let fs = self.edge_faces.get(&key(a, b))?;
        if fs.len() != 2 {
            return None;
        }
        if fs[0] == f {
            Some(fs[1])
        } else if fs[1] == f {
            Some(fs[0])
        } else {
            None
        }
    }

    /// Inserts the traced crossings, re-triangulates crossed faces and returns the rebuilt
    /// mesh with the closed vertex path of the curve.
    fn embed(&self, start: PathPoint, steps: &[Step]) -> Result<Rebuilt> {
        let mut verts = self.verts.clone();
        let mut path: Vec<u32> = Vec::with_capacity(steps.len());
        let mut edge_points: HashMap<(u32, u32), Vec<(f64, u32)>> = HashMap::new();
        let mut chords: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
        let PathPoint::Vertex(first) = start else { unreachable!() };
        path.push(first);
        let mut prev = first;
        for (k, s) in steps.iter().enumerate() {
            let id = match s.point {
                PathPoint::Vertex(v) => v,
                PathPoint::Cross { a, b, t } => {
                    let pa = verts[a as usize];
                    let pb = verts[b as usize];
                    let id = verts.len() as u32;
                    verts.push(pa + (pb - pa) * t);
                    edge_points.entry((a, b)).or_default().push((t, id));
                    id
                }
            };
            if let Some(f) = s.face {
                chords.entry(f).or_default().push((prev, id));
            }
            if k + 1 < steps.len() {
                path.push(id);
            } else if id != first {
                return Err(MeshError::CurveEmbedding("trace did not close".into()));
            }
            prev = id;
        }
        for pts in edge_points.values_mut() {
            pts.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        }

        let mut touched: Vec<u32> = chords.keys().copied().collect();
        for &(a, b) in edge_points.keys() {
            if let Some(fs) = self.edge_faces.get(&(a, b)) {
                touched.extend(fs.iter().copied());
            }
        }
        touched.sort_unstable();
        touched.dedup();
        let touched_set: HashSet<u32> = touched.iter().copied().collect();

        let mut tris = Vec::with_capacity(self.tris.len() + 4 * touched.len());
        let mut labels = Vec::with_capacity(tris.capacity());
        for f in 0..self.tris.len() as u32 {
            if !self.alive[f as usize] {
                continue;
            }
            if !touched_set.contains(&f) {
                tris.push(self.tris[f as usize]);
                labels.push(self.labels[f as usize]);
                continue;
            }
            let t = self.tris[f as usize];
            let mut poly: Vec<u32> = Vec::new();
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                poly.push(a);
                if let Some(pts) = edge_points.get(&key(a, b)) {
                    if a < b {
                        poly.extend(pts.iter().map(|p| p.1));
                    } else {
                        poly.extend(pts.iter().rev().map(|p| p.1));
                    }
                }
            }
            let pieces = split_polygon(poly, chords.get(&f).map(|c| c.as_slice()).unwrap_or(&[]))?;
            let [ca, cb, cc] = t.map(|v| verts[v as usize]);
            let n = (cb - ca).cross(&(cc - ca));
            let (u, v) = if n.norm() > 0.0 {
                orthonormal_basis(&n.normalize())
            } else {
                (Vec3::x(), Vec3::y())
            };
            for piece in pieces {
                if piece.len() == 3 {
                    tris.push([piece[0], piece[1], piece[2]]);
                    labels.push(self.labels[f as usize]);
                    continue;
                }
                let pts: Vec<Vec2> = piece
                    .iter()
                    .map(|&i| {
                        let d = verts[i as usize] - ca;
                        Vec2::new(d.dot(&u), d.dot(&v))
                    })
                    .collect();
                for e in polygon::ear_clip(&pts) {
                    tris.push(e.map(|i| piece[i]));
                    labels.push(self.labels[f as usize]);
                }
            }
        }
        let mesh = LabeledSurfaceMesh::new(verts, tris, labels)?.with_label_map(self.label_map.clone());
        Ok(Rebuilt { mesh, path })
    }
}

struct Rebuilt {
    mesh: LabeledSurfaceMesh,
    path: Vec<u32>,
}

fn split_polygon(poly: Vec<u32>, chords: &[(u32, u32)]) -> Result<Vec<Vec<u32>>> {
    let mut polys = vec![poly];
    for &(u, v) in chords {
        if u == v {
            continue;
        }
        let mut placed = false;
        for pi in 0..polys.len() {
            let p = &polys[pi];
            let (Some(i), Some(j)) = (p.iter().position(|&x| x == u), p.iter().position(|&x| x == v))
            else {
                continue;
            };
            let (i, j) = (i.min(j), i.max(j));
            if j == i + 1 || (i == 0 && j == p.len() - 1) {
                placed = true;
                break;
            }
            let first: Vec<u32> = p[i..=j].to_vec();
            let mut second: Vec<u32> = p[j..].to_vec();
            second.extend_from_slice(&p[..=i]);
            polys[pi] = first;
            polys.push(second);
            placed = true;
            break;
        }
        if !placed {
            return Err(MeshError::CurveEmbedding(
                "curve segment does not connect two points of one face".into(),
            ));
        }
    }
    Ok(polys)
}

/// Plane-walk tracing between mesh vertices on a fixed (post-insertion) mesh.
struct Tracer<'a> {
    work: &'a Work,
    vertex_faces: Vec<Vec<u32>>,
    normals: Vec<Vec3>,
}

impl<'a> Tracer<'a> {
    fn new(work: &'a Work) -> Self {
        let mut vertex_faces = vec![Vec::new(); work.verts.len()];
        let mut normals = vec![Vec3::zeros(); work.verts.len()];
        for (f, t) in work.tris.iter().enumerate() {
            if !work.alive[f] {
                continue;
            }
            let [a, b, c] = work.corners(f as u32);
            let n = (b - a).cross(&(c - a));
            for &v in t {
                vertex_faces[v as usize].push(f as u32);
                normals[v as usize] += n;
            }
        }
        Self {
            work,
            vertex_faces,
            normals,
        }
    }

    fn pos(&self, v: u32) -> Vec3 {
        self.work.verts[v as usize]
    }

    fn adjacent(&self, a: u32, b: u32) -> bool {
        self.work
            .edge_faces
            .get(&key(a, b))
            .is_some_and(|f| !f.is_empty())
    }

    fn trace(&self, from: u32, to: u32) -> Result<Vec<Step>> {
        if self.adjacent(from, to) {
            return Ok(vec![Step {
                point: PathPoint::Vertex(to),
                face: None,
            }]);
        }
        match self.walk(from, to) {
            Some(steps) => Ok(steps),
            None => self.edge_path(from, to),
        }
    }

    fn walk(&self, from: u32, to: u32) -> Option<Vec<Step>> {
        let xa = self.pos(from);
        let xb = self.pos(to);
        let d = xb - xa;
        let dd = d.norm_squared();
        let n = self.normals[from as usize] + self.normals[to as usize];
        let m = d.cross(&n);
        let mlen = m.norm();
        if !(mlen > 1e-12 * d.norm() * n.norm()) {
            return None;
        }
        let m = m / mlen;
        let sd = |v: u32| m.dot(&(self.pos(v) - xa));
        let side = |v: u32| sd(v) >= 0.0;
        let g = |x: &Vec3| d.dot(&(x - xa));
        let cross_at = |a: u32, b: u32| -> (f64, Vec3) {
            let (sa, sb) = (sd(a), sd(b));
            let t = sa / (sa - sb);
            (t, self.pos(a) + (self.pos(b) - self.pos(a)) * t)
        };

        let mut steps = Vec::new();
        let mut visited: HashSet<u32> = HashSet::new();
        visited.insert(from);
        enum Cur {
            At(u32),
            Entered { face: u32, a: u32, b: u32 },
        }
        let mut cur = Cur::At(from);
        let limit = 4 * self.work.tris.len() + 16;
        for _ in 0..limit {
            match cur {
                Cur::At(w) => {
                    if self.adjacent(w, to) {
                        steps.push(Step {
                            point: PathPoint::Vertex(to),
                            face: None,
                        });
                        return Some(steps);
                    }
                    let gw = g(&self.pos(w));
                    let mut best: Option<(f64, u32, u32, u32, f64)> = None;
                    for &f in &self.vertex_faces[w as usize] {
                        let t = self.work.tris[f as usize];
                        let k = t.iter().position(|&x| x == w).unwrap();
                        let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                        if side(a) == side(b) {
                            continue;
                        }
                        let (s, x) = cross_at(a, b);
                        let gx = g(&x);
                        if gx > gw && best.is_none_or(|bb| gx > bb.0) {
                            best = Some((gx, f, a, b, s));
                        }
                    }
                    let (_, f, a, b, s) = best?;
                    match self.snap_or_cross(a, b, s) {
                        Snapped(v) => {
                            if !visited.insert(v) {
                                return None;
                            }
                            steps.push(Step {
                                point: PathPoint::Vertex(v),
                                face: None,
                            });
                            if v == to {
                                return Some(steps);
                            }
                            cur = Cur::At(v);
                        }
                        Crossing(p) => {
                            steps.push(Step {
                                point: p,
                                face: Some(f),
                            });
                            cur = Cur::Entered {
                                face: self.work.opposite(a, b, f)?,
                                a,
                                b,
                            };
                        }
                    }
                }
                Cur::Entered { face, a, b } => {
                    let t = self.work.tris[face as usize];
                    let c = *t.iter().find(|&&x| x != a && x != b)?;
                    if c == to {
                        steps.push(Step {
                            point: PathPoint::Vertex(to),
                            face: Some(face),
                        });
                        return Some(steps);
                    }
                    if a == to || b == to {
                        steps.push(Step {
                            point: PathPoint::Vertex(to),
                            face: None,
                        });
                        return Some(steps);
                    }
                    let (u, v) = if side(c) != side(a) { (c, a) } else { (b, c) };
                    let (s, x) = cross_at(u, v);
                    if g(&x) > 2.0 * dd + 1e-30 {
                        // walked past the target without meeting it
                        return None;
                    }
                    match self.snap_or_cross(u, v, s) {
                        Snapped(w) => {
                            if !visited.insert(w) && w != to {
                                return None;
                            }
                            let along_entry = w == a || w == b;
                            steps.push(Step {
                                point: PathPoint::Vertex(w),
                                face: if along_entry { None } else { Some(face) },
                            });
                            if w == to {
                                return Some(steps);
                            }
                            cur = Cur::At(w);
                        }
                        Crossing(p) => {
                            steps.push(Step {
                                point: p,
                                face: Some(face),
                            });
                            cur = Cur::Entered {
                                face: self.work.opposite(u, v, face)?,
                                a: u,
                                b: v,
                            };
                        }
                    }
                }
            }
        }
        None
    }

    fn snap_or_cross(&self, a: u32, b: u32, t: f64) -> Snap {
        if t <= EDGE_SNAP {
            Snapped(a)
        } else if t >= 1.0 - EDGE_SNAP {
            Snapped(b)
        } else if a < b {
            Crossing(PathPoint::Cross { a, b, t })
        } else {
            Crossing(PathPoint::Cross {
                a: b,
                b: a,
                t: 1.0 - t,
            })
        }
    }

    /// Shortest edge path; used when the plane walk cannot reach the target.
    fn edge_path(&self, from: u32, to: u32) -> Result<Vec<Step>> {
        #[derive(PartialEq)]
        struct Item(f64, u32);
        impl Eq for Item {}
        impl PartialOrd for Item {
            fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(o))
            }
        }
        impl Ord for Item {
            fn cmp(&self, o: &Self) -> std::cmp::Ordering {
                o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
            }
        }
        let mut dist: HashMap<u32, f64> = HashMap::new();
        let mut prev: HashMap<u32, u32> = HashMap::new();
        let mut heap = BinaryHeap::new();
        dist.insert(from, 0.0);
        heap.push(Item(0.0, from));
        while let Some(Item(dcur, u)) = heap.pop() {
            if u == to {
                break;
            }
            if dist.get(&u).is_some_and(|&x| dcur > x) {
                continue;
            }
            let mut nbrs: Vec<u32> = self.vertex_faces[u as usize]
                .iter()
                .flat_map(|&f| self.work.tris[f as usize])
                .filter(|&x| x != u)
                .collect();
            nbrs.sort_unstable();
            nbrs.dedup();
            for v in nbrs {
                // never route through other curve points
                if v != to && self.work.curve_vertex.contains(&v) {
                    continue;
                }
                let nd = dcur + (self.pos(v) - self.pos(u)).norm();
                if dist.get(&v).is_none_or(|&x| nd < x) {
                    dist.insert(v, nd);
                    prev.insert(v, u);
                    heap.push(Item(nd, v));
                }
            }
        }
        if !prev.contains_key(&to) {
            return Err(MeshError::CurveEmbedding(
                "consecutive curve points lie on disconnected surface pieces".into(),
            ));
        }
        let mut chain = vec![to];
        let mut cur = to;
        while let Some(&p) = prev.get(&cur) {
            if p == from {
                break;
            }
            chain.push(p);
            cur = p;
        }
        chain.reverse();
        Ok(chain
            .into_iter()
            .map(|v| Step {
                point: PathPoint::Vertex(v),
                face: None,
            })
            .collect())
    }
}

enum Snap {
    Snapped(u32),
    Crossing(PathPoint),
}
use Snap::{Crossing, Snapped};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{check_topology, Plane};
    use crate::phantom;
    use std::f64::consts::PI;

    fn circle(center: Vec3, r: f64, n: usize, z_axis: bool) -> ClosedPolyline3D {
        let pts = (0..n)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5) / n as f64;
                if z_axis {
                    center + Vec3::new(r * t.cos(), r * t.sin(), 0.0)
                } else {
                    center + Vec3::new(r * t.cos(), 0.0, r * t.sin())
                }
            })
            .collect();
        ClosedPolyline3D::new(pts).unwrap()
    }

    #[test]
    fn sphere_equator_gives_two_hemispheres() {
        let m = phantom::icosphere(1.0, 4);
        let out = clip_along_curve_detailed(&m, &circle(Vec3::zeros(), 1.0, 200, true)).unwrap();
        for part in [&out.part_a, &out.part_b] {
            let r = check_topology(part);
            assert_eq!(r.boundary_loops, 1);
            assert_eq!(r.non_manifold_edges, 0);
            assert!(r.consistently_oriented);
        }
        let (a, b) = (out.part_a.total_area(), out.part_b.total_area());
        assert!((a - b).abs() / (a + b) < 0.01);
        assert!((a + b - m.total_area()).abs() < 1e-9);
        // seen from outside, counter-clockwise about +z keeps the north cap on the left
        assert!(out.part_a.face_centroid(0).z > 0.0);
    }

    #[test]
    fn polar_cap_area_ratio() {
        let m = phantom::icosphere(1.0, 5);
        let h = 0.3;
        let r = (1.0f64 - (1.0 - h) * (1.0 - h)).sqrt();
        let loop_ = circle(Vec3::new(0., 0., 1.0 - h), r, 150, true);
        let (a, b) = clip_along_curve(&m, &loop_).unwrap();
        let ratio = a.total_area() / b.total_area();
        let exact = (2.0 * PI * h) / (4.0 * PI - 2.0 * PI * h);
        assert!((ratio - exact).abs() / exact < 0.02, "{ratio} vs {exact}");
        // face labels are only duplicated by splitting
        assert!(a.labels().iter().chain(b.labels()).all(|&l| l == 1));
    }

    #[test]
    fn loop_on_one_of_two_components_fails() {
        let s1 = phantom::icosphere(1.0, 3);
        let s2 = s1.translated(Vec3::new(5.0, 0.0, 0.0));
        let m = s1.merged(&s2);
        let err = clip_along_curve(&m, &circle(Vec3::zeros(), 1.0, 60, true)).unwrap_err();
        assert!(matches!(err, MeshError::NonSeparatingCurve { components: 3 }), "{err}");
    }

    #[test]
    fn curve_points_are_kept_exactly() {
        let m = phantom::icosphere(1.0, 4);
        let bvh = Bvh::new(&m);
        let raw = circle(Vec3::new(0.0, 0.0, 0.2), 0.97, 300, true);
        let on: Vec<Vec3> = raw
            .points()
            .iter()
            .map(|p| bvh.closest_point(p).unwrap().point)
            .collect();
        let out = clip_along_curve_detailed(&m, &ClosedPolyline3D::new(on.clone()).unwrap()).unwrap();
        assert_eq!(out.reprojected, 0);
        for p in &on {
            assert!(out.cut.points().contains(p));
            assert!(out.part_a.vertices().contains(p));
            assert!(out.part_b.vertices().contains(p));
        }
    }

    #[test]
    fn clip_then_cap_conserves_volume() {
        let m = phantom::icosphere(1.0, 5);
        let v0 = m.signed_volume();
        let tilt = Plane::new(Vec3::new(0.0, 0.1, 0.25), Vec3::new(0.2, -0.3, 1.0)).unwrap();
        let (u, v) = tilt.basis();
        let pts: Vec<Vec3> = (0..240)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 240.0;
                tilt.point + (u * t.cos() + v * t.sin()) * 0.9
            })
            .collect();
        let bvh = Bvh::new(&m);
        let on: Vec<Vec3> = pts.iter().map(|p| {
            // push radially onto the sphere, then onto the mesh
            bvh.closest_point(&(p.normalize())).unwrap().point
        }).collect();
        let out = clip_along_curve_detailed(&m, &ClosedPolyline3D::new(on).unwrap()).unwrap();
        let a = crate::mesh::cap_opening(&out.part_a, &out.cut, 10).unwrap();
        let b = crate::mesh::cap_opening(&out.part_b, &out.cut, 10).unwrap();
        assert!(check_topology(&a).watertight);
        assert!(check_topology(&b).watertight);
        let total = a.signed_volume() + b.signed_volume();
        assert!((total - v0).abs() / v0 < 0.005, "{total} vs {v0}");
    }
}
