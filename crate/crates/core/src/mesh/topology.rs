use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::LabeledSurfaceMesh;

/// Undirected edge incidence of a triangle mesh. Edges are numbered in order of first
/// appearance while scanning faces, so iteration order is deterministic.
pub struct EdgeIndex {
    lookup: HashMap<(u32, u32), usize>,
    pub edges: Vec<(u32, u32)>,
    pub faces: Vec<Vec<u32>>,
}

impl EdgeIndex {
    pub fn new(mesh: &LabeledSurfaceMesh) -> Self {
        let mut lookup = HashMap::with_capacity(mesh.face_count() * 3 / 2);
        let mut edges = Vec::new();
        let mut faces: Vec<Vec<u32>> = Vec::new();
        for (f, t) in mesh.triangles().iter().enumerate() {
            for k in 0..3 {
                let key = key(t[k], t[(k + 1) % 3]);
                let e = *lookup.entry(key).or_insert_with(|| {
                    edges.push(key);
                    faces.push(Vec::with_capacity(2));
                    edges.len() - 1
                });
                faces[e].push(f as u32);
            }
        }
        Self { lookup, edges, faces }
    }

    pub fn find(&self, a: u32, b: u32) -> Option<usize> {
        self.lookup.get(&key(a, b)).copied()
    }

    pub fn faces_of(&self, a: u32, b: u32) -> &[u32] {
        self.find(a, b).map(|e| self.faces[e].as_slice()).unwrap_or(&[])
    }

    /// The face across edge `(a, b)` from `face`, when the edge is manifold.
    pub fn opposite(&self, a: u32, b: u32, face: u32) -> Option<u32> {
        let fs = self.faces_of(a, b);
        if fs.len() != 2 {
            return None;
        }
        if fs[0] == face {
            Some(fs[1])
        } else if fs[1] == face {
            Some(fs[0])
        } else {
            None
        }
    }
}

pub fn key(a: u32, b: u32) -> (u32, u32) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub watertight: bool,
    pub boundary_edges: usize,
    pub boundary_loops: usize,
    pub non_manifold_edges: usize,
    pub euler_characteristic: i64,
    pub connected_components: usize,
    pub consistently_oriented: bool,
}

pub fn check_topology(mesh: &LabeledSurfaceMesh) -> TopologyReport {
    let index = EdgeIndex::new(mesh);
    let boundary_edges = index.faces.iter().filter(|f| f.len() == 1).count();
    let non_manifold_edges = index.faces.iter().filter(|f| f.len() > 2).count();
    let mut used = vec![false; mesh.vertices().len()];
    for t in mesh.triangles() {
        for &v in t {
            used[v as usize] = true;
        }
    }
    let v = used.iter().filter(|u| **u).count() as i64;
    let euler = v - index.edges.len() as i64 + mesh.face_count() as i64;

    let mut consistent = true;
    for (e, fs) in index.faces.iter().enumerate() {
        if fs.len() != 2 {
            continue;
        }
        let (a, b) = index.edges[e];
        let d0 = has_directed(mesh.triangles()[fs[0] as usize], a, b);
        let d1 = has_directed(mesh.triangles()[fs[1] as usize], a, b);
        if d0 == d1 {
            consistent = false;
            break;
        }
    }

    TopologyReport {
        watertight: boundary_edges == 0 && non_manifold_edges == 0 && mesh.face_count() > 0,
        boundary_edges,
        boundary_loops: boundary_loops(mesh).len(),
        non_manifold_edges,
        euler_characteristic: euler,
        connected_components: face_components(mesh, &index, |_| false).1,
        consistently_oriented: consistent,
    }
}

pub fn has_directed(t: [u32; 3], a: u32, b: u32) -> bool {
    (0..3).any(|k| t[k] == a && t[(k + 1) % 3] == b)
}

/// Boundary loops as vertex sequences, each traversed in the direction of its face's winding.
pub fn boundary_loops(mesh: &LabeledSurfaceMesh) -> Vec<Vec<u32>> {
    let index = EdgeIndex::new(mesh);
    let mut next: HashMap<u32, Vec<u32>> = HashMap::new();
    let mut starts = Vec::new();
    for (e, fs) in index.faces.iter().enumerate() {
        if fs.len() != 1 {
            continue;
        }
        let (a, b) = index.edges[e];
        let t = mesh.triangles()[fs[0] as usize];
        let (u, v) = if has_directed(t, a, b) { (a, b) } else { (b, a) };
        next.entry(u).or_default().push(v);
        starts.push(u);
    }
    let mut loops = Vec::new();
    for s in starts {
        if next.get(&s).is_none_or(|v| v.is_empty()) {
            continue;
        }
        let mut lp = vec![s];
        let mut cur = s;
        loop {
            let Some(outs) = next.get_mut(&cur) else { break };
            let Some(n) = outs.pop() else { break };
            if n == s {
                break;
            }
            lp.push(n);
            cur = n;
        }
        loops.push(lp);
    }
    loops
}

/// Labels faces by connected component across manifold edges not rejected by `blocked`.
/// Returns per-face component ids (numbered by lowest face) and the component count.
pub fn face_components(
    mesh: &LabeledSurfaceMesh,
    index: &EdgeIndex,
    blocked: impl Fn((u32, u32)) -> bool,
) -> (Vec<usize>, usize) {
    let n = mesh.face_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (e, fs) in index.faces.iter().enumerate() {
        if fs.len() != 2 || blocked(index.edges[e]) {
            continue;
        }
        let (a, b) = (find(&mut parent, fs[0] as usize), find(&mut parent, fs[1] as usize));
        if a != b {
            let (lo, hi) = (a.min(b), a.max(b));
            parent[hi] = lo;
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut root_id: HashMap<usize, usize> = HashMap::new();
    for f in 0..n {
        let r = find(&mut parent, f);
        let next = root_id.len();
        ids[f] = *root_id.entry(r).or_insert(next);
    }
    (ids, root_id.len())
}

/// First pair of faces that intersect without sharing a vertex, testing every face from
/// `first_face` on against the whole mesh. Pairs are reported with the lowest first face.
pub fn find_self_intersection(mesh: &LabeledSurfaceMesh, first_face: usize) -> Option<(usize, usize)> {
    use rayon::prelude::*;
    let bvh = super::Bvh::new(mesh);
    let tris = mesh.triangles();
    (first_face..mesh.face_count()).into_par_iter().find_map_first(|f| {
        let corners = mesh.corners(f);
        bvh.candidates(&corners, 0.0).into_iter().find_map(|g| {
            if g == f || tris[g].iter().any(|v| tris[f].contains(v)) {
                return None;
            }
            super::geom::triangles_intersect(&corners, &mesh.corners(g)).then_some((f, g))
        })
    })
}
