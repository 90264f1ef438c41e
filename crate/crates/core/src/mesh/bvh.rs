//! Axis-aligned bounding volume hierarchy over mesh triangles.

use super::{geom, LabeledSurfaceMesh, Vec3};

#[derive(Clone, Copy, Debug)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            lo: Vec3::repeat(f64::INFINITY),
            hi: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.lo = self.lo.inf(p);
        self.hi = self.hi.sup(p);
    }

    fn distance_squared(&self, p: &Vec3) -> f64 {
        let d = (self.lo - p).sup(&(p - self.hi)).sup(&Vec3::zeros());
        d.norm_squared()
    }

    fn overlaps(&self, o: &Aabb, pad: f64) -> bool {
        (0..3).all(|k| self.lo[k] - pad <= o.hi[k] && o.lo[k] - pad <= self.hi[k])
    }

    fn ray_entry(&self, origin: &Vec3, inv_dir: &Vec3, max_t: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = max_t;
        for k in 0..3 {
            let a = (self.lo[k] - origin[k]) * inv_dir[k];
            let b = (self.hi[k] - origin[k]) * inv_dir[k];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            if near.is_nan() || far.is_nan() {
                // ray parallel to the slab and the origin lies on a slab plane
                continue;
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 * (1.0 + 1e-12) + 1e-300 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    // leaf: first..first+count into `order`; inner: children at `first` and `first + 1`
    first: u32,
    count: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestHit {
    pub face: usize,
    pub point: Vec3,
    pub barycentric: [f64; 3],
    pub distance: f64,
}

/// Bounding volume hierarchy over the triangles of one mesh. Holds its own copy of the
/// triangle corners so it can outlive edits to the source mesh.
#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
    tris: Vec<[Vec3; 3]>,
}

const LEAF: usize = 4;

impl Bvh {
    pub fn new(mesh: &LabeledSurfaceMesh) -> Self {
        let tris: Vec<[Vec3; 3]> = (0..mesh.face_count()).map(|f| mesh.corners(f)).collect();
        Self::from_triangles(tris)
    }

    pub fn from_triangles(tris: Vec<[Vec3; 3]>) -> Self {
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut nodes = vec![Node {
            bounds: Aabb::empty(),
            first: 0,
            count: tris.len() as u32,
        }];
        let mut stack = vec![(0usize, 0usize, tris.len())];
        while let Some((node, start, end)) = stack.pop() {
            let mut bounds = Aabb::empty();
            let mut cbounds = Aabb::empty();
            for &f in &order[start..end] {
                for p in &tris[f as usize] {
                    bounds.grow(p);
                }
                cbounds.grow(&centroids[f as usize]);
            }
            nodes[node].bounds = bounds;
            if end - start <= LEAF {
                nodes[node].first = start as u32;
                nodes[node].count = (end - start) as u32;
                continue;
            }
            let ext = cbounds.hi - cbounds.lo;
            let axis = if ext.x >= ext.y && ext.x >= ext.z {
                0
            } else if ext.y >= ext.z {
                1
            } else {
                2
            };
            let mid = (start + end) / 2;
            order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                centroids[a as usize][axis]
                    .total_cmp(&centroids[b as usize][axis])
                    .then(a.cmp(&b))
            });
            let left = nodes.len();
            nodes.push(Node {
                bounds: Aabb::empty(),
                first: 0,
                count: 0,
            });
            nodes.push(Node {
                bounds: Aabb::empty(),
                first: 0,
                count: 0,
            });
            nodes[node].first = left as u32;
            nodes[node].count = 0;
            stack.push((left, start, mid));
            stack.push((left + 1, mid, end));
        }
        if tris.is_empty() {
            nodes[0].count = 0;
        }
        Self { nodes, order, tris }
    }

    pub fn triangle(&self, face: usize) -> &[Vec3; 3] {
        &self.tris[face]
    }

    pub fn len(&self) -> usize {
        self.tris.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    fn is_leaf(&self, n: &Node) -> bool {
        n.count > 0 || self.tris.is_empty()
    }

    /// Closest surface point; ties resolve to the lowest face index.
    pub fn closest_point(&self, p: &Vec3) -> Option<ClosestHit> {
        if self.tris.is_empty() {
            return None;
        }
        let mut best: Option<ClosestHit> = None;
        let mut best_d2 = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.distance_squared(p) > best_d2 {
                continue;
            }
            if self.is_leaf(node) {
                for &f in &self.order[node.first as usize..(node.first + node.count) as usize] {
                    let [a, b, c] = &self.tris[f as usize];
                    let (q, bary) = geom::closest_point_on_triangle(p, a, b, c);
                    let d2 = (q - p).norm_squared();
                    let better = d2 < best_d2
                        || (d2 == best_d2 && best.is_some_and(|h| (f as usize) < h.face));
                    if better {
                        best_d2 = d2;
                        best = Some(ClosestHit {
                            face: f as usize,
                            point: q,
                            barycentric: bary,
                            distance: d2.sqrt(),
                        });
                    }
                }
            } else {
                let (l, r) = (node.first as usize, node.first as usize + 1);
                let dl = self.nodes[l].bounds.distance_squared(p);
                let dr = self.nodes[r].bounds.distance_squared(p);
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best
    }

    /// Nearest ray hit within `max_t` (in units of `dir`'s length): `(t, face)`.
    pub fn ray_first_hit(&self, origin: &Vec3, dir: &Vec3, max_t: f64) -> Option<(f64, usize)> {
        if self.tris.is_empty() {
            return None;
        }
        let inv = dir.map(|d| 1.0 / d);
        let mut best: Option<(f64, usize)> = None;
        let mut limit = max_t;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.ray_entry(origin, &inv, limit).is_none() {
                continue;
            }
            if self.is_leaf(node) {
                for &f in &self.order[node.first as usize..(node.first + node.count) as usize] {
                    let [a, b, c] = &self.tris[f as usize];
                    if let Some(t) = geom::ray_triangle(origin, dir, a, b, c) {
                        let better = t < limit
                            || (t == limit && best.is_some_and(|(_, bf)| (f as usize) < bf));
                        if t <= limit && better {
                            limit = t;
                            best = Some((t, f as usize));
                        }
                    }
                }
            } else {
                stack.push(node.first as usize);
                stack.push(node.first as usize + 1);
            }
        }
        best
    }

    /// Faces whose boxes overlap the box of `tri` padded by `pad`.
    pub fn candidates(&self, tri: &[Vec3; 3], pad: f64) -> Vec<usize> {
        let mut q = Aabb::empty();
        for p in tri {
            q.grow(p);
        }
        let mut out = Vec::new();
        if self.tris.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds.overlaps(&q, pad) {
                continue;
            }
            if self.is_leaf(node) {
                for &f in &self.order[node.first as usize..(node.first + node.count) as usize] {
                    let mut b = Aabb::empty();
                    for p in &self.tris[f as usize] {
                        b.grow(p);
                    }
                    if b.overlaps(&q, pad) {
                        out.push(f as usize);
                    }
                }
            } else {
                stack.push(node.first as usize);
                stack.push(node.first as usize + 1);
            }
        }
        out.sort_unstable();
        out
    }

    /// Faces within `radius` of `p`.
    pub fn faces_near(&self, p: &Vec3, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        if self.tris.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.distance_squared(p) > r2 {
                continue;
            }
            if self.is_leaf(node) {
                for &f in &self.order[node.first as usize..(node.first + node.count) as usize] {
                    let [a, b, c] = &self.tris[f as usize];
                    let (q, _) = geom::closest_point_on_triangle(p, a, b, c);
                    if (q - p).norm_squared() <= r2 {
                        out.push(f as usize);
                    }
                }
            } else {
                stack.push(node.first as usize);
                stack.push(node.first as usize + 1);
            }
        }
        out.sort_unstable();
        out
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        let b = self.nodes[0].bounds;
        (b.lo, b.hi)
    }
}
