//! Constrained Delaunay triangulation of planar polygons with interior points.

use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::polygon::{point_in_polygon, signed_area};
use super::{geom, MeshError, Result, Vec2, Vec3};

/// Triangulates the region bounded by the counter-clockwise polygon `boundary`, using every
/// boundary point and every `interior` point as a vertex. Triangle indices refer to
/// `boundary` followed by `interior`; all triangles are counter-clockwise.
pub fn triangulate_polygon(boundary: &[Vec2], interior: &[Vec2]) -> Result<Vec<[usize; 3]>> {
    let nb = boundary.len();
    if nb < 3 {
        return Err(MeshError::Triangulation("boundary has fewer than 3 points".into()));
    }
    if signed_area(boundary) <= 0.0 {
        return Err(MeshError::Triangulation("boundary is not counter-clockwise".into()));
    }
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::new();
    let mut handles: Vec<FixedVertexHandle> = Vec::with_capacity(nb + interior.len());
    let mut owner: Vec<usize> = Vec::new();
    for (i, p) in boundary.iter().chain(interior).enumerate() {
        let h = cdt
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| MeshError::Triangulation(format!("point {i}: {e:?}")))?;
        if h.index() < owner.len() {
            return Err(MeshError::Triangulation(format!(
                "point {i} coincides with point {}",
                owner[h.index()]
            )));
        }
        owner.push(i);
        handles.push(h);
    }
    for i in 0..nb {
        let (a, b) = (handles[i], handles[(i + 1) % nb]);
        if !cdt.can_add_constraint(a, b) {
            return Err(MeshError::Triangulation(format!(
                "boundary edge {i} crosses another boundary edge"
            )));
        }
        cdt.add_constraint(a, b);
    }
    // faces reachable from the outside without crossing the boundary are discarded
    let nf = cdt.num_inner_faces() + 1;
    let mut outside = vec![false; nf];
    let mut stack = Vec::new();
    for face in cdt.inner_faces() {
        for e in face.adjacent_edges() {
            if e.rev().face().is_outer() && !cdt.is_constraint_edge(e.as_undirected().fix()) {
                outside[face.fix().index()] = true;
                stack.push(face.fix());
                break;
            }
        }
    }
    while let Some(f) = stack.pop() {
        for e in cdt.face(f).adjacent_edges() {
            if cdt.is_constraint_edge(e.as_undirected().fix()) {
                continue;
            }
            if let Some(g) = e.rev().face().as_inner() {
                if !outside[g.fix().index()] {
                    outside[g.fix().index()] = true;
                    stack.push(g.fix());
                }
            }
        }
    }
    let mut out = Vec::with_capacity(2 * (nb + interior.len()));
    for face in cdt.inner_faces() {
        if outside[face.fix().index()] {
            continue;
        }
        let vs = face.vertices();
        out.push([
            owner[vs[0].fix().index()],
            owner[vs[1].fix().index()],
            owner[vs[2].fix().index()],
        ]);
    }
    out.sort_unstable();
    Ok(out)
}

/// Triangular-lattice points strictly inside `boundary` and at least `0.5 * spacing` away
/// from it.
pub fn interior_lattice(boundary: &[Vec2], spacing: f64) -> Vec<Vec2> {
    let mut out = Vec::new();
    if boundary.len() < 3 || !(spacing > 0.0) {
        return out;
    }
    let (mut lo, mut hi) = (boundary[0], boundary[0]);
    for p in boundary {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let dy = spacing * 3f64.sqrt() / 2.0;
    let rows = ((hi.y - lo.y) / dy).floor() as usize;
    let cols = ((hi.x - lo.x) / spacing).floor() as usize + 1;
    let margin = 0.5 * spacing;
    let to3 = |p: &Vec2| Vec3::new(p.x, p.y, 0.0);
    for r in 1..=rows {
        let y = lo.y + r as f64 * dy;
        let shift = if r % 2 == 0 { 0.0 } else { 0.5 * spacing };
        for c in 0..=cols {
            let p = Vec2::new(lo.x + shift + c as f64 * spacing, y);
            if p.x <= lo.x || p.x >= hi.x || !point_in_polygon(&p, boundary) {
                continue;
            }
            let n = boundary.len();
            let clear = (0..n).all(|i| {
                geom::point_segment_distance(&to3(&p), &to3(&boundary[i]), &to3(&boundary[(i + 1) % n]))
                    >= margin
            });
            if clear {
                out.push(p);
            }
        }
    }
    out
}

/// One pass of umbrella smoothing on vertices at index `fixed..`. A vertex only moves when
/// none of its triangles would flip or collapse.
pub fn smooth_interior(points: &mut [Vec2], tris: &[[usize; 3]], fixed: usize) {
    let n = points.len();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (f, t) in tris.iter().enumerate() {
        for k in 0..3 {
            nbrs[t[k]].push(t[(k + 1) % 3]);
            nbrs[t[k]].push(t[(k + 2) % 3]);
            incident[t[k]].push(f);
        }
    }
    for v in fixed..n {
        let nb = &mut nbrs[v];
        nb.sort_unstable();
        nb.dedup();
        if nb.is_empty() {
            continue;
        }
        let target = nb.iter().map(|&u| points[u]).sum::<Vec2>() / nb.len() as f64;
        let old = points[v];
        points[v] = target;
        let ok = incident[v].iter().all(|&f| {
            let [a, b, c] = tris[f].map(|i| points[i]);
            (b - a).perp(&(c - a)) > 0.0
        });
        if !ok {
            points[v] = old;
        }
    }
}
