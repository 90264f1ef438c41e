//! Closing a boundary loop with a planar triangulated cap.

use super::cdt::{interior_lattice, smooth_interior, triangulate_polygon};
use super::topology::boundary_loops;
use super::{best_fit_plane, ClosedPolyline3D, LabeledSurfaceMesh, MeshError, Result, Vec2, Vec3};

/// Caps the open boundary of `mesh` that coincides with `boundary_loop`. The rim is projected
/// to its best-fit plane and triangulated there together with a lattice of interior points
/// at the mesh's median edge length; interior points then get one guarded smoothing pass and
/// are lifted off the plane by a harmonic interpolation of the rim's out-of-plane offsets.
/// Rim vertices are reused, so the result is closed along that loop.
pub fn cap_opening(
    mesh: &LabeledSurfaceMesh,
    boundary_loop: &ClosedPolyline3D,
    cap_label: i32,
) -> Result<LabeledSurfaceMesh> {
    let loops = boundary_loops(mesh);
    if loops.is_empty() {
        return Err(MeshError::NoBoundary);
    }
    let tol = 1e-6 * mesh.bbox_diagonal().max(1e-300);
    let (rim, deviation) = loops
        .iter()
        .map(|lp| (lp, loop_deviation(mesh, lp, boundary_loop)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if deviation > tol {
        return Err(MeshError::NotABoundary { deviation });
    }

    // the cap runs against the rim's winding
    let mut ring: Vec<u32> = rim.clone();
    ring.reverse();
    let pts3: Vec<Vec3> = ring.iter().map(|&v| mesh.vertex(v)).collect();
    let mut plane = best_fit_plane(&pts3)?;
    let mut ring2: Vec<Vec2> = pts3.iter().map(|p| plane.to_2d(p)).collect();
    if super::polygon::signed_area(&ring2) < 0.0 {
        plane = plane.flipped();
        ring2 = pts3.iter().map(|p| plane.to_2d(p)).collect();
    }

    let spacing = mesh.median_edge_length();
    let interior = interior_lattice(&ring2, spacing);
    let tris = triangulate_polygon(&ring2, &interior)?;
    let mut all2: Vec<Vec2> = ring2.iter().chain(&interior).copied().collect();
    smooth_interior(&mut all2, &tris, ring2.len());

    let heights = harmonic_heights(&pts3.iter().map(|p| plane.signed_distance(p)).collect::<Vec<_>>(), all2.len(), &tris);
    let mut vertices = mesh.vertices().to_vec();
    let base = vertices.len() as u32;
    vertices.extend(
        all2.iter()
            .zip(&heights)
            .skip(ring.len())
            .map(|(q, h)| plane.from_2d(q) + plane.normal * *h),
    );
    let id = |i: usize| {
        if i < ring.len() {
            ring[i]
        } else {
            base + (i - ring.len()) as u32
        }
    };
    let mut triangles = mesh.triangles().to_vec();
    let mut labels = mesh.labels().to_vec();
    for t in &tris {
        triangles.push([id(t[0]), id(t[1]), id(t[2])]);
        labels.push(cap_label);
    }
    Ok(LabeledSurfaceMesh::new(vertices, triangles, labels)?.with_label_map(mesh.label_map().clone()))
}

/// Offsets from the cap plane for every cap vertex: rim values are given, interior values solve
/// the uniform-weight discrete Laplace equation by Gauss-Seidel sweeps. A planar rim gives a
/// flat cap, and interior offsets never leave the range of the rim offsets.
fn harmonic_heights(rim: &[f64], n: usize, tris: &[[usize; 3]]) -> Vec<f64> {
    let nb = rim.len();
    let mut h = vec![0.0; n];
    h[..nb].copy_from_slice(rim);
    let (lo, hi) = rim.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if n == nb || hi - lo <= 0.0 {
        h[nb..].fill(if n > nb { lo } else { 0.0 });
        return h;
    }
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for t in tris {
        for k in 0..3 {
            nbrs[t[k]].push(t[(k + 1) % 3]);
            nbrs[t[k]].push(t[(k + 2) % 3]);
        }
    }
    for nb_list in &mut nbrs {
        nb_list.sort_unstable();
        nb_list.dedup();
    }
    let mean = rim.iter().sum::<f64>() / nb as f64;
    h[nb..].fill(mean);
    let tol = 1e-10 * (hi - lo);
    for _ in 0..20_000 {
        let mut change = 0.0f64;
        for v in nb..n {
            if nbrs[v].is_empty() {
                continue;
            }
            let new = nbrs[v].iter().map(|&u| h[u]).sum::<f64>() / nbrs[v].len() as f64;
            change = change.max((new - h[v]).abs());
            h[v] = new;
        }
        if change <= tol {
            break;
        }
    }
    h
}

/// How far a mesh boundary loop is from a polyline: every polyline point must sit on a loop
/// vertex and every loop vertex on the polyline.
fn loop_deviation(mesh: &LabeledSurfaceMesh, lp: &[u32], line: &ClosedPolyline3D) -> f64 {
    let verts: Vec<Vec3> = lp.iter().map(|&v| mesh.vertex(v)).collect();
    // cheap rejection on centroids before the quadratic check
    let c_loop = verts.iter().sum::<Vec3>() / verts.len() as f64;
    let gap = (c_loop - line.centroid()).norm();
    let scale = line.length();
    if gap > scale {
        return gap;
    }
    let mut dev = 0.0f64;
    for p in line.points() {
        let d = verts
            .iter()
            .map(|v| (v - p).norm_squared())
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        dev = dev.max(d);
    }
    for v in &verts {
        dev = dev.max(line.distance_to(v));
    }
    dev
}
