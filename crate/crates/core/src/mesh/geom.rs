//! Point/segment/triangle primitives.

use super::Vec3;

/// Closest point on triangle `abc` to `p` and its barycentric coordinates.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> (Vec3, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p - (a + ab * t)).norm()
}

/// Ray/triangle hit distance (Möller–Trumbore), `None` when parallel or behind the origin.
pub fn ray_triangle(origin: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let h = dir.cross(&e2);
    let det = e1.dot(&h);
    let scale = e1.norm() * e2.norm() * dir.norm();
    if det.abs() <= 1e-14 * scale {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - a;
    let u = inv * s.dot(&h);
    const EDGE: f64 = 1e-12;
    if !(-EDGE..=1.0 + EDGE).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = inv * dir.dot(&q);
    if v < -EDGE || u + v > 1.0 + EDGE {
        return None;
    }
    let t = inv * e2.dot(&q);
    (t > 0.0).then_some(t)
}

/// Signed solid angle subtended by a triangle at the origin (vertices relative to the query).
pub fn solid_angle(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
    let num = a.dot(&b.cross(c));
    let den = la * lb * lc + a.dot(b) * lc + a.dot(c) * lb + b.dot(c) * la;
    2.0 * num.atan2(den)
}

/// Whether two triangles that share no vertex intersect. Touching within `eps` (relative
/// to the triangle sizes) does not count.
pub fn triangles_intersect(t1: &[Vec3; 3], t2: &[Vec3; 3]) -> bool {
    let scale = t1
        .iter()
        .chain(t2.iter())
        .map(|p| (p - t1[0]).norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let eps = 1e-10 * scale;
    let n1 = (t1[1] - t1[0]).cross(&(t1[2] - t1[0]));
    let n2 = (t2[1] - t2[0]).cross(&(t2[2] - t2[0]));
    let (l1, l2) = (n1.norm(), n2.norm());
    if l1 == 0.0 || l2 == 0.0 {
        return false;
    }
    let (n1, n2) = (n1 / l1, n2 / l2);
    let d2: [f64; 3] = t2.map(|p| n1.dot(&(p - t1[0])));
    if d2.iter().all(|&d| d > eps) || d2.iter().all(|&d| d < -eps) {
        return false;
    }
    let d1: [f64; 3] = t1.map(|p| n2.dot(&(p - t2[0])));
    if d1.iter().all(|&d| d > eps) || d1.iter().all(|&d| d < -eps) {
        return false;
    }
    if d2.iter().all(|d| d.abs() <= eps) {
        return coplanar_overlap(t1, t2, &n1, eps);
    }
    edges_pierce(t1, t2, &n2, eps) || edges_pierce(t2, t1, &n1, eps)
}

fn edges_pierce(edges_of: &[Vec3; 3], tri: &[Vec3; 3], n: &Vec3, eps: f64) -> bool {
    for k in 0..3 {
        let p = edges_of[k];
        let q = edges_of[(k + 1) % 3];
        let dp = n.dot(&(p - tri[0]));
        let dq = n.dot(&(q - tri[0]));
        if (dp > eps && dq < -eps) || (dp < -eps && dq > eps) {
            let x = p + (q - p) * (dp / (dp - dq));
            if point_strictly_in_triangle(&x, tri, n, eps) {
                return true;
            }
        }
    }
    false
}

fn point_strictly_in_triangle(x: &Vec3, tri: &[Vec3; 3], n: &Vec3, eps: f64) -> bool {
    (0..3).all(|k| {
        let a = tri[k];
        let b = tri[(k + 1) % 3];
        let e = b - a;
        let len = e.norm();
        len > 0.0 && n.dot(&e.cross(&(x - a))) / len > eps
    })
}

fn coplanar_overlap(t1: &[Vec3; 3], t2: &[Vec3; 3], n: &Vec3, eps: f64) -> bool {
    let (u, v) = super::orthonormal_basis(n);
    let p1 = t1.map(|p| super::Vec2::new(p.dot(&u), p.dot(&v)));
    let p2 = t2.map(|p| super::Vec2::new(p.dot(&u), p.dot(&v)));
    for i in 0..3 {
        for j in 0..3 {
            if super::polygon::segments_properly_intersect(
                &p1[i],
                &p1[(i + 1) % 3],
                &p2[j],
                &p2[(j + 1) % 3],
                eps,
            ) {
                return true;
            }
        }
    }
    false
}
