//! Planar polygon utilities: areas, containment, simplicity and ear clipping.

use super::Vec2;

/// Shoelace signed area; positive for counter-clockwise order.
pub fn signed_area(points: &[Vec2]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        s += a.x * b.y - a.y * b.x;
    }
    0.5 * s
}

/// Absolute shoelace area of a closed loop.
pub fn loop_area(points: &[Vec2]) -> f64 {
    signed_area(points).abs()
}

pub fn orient(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Even-odd containment test.
pub fn point_in_polygon(p: &Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Proper crossing of segments `ab` and `cd` (shared endpoints and touching within `eps` do
/// not count).
pub fn segments_properly_intersect(a: &Vec2, b: &Vec2, c: &Vec2, d: &Vec2, eps: f64) -> bool {
    let scale_ab = (b - a).norm().max(1e-300);
    let scale_cd = (d - c).norm().max(1e-300);
    let o1 = orient(a, b, c) / scale_ab;
    let o2 = orient(a, b, d) / scale_ab;
    let o3 = orient(c, d, a) / scale_cd;
    let o4 = orient(c, d, b) / scale_cd;
    ((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps))
        && ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps))
}

/// First pair of crossing edges of a closed polygon, if any. Adjacent edges are skipped.
pub fn first_self_intersection(points: &[Vec2]) -> Option<(usize, usize)> {
    let n = points.len();
    if n < 4 {
        return None;
    }
    let scale = points
        .iter()
        .map(|p| (p - points[0]).norm())
        .fold(0.0, f64::max);
    let eps = 1e-12 * scale.max(1e-300);
    // sweep on x to keep large loops cheap
    let mut order: Vec<usize> = (0..n).collect();
    let lo = |i: usize| points[i].x.min(points[(i + 1) % n].x);
    let hi = |i: usize| points[i].x.max(points[(i + 1) % n].x);
    order.sort_by(|&a, &b| lo(a).total_cmp(&lo(b)).then(a.cmp(&b)));
    let mut active: Vec<usize> = Vec::new();
    let mut found: Option<(usize, usize)> = None;
    for &i in &order {
        let x = lo(i);
        active.retain(|&j| hi(j) >= x);
        for &j in &active {
            let (a, b) = (i.min(j), i.max(j));
            if b == a + 1 || (a == 0 && b == n - 1) {
                continue;
            }
            if segments_properly_intersect(
                &points[a],
                &points[(a + 1) % n],
                &points[b],
                &points[(b + 1) % n],
                eps,
            ) {
                found = Some(match found {
                    Some(f) if f <= (a, b) => f,
                    _ => (a, b),
                });
            }
        }
        active.push(i);
    }
    found
}

pub fn is_simple(points: &[Vec2]) -> bool {
    first_self_intersection(points).is_none()
}

/// Ear clipping of a simple counter-clockwise polygon. Collinear runs are allowed; an ear is
/// only cut when it has positive area and no other vertex lies inside or on it.
pub fn ear_clip(points: &[Vec2]) -> Vec<[usize; 3]> {
    let n = points.len();
    let mut out = Vec::with_capacity(n.saturating_sub(2));
    if n < 3 {
        return out;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let scale = points
        .iter()
        .map(|p| (p - points[0]).norm())
        .fold(0.0, f64::max)
        .max(1e-300);
    let area_eps = 1e-14 * scale * scale;
    let mut cursor = 0usize;
    while idx.len() > 3 {
        let m = idx.len();
        let corner = |k: usize| {
            orient(
                &points[idx[(k + m - 1) % m]],
                &points[idx[k]],
                &points[idx[(k + 1) % m]],
            )
        };
        // only reflex or flat vertices can block an ear
        let blockers: Vec<usize> = (0..m).filter(|&k| corner(k) <= area_eps).map(|k| idx[k]).collect();
        let mut cut = None;
        for step in 0..m {
            let k = (cursor + step) % m;
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (points[ia], points[ib], points[ic]);
            if orient(&a, &b, &c) <= area_eps {
                continue;
            }
            let blocked = blockers.iter().any(|&j| {
                if j == ia || j == ib || j == ic {
                    return false;
                }
                let p = points[j];
                orient(&a, &b, &p) >= -area_eps
                    && orient(&b, &c, &p) >= -area_eps
                    && orient(&c, &a, &p) >= -area_eps
                    && !(p == a || p == b || p == c)
            });
            if !blocked {
                cut = Some(k);
                break;
            }
        }
        let k = match cut {
            Some(k) => k,
            // numerically stuck: take the largest-area convex corner to guarantee progress
            None => (0..m)
                .max_by(|&x, &y| {
                    let ax = orient(&points[idx[(x + m - 1) % m]], &points[idx[x]], &points[idx[(x + 1) % m]]);
                    let ay = orient(&points[idx[(y + m - 1) % m]], &points[idx[y]], &points[idx[(y + 1) % m]]);
                    ax.total_cmp(&ay)
                })
                .unwrap(),
        };
        out.push([idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]]);
        idx.remove(k);
        cursor = if k == 0 { 0 } else { k - 1 };
    }
    out.push([idx[0], idx[1], idx[2]]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ngon(n: usize, r: f64) -> Vec<Vec2> {
        (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                Vec2::new(r * t.cos(), r * t.sin())
            })
            .collect()
    }

    #[test]
    fn unit_square_area() {
        let sq = vec![
            Vec2::new(0., 0.),
            Vec2::new(1., 0.),
            Vec2::new(1., 1.),
            Vec2::new(0., 1.),
        ];
        assert_eq!(loop_area(&sq), 1.0);
        let mut rev = sq.clone();
        rev.reverse();
        assert_eq!(loop_area(&rev), 1.0);
        assert_eq!(signed_area(&rev), -1.0);
    }

    #[test]
    fn thousand_gon_area_near_pi() {
        // exact polygon area is (n/2) sin(2π/n)
        let a = loop_area(&ngon(1000, 1.0));
        assert!((a - std::f64::consts::PI).abs() < 1e-4);
        let exact = 500.0 * (2.0 * std::f64::consts::PI / 1000.0).sin();
        assert!((a - exact).abs() < 1e-12);
    }

    #[test]
    fn ear_clip_with_collinear_edges() {
        // triangle with extra points on two of its edges
        let poly = vec![
            Vec2::new(0., 0.),
            Vec2::new(0.5, 0.),
            Vec2::new(1., 0.),
            Vec2::new(0.5, 0.5),
            Vec2::new(0., 1.),
            Vec2::new(0., 0.5),
        ];
        let tris = ear_clip(&poly);
        assert_eq!(tris.len(), 4);
        let total: f64 = tris
            .iter()
            .map(|t| orient(&poly[t[0]], &poly[t[1]], &poly[t[2]]) * 0.5)
            .sum();
        assert!((total - 0.5).abs() < 1e-15);
        assert!(tris
            .iter()
            .all(|t| orient(&poly[t[0]], &poly[t[1]], &poly[t[2]]) > 0.0));
    }

    #[test]
    fn ear_clip_concave() {
        let poly = vec![
            Vec2::new(0., 0.),
            Vec2::new(4., 0.),
            Vec2::new(4., 3.),
            Vec2::new(2., 1.),
            Vec2::new(0., 3.),
        ];
        let tris = ear_clip(&poly);
        let total: f64 = tris
            .iter()
            .map(|t| orient(&poly[t[0]], &poly[t[1]], &poly[t[2]]) * 0.5)
            .sum();
        assert!((total - signed_area(&poly)).abs() < 1e-12);
        assert!(tris.iter().all(|t| orient(&poly[t[0]], &poly[t[1]], &poly[t[2]]) > 0.0));
    }

    #[test]
    fn detects_bowtie() {
        let bowtie = vec![
            Vec2::new(0., 0.),
            Vec2::new(1., 1.),
            Vec2::new(1., 0.),
            Vec2::new(0., 1.),
        ];
        assert!(!is_simple(&bowtie));
        assert!(is_simple(&ngon(50, 1.0)));
        assert!(point_in_polygon(&Vec2::new(0.1, 0.0), &ngon(50, 1.0)));
        assert!(!point_in_polygon(&Vec2::new(1.1, 0.0), &ngon(50, 1.0)));
    }
}
