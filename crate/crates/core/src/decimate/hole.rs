use crate::error::{Error, Result};
use crate::mesh::{Point, Vec3};
use nalgebra::Vector2;

type P2 = Vector2<f64>;

/// Newell normal of a closed polygon (unnormalized; its length is twice the
/// projected area).
pub fn newell_normal(points: &[Point]) -> Vec3 {
    let mut n = Vec3::zeros();
    for i in 0..points.len() {
        let p = points[i];
        let q = points[(i + 1) % points.len()];
        n.x += (p.y - q.y) * (p.z + q.z);
        n.y += (p.z - q.z) * (p.x + q.x);
        n.z += (p.x - q.x) * (p.y + q.y);
    }
    n
}

/// Triangulates the hole bounded by `loop_ids` (in order) by recursive
/// diagonal splitting. Each split picks the diagonal whose smallest angle
/// against the adjacent loop edges, measured in the projection plane, is
/// largest. `normal` orients the projection; without it the loop's Newell
/// normal is used. Output triangles keep the loop orientation.
pub fn triangulate_hole(
    loop_ids: &[usize],
    positions: &[Point],
    normal: Option<Vec3>,
) -> Result<Vec<[usize; 3]>> {
    let n = loop_ids.len();
    if n < 3 {
        return Err(Error::Untriangulatable(format!("loop has {n} vertices")));
    }
    let mut seen = loop_ids.to_vec();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Untriangulatable("loop repeats a vertex".into()));
    }
    if n == 3 {
        return Ok(vec![[loop_ids[0], loop_ids[1], loop_ids[2]]]);
    }
    let pts: Vec<Point> = loop_ids.iter().map(|&i| positions[i]).collect();
    let axis = normal
        .unwrap_or_else(|| newell_normal(&pts))
        .try_normalize(0.0)
        .ok_or_else(|| Error::Untriangulatable("loop has no projection plane".into()))?;
    let helper = if axis.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u = axis.cross(&helper).normalize();
    let v = axis.cross(&u);
    // (v, u) ordering makes counter-clockwise around `axis` positive in 2D.
    let flat: Vec<P2> = pts
        .iter()
        .map(|p| P2::new(p.coords.dot(&v), -p.coords.dot(&u)))
        .collect();
    let flat: Vec<P2> = {
        // Recentre for numerical comfort.
        let c = flat.iter().sum::<P2>() / n as f64;
        flat.iter().map(|p| p - c).collect()
    };
    if signed_area(&flat, &(0..n).collect::<Vec<_>>()) <= 0.0 {
        return Err(Error::Untriangulatable(
            "projected loop is not counter-clockwise about the normal".into(),
        ));
    }
    let mut out = Vec::with_capacity(n - 2);
    split(&flat, (0..n).collect(), &mut out)?;
    Ok(out
        .into_iter()
        .map(|[a, b, c]| [loop_ids[a], loop_ids[b], loop_ids[c]])
        .collect())
}

fn signed_area(p: &[P2], idx: &[usize]) -> f64 {
    let mut s = 0.0;
    for k in 0..idx.len() {
        let a = p[idx[k]];
        let b = p[idx[(k + 1) % idx.len()]];
        s += a.x * b.y - a.y * b.x;
    }
    s / 2.0
}

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a - o).perp(&(b - o))
}

fn segments_cross(a: P2, b: P2, c: P2, d: P2) -> bool {
    let d1 = cross(a, b, c);
    let d2 = cross(a, b, d);
    let d3 = cross(c, d, a);
    let d4 = cross(c, d, b);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

fn angle_between(a: P2, b: P2) -> f64 {
    a.perp(&b).abs().atan2(a.dot(&b))
}

/// Is the diagonal from `poly[i]` towards `target` strictly inside the
/// interior angle at `poly[i]`?
fn in_cone(p: &[P2], poly: &[usize], i: usize, target: P2) -> bool {
    let m = poly.len();
    let prev = p[poly[(i + m - 1) % m]];
    let cur = p[poly[i]];
    let next = p[poly[(i + 1) % m]];
    if cross(prev, cur, next) >= 0.0 {
        // convex corner
        cross(cur, target, prev) > 0.0 && cross(target, cur, next) > 0.0
    } else {
        !(cross(cur, target, next) >= 0.0 && cross(target, cur, prev) >= 0.0)
    }
}

fn split(p: &[P2], poly: Vec<usize>, out: &mut Vec<[usize; 3]>) -> Result<()> {
    let m = poly.len();
    if m == 3 {
        out.push([poly[0], poly[1], poly[2]]);
        return Ok(());
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..m {
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            let (a, b) = (p[poly[i]], p[poly[j]]);
            if !in_cone(p, &poly, i, b) || !in_cone(p, &poly, j, a) {
                continue;
            }
            let blocked = (0..m).any(|k| {
                let k2 = (k + 1) % m;
                if k == i || k == j || k2 == i || k2 == j {
                    return false;
                }
                segments_cross(a, b, p[poly[k]], p[poly[k2]])
            });
            if blocked {
                continue;
            }
            let diag = b - a;
            let at = |idx: usize, dir: P2| {
                let prev = p[poly[(idx + m - 1) % m]] - p[poly[idx]];
                let next = p[poly[(idx + 1) % m]] - p[poly[idx]];
                angle_between(dir, prev).min(angle_between(dir, next))
            };
            let score = at(i, diag).min(at(j, -diag));
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, i, j));
            }
        }
    }
    let (_, i, j) = best.ok_or_else(|| Error::Untriangulatable("no interior diagonal".into()))?;
    let left: Vec<usize> = poly[i..=j].to_vec();
    let right: Vec<usize> = poly[j..].iter().chain(&poly[..=i]).copied().collect();
    split(p, left, out)?;
    split(p, right, out)
}
