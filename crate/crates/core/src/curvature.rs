//! Discrete differential-geometry curvature: cotangent mean-curvature normal,
//! angle-deficit Gaussian curvature, principal curvatures, and the angle
//! features (wedge-angle sum, signed dihedral extrema) the ranking uses.

use crate::error::{Error, Result};
use crate::mesh::{Adjacency, Mesh, Vec3};
use crate::star::{RingKind, VertexStar};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

/// Cotangents are clamped to this magnitude.
pub const COT_CLAMP: f64 = 1e6;

/// How the area attributed to a vertex is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AreaMode {
    /// Voronoi cells for non-obtuse triangles, half/quarter triangle areas
    /// for obtuse ones.
    VoronoiMixed,
    /// One third of each incident triangle.
    #[default]
    Barycentric,
}

/// Diagnostic flags attached to per-vertex curvature.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CurvatureFlags {
    /// Open ring: only the available wedge terms were summed.
    pub boundary_partial: bool,
    /// `kH^2 - kG` was negative and clamped to zero.
    pub umbilic_clamped: bool,
    /// Some incident faces were degenerate and skipped.
    pub degenerate_faces: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvatureAtVertex {
    /// Mean curvature normal.
    #[serde(skip)]
    pub mean_normal: Vec3,
    pub kh: f64,
    pub kg: f64,
    pub k1: f64,
    pub k2: f64,
    pub delta: f64,
    pub area: f64,
    pub flags: CurvatureFlags,
}

/// Principal curvatures derived from mean and Gaussian curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Principal {
    pub k1: f64,
    pub k2: f64,
    /// Discriminant after clamping (never negative).
    pub delta: f64,
    pub clamped: bool,
}

fn cot(angle: f64) -> f64 {
    let (s, c) = angle.sin_cos();
    if s.abs() * COT_CLAMP <= c.abs() {
        COT_CLAMP.copysign(c)
    } else {
        c / s
    }
}

/// Area attributed to the star center.
pub fn vertex_area(star: &VertexStar, mode: AreaMode) -> Result<f64> {
    let c = star.center_pos();
    let mut total = 0.0;
    for w in star.live_wedges() {
        let contribution = match mode {
            AreaMode::Barycentric => w.area / 3.0,
            AreaMode::VoronoiMixed => {
                let at_center = star.wedge_angle(w);
                let (at_a, at_b) = star.opposite_angles(w);
                if at_center > PI / 2.0 {
                    w.area / 2.0
                } else if at_a > PI / 2.0 || at_b > PI / 2.0 {
                    w.area / 4.0
                } else {
                    let pa = star.pos(w.a);
                    let pb = star.pos(w.b);
                    ((pb - c).norm_squared() * cot(at_a) + (pa - c).norm_squared() * cot(at_b))
                        / 8.0
                }
            }
        };
        total += contribution;
    }
    if total > 0.0 {
        Ok(total)
    } else {
        Err(Error::DegenerateStar(star.center()))
    }
}

/// Cotangent-weighted Laplacian of position, divided by `2 * area`.
pub fn mean_curvature_normal(star: &VertexStar, area: f64) -> Vec3 {
    let c = star.center_pos();
    let mut sum = Vec3::zeros();
    for w in star.live_wedges() {
        let (at_a, at_b) = star.opposite_angles(w);
        sum += (star.pos(w.b) - c) * cot(at_a) + (star.pos(w.a) - c) * cot(at_b);
    }
    sum / (2.0 * area)
}

/// Angle deficit `2pi - sum(theta)`, radians. No boundary correction is applied.
pub fn angle_deficit(star: &VertexStar) -> f64 {
    TAU - star.angle_sum()
}

pub fn gaussian_curvature(star: &VertexStar, area: f64) -> f64 {
    angle_deficit(star) / area
}

pub fn principal_curvatures(kh: f64, kg: f64) -> Principal {
    let raw = kh * kh - kg;
    let (delta, clamped) = if raw < 0.0 { (0.0, true) } else { (raw, false) };
    let root = delta.sqrt();
    Principal {
        k1: kh + root,
        k2: kh - root,
        delta,
        clamped,
    }
}

/// Sum of wedge angles at the center, degrees.
pub fn theta_sum(star: &VertexStar) -> f64 {
    star.angle_sum().to_degrees()
}

/// Minimum and maximum signed dihedral angle (degrees) over the star's
/// interior incident edges.
pub fn dihedral_extrema(star: &VertexStar) -> Result<(f64, f64)> {
    let d = star.edge_dihedrals();
    if d.is_empty() {
        return Err(Error::NoDihedral(star.center()));
    }
    let lo = d.iter().map(|(_, a)| *a).fold(f64::INFINITY, f64::min);
    let hi = d.iter().map(|(_, a)| *a).fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Full curvature record at one vertex. `kH` is signed by the direction of
/// the mean curvature normal relative to the angle-weighted vertex normal.
pub fn vertex_curvature(star: &VertexStar, mode: AreaMode) -> Result<CurvatureAtVertex> {
    if star.kind() == RingKind::Isolated {
        return Err(Error::DegenerateStar(star.center()));
    }
    let area = vertex_area(star, mode)?;
    let k = mean_curvature_normal(star, area);
    let n = star.angle_weighted_normal();
    let magnitude = k.norm() / 2.0;
    let kh = if k.dot(&n) < 0.0 { -magnitude } else { magnitude };
    let kg = gaussian_curvature(star, area);
    let p = principal_curvatures(kh, kg);
    Ok(CurvatureAtVertex {
        mean_normal: k,
        kh,
        kg,
        k1: p.k1,
        k2: p.k2,
        delta: p.delta,
        area,
        flags: CurvatureFlags {
            boundary_partial: star.kind() == RingKind::Open,
            umbilic_clamped: p.clamped,
            degenerate_faces: star.degenerate_count() > 0,
        },
    })
}

/// Curvature at every vertex, evaluated in parallel. Isolated or fully
/// degenerate vertices yield `None`.
pub fn compute_curvatures(
    mesh: &Mesh,
    adj: &Adjacency,
    mode: AreaMode,
) -> Vec<Option<CurvatureAtVertex>> {
    (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| vertex_curvature(&adj.star(mesh, v), mode).ok())
        .collect()
}

/// Largest absolute difference quotient of `values` over each vertex's
/// 1-ring. Vertices whose own value is missing, or with no neighbor carrying
/// a value, get `None`.
pub fn curvature_gradient(mesh: &Mesh, adj: &Adjacency, values: &[Option<f64>]) -> Vec<Option<f64>> {
    (0..mesh.vertex_count())
        .map(|v| {
            let fv = values[v]?;
            let pv = mesh.position(v);
            adj.neighbors(v)
                .iter()
                .filter_map(|&u| {
                    let fu = values[u]?;
                    let d = (mesh.position(u) - pv).norm();
                    (d > 0.0).then(|| (fv - fu).abs() / d)
                })
                .reduce(f64::max)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::{Point, TopologySets};
    use approx::assert_relative_eq;

    fn star_of(mesh: &Mesh, v: usize) -> (Adjacency, usize) {
        (Adjacency::build(mesh), v)
    }

    #[test]
    fn barycentric_area_tetrahedron() {
        let m = fixtures::tetrahedron();
        let (adj, v) = star_of(&m, 0);
        let a = vertex_area(&adj.star(&m, v), AreaMode::Barycentric).unwrap();
        assert_relative_eq!(a, 3.0f64.sqrt() / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn barycentric_area_grid_center() {
        let m = fixtures::grid(3, 3, 1.0);
        let adj = Adjacency::build(&m);
        let a = vertex_area(&adj.star(&m, 4), AreaMode::Barycentric).unwrap();
        assert_relative_eq!(a, 1.0, epsilon = 1e-15);
    }

    /// Area of the polygon (vertex, edge midpoint, circumcenter, edge midpoint)
    /// built directly from the circumcenter.
    fn voronoi_by_circumcenter(p: Point, q: Point, r: Point) -> f64 {
        let a = q - p;
        let b = r - p;
        let axb = a.cross(&b);
        let cc = p + (b * a.norm_squared() - a * b.norm_squared()).cross(&axb) / (2.0 * axb.norm_squared());
        let m1 = Point::from((p.coords + q.coords) / 2.0);
        let m2 = Point::from((p.coords + r.coords) / 2.0);
        crate::mesh::triangle_area(&p, &m1, &cc) + crate::mesh::triangle_area(&p, &cc, &m2)
    }

    #[test]
    fn voronoi_area_equilateral_matches_circumcenter_construction() {
        let m = fixtures::single_triangle();
        let adj = Adjacency::build(&m);
        let a = vertex_area(&adj.star(&m, 0), AreaMode::VoronoiMixed).unwrap();
        let direct = voronoi_by_circumcenter(m.position(0), m.position(1), m.position(2));
        assert_relative_eq!(a, direct, epsilon = 1e-15);
        assert_relative_eq!(a, (3.0f64.sqrt() / 4.0) / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn voronoi_area_acute_scalene_matches_circumcenter_construction() {
        let p = Point::new(0.0, 0.0, 0.0);
        let q = Point::new(1.0, 0.1, 0.0);
        let r = Point::new(0.3, 0.9, 0.2);
        let m = Mesh::new(vec![p, q, r], vec![[0, 1, 2]]).unwrap();
        let adj = Adjacency::build(&m);
        for (v, (a, b, c)) in [(0, (p, q, r)), (1, (q, r, p)), (2, (r, p, q))] {
            let area = vertex_area(&adj.star(&m, v), AreaMode::VoronoiMixed).unwrap();
            assert_relative_eq!(area, voronoi_by_circumcenter(a, b, c), epsilon = 1e-14);
        }
    }

    #[test]
    fn voronoi_area_obtuse_rules() {
        // Obtuse at vertex 0.
        let m = Mesh::new(
            vec![
                Point::new(0.0, 0.0, 0.0),
                Point::new(1.0, -0.1, 0.0),
                Point::new(-1.0, -0.1, 0.0),
            ],
            vec![[0, 2, 1]],
        )
        .unwrap();
        let adj = Adjacency::build(&m);
        let t = m.face_area(0);
        assert_relative_eq!(vertex_area(&adj.star(&m, 0), AreaMode::VoronoiMixed).unwrap(), t / 2.0);
        assert_relative_eq!(vertex_area(&adj.star(&m, 1), AreaMode::VoronoiMixed).unwrap(), t / 4.0);
        assert_relative_eq!(vertex_area(&adj.star(&m, 2), AreaMode::VoronoiMixed).unwrap(), t / 4.0);
    }

    #[test]
    fn flat_grid_interior_has_no_curvature() {
        let m = fixtures::grid(3, 3, 1.0);
        let adj = Adjacency::build(&m);
        let c = vertex_curvature(&adj.star(&m, 4), AreaMode::Barycentric).unwrap();
        assert!(c.mean_normal.norm() < 1e-12);
        assert!(c.kh.abs() < 1e-12);
        assert!(c.kg.abs() < 1e-12);
        assert_relative_eq!(theta_sum(&adj.star(&m, 4)), 360.0, epsilon = 1e-9);
    }

    #[test]
    fn tetrahedron_vertex_curvature() {
        let m = fixtures::tetrahedron();
        let adj = Adjacency::build(&m);
        let star = adj.star(&m, 3);
        let c = vertex_curvature(&star, AreaMode::Barycentric).unwrap();
        assert_relative_eq!(c.kg, 4.0 * PI / 3.0f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(theta_sum(&star), 180.0, epsilon = 1e-9);
        // K points from the apex towards the centroid.
        let centroid: Vec3 = m.vertices().iter().map(|p| p.coords).sum::<Vec3>() / 4.0;
        let axis = (centroid - m.position(3).coords).normalize();
        assert!(c.mean_normal.norm() > 0.0);
        assert_relative_eq!(c.mean_normal.normalize().dot(&axis), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn principal_examples() {
        let p = principal_curvatures(2.0, 4.0);
        assert_eq!((p.k1, p.k2, p.delta, p.clamped), (2.0, 2.0, 0.0, false));
        let p = principal_curvatures(0.0, -1.0);
        assert_eq!((p.k1, p.k2), (1.0, -1.0));
        let p = principal_curvatures(1.0, 2.0);
        assert_eq!((p.k1, p.k2, p.delta, p.clamped), (1.0, 1.0, 0.0, true));
    }

    #[test]
    fn saddle_center_has_angle_excess() {
        let m = fixtures::saddle(5, 0.5);
        let adj = Adjacency::build(&m);
        assert!(theta_sum(&adj.star(&m, 12)) > 360.0);
    }

    #[test]
    fn dihedral_examples() {
        let g = fixtures::grid(3, 3, 1.0);
        let adj = Adjacency::build(&g);
        let (lo, hi) = dihedral_extrema(&adj.star(&g, 4)).unwrap();
        assert!(lo.abs() < 1e-12 && hi.abs() < 1e-12);

        // Angle between outward normals of a regular tetrahedron.
        let t = fixtures::tetrahedron();
        let adj = Adjacency::build(&t);
        let expected = 180.0 - (1.0f64 / 3.0).acos().to_degrees();
        let (lo, hi) = dihedral_extrema(&adj.star(&t, 0)).unwrap();
        assert_relative_eq!(lo, expected, epsilon = 1e-9);
        assert_relative_eq!(hi, expected, epsilon = 1e-9);

        let r = fixtures::roof(5, 2);
        let adj = Adjacency::build(&r);
        let crease_mid = 2 * 5 + 2;
        let (_, hi) = dihedral_extrema(&adj.star(&r, crease_mid)).unwrap();
        assert_relative_eq!(hi, 90.0, epsilon = 1e-9);
    }

    #[test]
    fn single_triangle_has_no_dihedral() {
        let m = fixtures::single_triangle();
        let adj = Adjacency::build(&m);
        assert!(matches!(dihedral_extrema(&adj.star(&m, 0)), Err(Error::NoDihedral(0))));
    }

    #[test]
    fn gradient_examples() {
        let m = fixtures::grid(4, 4, 1.0);
        let adj = Adjacency::build(&m);
        let constant = vec![Some(3.0); m.vertex_count()];
        assert!(curvature_gradient(&m, &adj, &constant).iter().all(|g| *g == Some(0.0)));
        let xs: Vec<Option<f64>> = m.vertices().iter().map(|p| Some(p.x)).collect();
        let g = curvature_gradient(&m, &adj, &xs);
        for v in [5, 6, 9, 10] {
            assert_relative_eq!(g[v].unwrap(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn gradient_skips_missing_values() {
        let m = fixtures::grid(3, 3, 1.0);
        let adj = Adjacency::build(&m);
        let mut vals = vec![None; 9];
        vals[4] = Some(1.0);
        assert_eq!(curvature_gradient(&m, &adj, &vals)[4], None);
        assert_eq!(curvature_gradient(&m, &adj, &vals)[0], None);
    }

    #[test]
    fn icosphere_gaussian_gradient_is_small() {
        let m = fixtures::icosphere(3);
        let adj = Adjacency::build(&m);
        let curv = compute_curvatures(&m, &adj, AreaMode::Barycentric);
        let kg: Vec<Option<f64>> = curv.iter().map(|c| c.map(|c| c.kg)).collect();
        let mean_abs = kg.iter().map(|k| k.unwrap().abs()).sum::<f64>() / kg.len() as f64;
        let grad = curvature_gradient(&m, &adj, &kg);
        // The gradient is a difference quotient, so it is compared with the
        // mean curvature per typical edge length.
        let edge = adj
            .edges()
            .iter()
            .map(|(e, _)| (m.position(e.0) - m.position(e.1)).norm())
            .sum::<f64>()
            / adj.edge_count() as f64;
        let rel: Vec<f64> = grad.iter().map(|g| g.unwrap() * edge / mean_abs).collect();
        let mean_rel = rel.iter().sum::<f64>() / rel.len() as f64;
        assert!(mean_rel < 0.05, "{mean_rel}");
        // Away from the twelve valence-5 vertices the field is flat to 5%.
        let near_irregular = |v: usize| {
            adj.valence(v) == 5 || adj.neighbors(v).iter().any(|&u| adj.valence(u) == 5)
        };
        for (v, r) in rel.iter().enumerate() {
            if !near_irregular(v) {
                assert!(*r < 0.05, "vertex {v}: {r}");
            }
        }
    }

    #[test]
    fn boundary_vertex_is_flagged() {
        let m = fixtures::grid(3, 3, 1.0);
        let adj = Adjacency::build(&m);
        let c = vertex_curvature(&adj.star(&m, 1), AreaMode::Barycentric).unwrap();
        assert!(c.flags.boundary_partial);
        let t = TopologySets::compute(&m, &adj);
        assert!(t.boundary.contains(&1));
    }
}
