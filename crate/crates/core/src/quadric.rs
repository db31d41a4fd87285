//! Fitting-quadric curvature: normal estimation, local frame, least-squares
//! fit of `z = a x^2 + b xy + c y^2 (+ d x + e y)` and curvature extraction.

use crate::error::{Error, Result};
use crate::mesh::{Adjacency, Mesh, Point, Vec3};
use crate::star::VertexStar;
use nalgebra::{DMatrix, DVector, Matrix3};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormalMode {
    #[default]
    AngleWeightedAverage,
    LsqPlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum FitKind {
    Simple,
    #[default]
    Extended,
}

impl FitKind {
    pub fn parameter_count(self) -> usize {
        match self {
            FitKind::Simple => 3,
            FitKind::Extended => 5,
        }
    }
}

/// Estimated unit normal at the star center.
pub fn estimate_normal(star: &VertexStar, mode: NormalMode) -> Result<Vec3> {
    let avg = star.angle_weighted_normal();
    match mode {
        NormalMode::AngleWeightedAverage => {
            if avg.norm() == 0.0 {
                Err(Error::DegenerateStar(star.center()))
            } else {
                Ok(avg)
            }
        }
        NormalMode::LsqPlane => {
            let pts: Vec<Point> = std::iter::once(star.center_pos())
                .chain(star.neighbors().iter().map(|&v| star.pos(v)))
                .collect();
            if pts.len() < 4 {
                return Err(Error::ColinearRing(star.center()));
            }
            let n = plane_normal(&pts).ok_or(Error::ColinearRing(star.center()))?;
            Ok(if n.dot(&avg) < 0.0 { -n } else { n })
        }
    }
}

/// Normal of the total-least-squares plane through `pts`; `None` when the
/// points are (nearly) colinear.
pub fn plane_normal(pts: &[Point]) -> Option<Vec3> {
    let centroid: Vec3 = pts.iter().map(|p| p.coords).sum::<Vec3>() / pts.len() as f64;
    let mut cov = Matrix3::zeros();
    for p in pts {
        let d = p.coords - centroid;
        cov += d * d.transpose();
    }
    let eig = cov.symmetric_eigen();
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let (mid, big) = (eig.eigenvalues[idx[1]], eig.eigenvalues[idx[2]]);
    if big <= 0.0 || mid <= 1e-12 * big {
        return None;
    }
    Some(eig.eigenvectors.column(idx[0]).normalize())
}

/// Rotation from world to a frame whose third axis is the surface normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub origin: Point,
    /// Rows `r1, r2, r3`; `r3` is the normal.
    pub rows: [Vec3; 3],
}

impl LocalFrame {
    /// `r1` is the global x axis projected onto the tangent plane (global y
    /// when the normal lies within 1e-8 of the x axis), `r2 = r3 x r1`.
    pub fn new(origin: Point, normal: Vec3) -> Self {
        let n = normal;
        let x = Vec3::x();
        let seed = if (n - x).norm() < 1e-8 || (n + x).norm() < 1e-8 {
            Vec3::y()
        } else {
            x
        };
        let mut r1 = (seed - n * n.dot(&seed)).normalize();
        // Second Gram-Schmidt pass keeps r1 orthogonal to n near the seed axis.
        r1 = (r1 - n * n.dot(&r1)).normalize();
        let r2 = n.cross(&r1);
        Self {
            origin,
            rows: [r1, r2, n],
        }
    }

    pub fn to_local(&self, p: &Point) -> Vec3 {
        let d = p - self.origin;
        Vec3::new(self.rows[0].dot(&d), self.rows[1].dot(&d), self.rows[2].dot(&d))
    }

    pub fn direction_to_world(&self, v: &Vec3) -> Vec3 {
        self.rows[0] * v.x + self.rows[1] * v.y + self.rows[2] * v.z
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        Matrix3::from_rows(&[
            self.rows[0].transpose(),
            self.rows[1].transpose(),
            self.rows[2].transpose(),
        ])
    }
}

/// Least-squares quadric in a local frame. `d` and `e` are zero for
/// [`FitKind::Simple`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadricFit {
    pub kind: FitKind,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub residual_rms: f64,
}

/// Fits local-frame points by SVD least squares. Returns `None` when there
/// are fewer points than parameters or the design matrix is rank deficient.
pub fn fit_points(points: &[Vec3], kind: FitKind) -> Option<QuadricFit> {
    let m = kind.parameter_count();
    if points.len() < m {
        return None;
    }
    let design = DMatrix::from_fn(points.len(), m, |i, j| {
        let p = points[i];
        match j {
            0 => p.x * p.x,
            1 => p.x * p.y,
            2 => p.y * p.y,
            3 => p.x,
            _ => p.y,
        }
    });
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|p| p.z));
    // Column scaling keeps the rank test meaningful for tiny rings.
    let scales: Vec<f64> = (0..m).map(|j| design.column(j).norm()).collect();
    if scales.contains(&0.0) {
        return None;
    }
    let scaled = DMatrix::from_fn(points.len(), m, |i, j| design[(i, j)] / scales[j]);
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-10 * smax {
        return None;
    }
    let sol = svd.solve(&rhs, 0.0).ok()?;
    let coef: Vec<f64> = (0..m).map(|j| sol[j] / scales[j]).collect();
    let resid = &design * DVector::from_vec(coef.clone()) - rhs;
    let rms = (resid.norm_squared() / points.len() as f64).sqrt();
    Some(QuadricFit {
        kind,
        a: coef[0],
        b: coef[1],
        c: coef[2],
        d: coef.get(3).copied().unwrap_or(0.0),
        e: coef.get(4).copied().unwrap_or(0.0),
        residual_rms: rms,
    })
}

/// Fits the 1-ring of `v` in `frame`, falling back to the 2-ring when the
/// 1-ring is too small or rank deficient.
pub fn fit_quadric(
    mesh: &Mesh,
    adj: &Adjacency,
    v: usize,
    frame: &LocalFrame,
    kind: FitKind,
) -> Result<QuadricFit> {
    let local = |ids: &[usize]| -> Vec<Vec3> {
        ids.iter().map(|&u| frame.to_local(&mesh.position(u))).collect()
    };
    if let Some(fit) = fit_points(&local(adj.neighbors(v)), kind) {
        return Ok(fit);
    }
    fit_points(&local(&adj.two_ring(v)), kind).ok_or(Error::UnfittableStar(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadricCurvature {
    pub k1: f64,
    pub k2: f64,
    pub kgi: f64,
    pub khi: f64,
    /// Refined world-space normal from the linear terms (extended fits only).
    #[serde(skip)]
    pub normal: Option<Vec3>,
}

/// Curvatures of a fitted quadric.
///
/// The principal values are `a + c +- sqrt((a - c)^2 + b^2)`, i.e. they sum
/// to twice `khi`; they are reported in that convention unchanged.
pub fn curvatures_from_quadric(fit: &QuadricFit, frame: &LocalFrame) -> QuadricCurvature {
    let QuadricFit { a, b, c, d, e, .. } = *fit;
    let root = ((a - c).powi(2) + b * b).sqrt();
    let (k1, k2) = (a + c + root, a + c - root);
    match fit.kind {
        FitKind::Simple => QuadricCurvature {
            k1,
            k2,
            kgi: 4.0 * a * c - b * b,
            khi: a + c,
            normal: None,
        },
        FitKind::Extended => {
            let g = 1.0 + d * d + e * e;
            let local_n = Vec3::new(-d, -e, 1.0).normalize();
            QuadricCurvature {
                k1,
                k2,
                kgi: (4.0 * a * c - b * b) / (g * g),
                khi: (a + c + a * e * e + c * d * d - b * d * e) / (g * g * g).sqrt(),
                normal: Some(frame.direction_to_world(&local_n)),
            }
        }
    }
}

/// Normal estimate, frame, fit and curvature for one vertex.
pub fn quadric_curvature_at(
    mesh: &Mesh,
    adj: &Adjacency,
    v: usize,
    kind: FitKind,
) -> Result<QuadricCurvature> {
    let star = adj.star(mesh, v);
    let n = estimate_normal(&star, NormalMode::AngleWeightedAverage)?;
    let frame = LocalFrame::new(mesh.position(v), n);
    let fit = fit_quadric(mesh, adj, v, &frame, kind)?;
    Ok(curvatures_from_quadric(&fit, &frame))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_relative_eq;

    fn ring_samples(f: impl Fn(f64, f64) -> f64, n: usize, radius: f64) -> Vec<Vec3> {
        (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64 + 0.1;
                let r = radius * (0.6 + 0.4 * ((k * 7 % 5) as f64 / 4.0));
                let (x, y) = (r * t.cos(), r * t.sin());
                Vec3::new(x, y, f(x, y))
            })
            .collect()
    }

    /// Independent check: solve the normal equations directly.
    fn normal_equations(points: &[Vec3], kind: FitKind) -> Vec<f64> {
        let m = kind.parameter_count();
        let row = |p: &Vec3| -> Vec<f64> {
            let all = [p.x * p.x, p.x * p.y, p.y * p.y, p.x, p.y];
            all[..m].to_vec()
        };
        let mut ata = DMatrix::zeros(m, m);
        let mut atb = DVector::zeros(m);
        for p in points {
            let r = row(p);
            for i in 0..m {
                atb[i] += r[i] * p.z;
                for j in 0..m {
                    ata[(i, j)] += r[i] * r[j];
                }
            }
        }
        ata.lu().solve(&atb).unwrap().iter().copied().collect()
    }

    #[test]
    fn recovers_paraboloid_and_saddle() {
        let pts = ring_samples(|x, y| x * x + y * y, 8, 0.5);
        let f = fit_points(&pts, FitKind::Simple).unwrap();
        assert!((f.a - 1.0).abs() < 1e-8 && f.b.abs() < 1e-8 && (f.c - 1.0).abs() < 1e-8);

        let pts = ring_samples(|x, y| x * x - y * y, 8, 0.5);
        let f = fit_points(&pts, FitKind::Simple).unwrap();
        assert!((f.a - 1.0).abs() < 1e-8 && f.b.abs() < 1e-8 && (f.c + 1.0).abs() < 1e-8);
    }

    #[test]
    fn extended_fit_recovers_linear_term() {
        let pts = ring_samples(|x, y| x * x + y * y + 0.3 * x, 9, 0.5);
        let ext = fit_points(&pts, FitKind::Extended).unwrap();
        let oracle = normal_equations(&pts, FitKind::Extended);
        assert!((ext.d - 0.3).abs() < 1e-8);
        assert!((ext.d - oracle[3]).abs() < 1e-8);
        let simple = fit_points(&pts, FitKind::Simple).unwrap();
        assert!(simple.residual_rms > ext.residual_rms + 1e-6);
    }

    #[test]
    fn svd_matches_normal_equations_on_noisy_data() {
        let pts: Vec<Vec3> = ring_samples(|x, y| 2.0 * x * x - 0.5 * x * y + y * y, 10, 0.4)
            .into_iter()
            .enumerate()
            .map(|(i, p)| p + Vec3::new(0.0, 0.0, 1e-3 * ((i * 37 % 11) as f64 - 5.0)))
            .collect();
        for kind in [FitKind::Simple, FitKind::Extended] {
            let f = fit_points(&pts, kind).unwrap();
            let o = normal_equations(&pts, kind);
            let got = [f.a, f.b, f.c, f.d, f.e];
            for j in 0..kind.parameter_count() {
                assert!((got[j] - o[j]).abs() < 1e-8, "{kind:?} coef {j}");
            }
        }
    }

    #[test]
    fn too_few_points_is_none() {
        let pts = ring_samples(|x, y| x * y, 4, 0.5);
        assert!(fit_points(&pts, FitKind::Extended).is_none());
        let pts = ring_samples(|x, y| x * y, 3, 0.5);
        assert!(fit_points(&pts, FitKind::Simple).is_some());
    }

    #[test]
    fn frame_examples() {
        let f = LocalFrame::new(Point::origin(), Vec3::z());
        assert_relative_eq!(f.rows[0], Vec3::x());
        assert_relative_eq!(f.rows[1], Vec3::y());
        assert_relative_eq!(f.rows[2], Vec3::z());

        let f = LocalFrame::new(Point::origin(), Vec3::x());
        let r = f.rotation();
        assert!((r * r.transpose() - Matrix3::identity()).norm() < 1e-12);

        let h = 2.0f64.sqrt() / 2.0;
        let f = LocalFrame::new(Point::origin(), Vec3::new(0.0, h, h));
        assert_relative_eq!(f.rows[0], Vec3::x(), epsilon = 1e-15);
        assert_relative_eq!(f.rows[1], Vec3::new(0.0, h, h).cross(&Vec3::x()), epsilon = 1e-15);
    }

    #[test]
    fn curvature_formulas() {
        let frame = LocalFrame::new(Point::origin(), Vec3::z());
        let mk = |kind, a, b, c, d, e| QuadricFit {
            kind,
            a,
            b,
            c,
            d,
            e,
            residual_rms: 0.0,
        };
        let q = curvatures_from_quadric(&mk(FitKind::Simple, 1.0, 0.0, 1.0, 0.0, 0.0), &frame);
        assert_eq!((q.k1, q.k2, q.kgi, q.khi), (2.0, 2.0, 4.0, 2.0));
        let q = curvatures_from_quadric(&mk(FitKind::Simple, 1.0, 0.0, -1.0, 0.0, 0.0), &frame);
        assert_eq!((q.k1, q.k2, q.kgi, q.khi), (2.0, -2.0, -4.0, 0.0));
        let q = curvatures_from_quadric(&mk(FitKind::Extended, 1.0, 0.0, 1.0, 0.0, 0.0), &frame);
        assert_eq!((q.kgi, q.khi), (4.0, 2.0));
        assert_relative_eq!(q.normal.unwrap(), Vec3::z());
    }

    #[test]
    fn normal_estimates() {
        let g = fixtures::grid(3, 3, 1.0);
        let adj = Adjacency::build(&g);
        let star = adj.star(&g, 4);
        for mode in [NormalMode::AngleWeightedAverage, NormalMode::LsqPlane] {
            let n = estimate_normal(&star, mode).unwrap();
            assert_relative_eq!(n, Vec3::z(), epsilon = 1e-12);
        }

        let s = fixtures::icosphere(3);
        let adj = Adjacency::build(&s);
        let n = estimate_normal(&adj.star(&s, 5), NormalMode::AngleWeightedAverage).unwrap();
        assert!((n - Vec3::z()).norm() < 1e-6);

        let t = fixtures::tetrahedron();
        let adj = Adjacency::build(&t);
        let centroid: Vec3 = t.vertices().iter().map(|p| p.coords).sum::<Vec3>() / 4.0;
        let n = estimate_normal(&adj.star(&t, 3), NormalMode::AngleWeightedAverage).unwrap();
        assert_relative_eq!(n, (t.position(3).coords - centroid).normalize(), epsilon = 1e-12);
    }

    #[test]
    fn lsq_plane_rejects_colinear_ring() {
        let pts = vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(2.0, 0.0, 0.0),
            Point::new(3.0, 0.0, 0.0),
        ];
        assert!(plane_normal(&pts).is_none());
    }

    #[test]
    fn sphere_quadric_curvature() {
        let s = fixtures::icosphere(3);
        let adj = Adjacency::build(&s);
        for v in 0..s.vertex_count() {
            let q = quadric_curvature_at(&s, &adj, v, FitKind::Extended).unwrap();
            assert!((q.kgi - 1.0).abs() < 0.1, "vertex {v}: {}", q.kgi);
            assert!((q.khi.abs() - 1.0).abs() < 0.1, "vertex {v}: {}", q.khi);
        }
    }
}
