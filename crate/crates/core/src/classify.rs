//! Vertex taxonomy, curvature-sign surface shapes and risky-primitive screening.

use crate::mesh::{Adjacency, Mesh, TopologySets};
use crate::pipeline::FeatureTable;
use crate::star::{RingKind, VertexStar};
use serde::Serialize;
use std::collections::BTreeSet;

/// Default feature angle in degrees.
pub const DEFAULT_FEATURE_ANGLE: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum VertexClass {
    SimpleSmooth,
    InteriorEdge,
    Corner,
    Complex,
    Boundary,
}

impl VertexClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VertexClass::SimpleSmooth => "simple",
            VertexClass::InteriorEdge => "interior_edge",
            VertexClass::Corner => "corner",
            VertexClass::Complex => "complex",
            VertexClass::Boundary => "boundary",
        }
    }
}

/// Local surface type from the signs of Gaussian and mean curvature.
///
/// Labels follow the table's pairing of negative mean curvature with
/// "convex". With the mean curvature normal pointing inward on a sphere and
/// outward-facing triangles, convex bumps do come out with `kH < 0`; flipping
/// every face flips the convex/concave sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SurfaceShape {
    Planar,
    RidgeConvex,
    ValleyConcave,
    Convex,
    Concave,
    Saddle,
    SaddleRidge,
    SaddleValley,
}

impl SurfaceShape {
    pub fn as_str(self) -> &'static str {
        match self {
            SurfaceShape::Planar => "planar",
            SurfaceShape::RidgeConvex => "ridge_convex",
            SurfaceShape::ValleyConcave => "valley_concave",
            SurfaceShape::Convex => "convex",
            SurfaceShape::Concave => "concave",
            SurfaceShape::Saddle => "saddle",
            SurfaceShape::SaddleRidge => "saddle_ridge",
            SurfaceShape::SaddleValley => "saddle_valley",
        }
    }
}

/// Ring vertices joined to the center by a feature edge.
pub fn feature_neighbors(star: &VertexStar, feature_angle: f64) -> Vec<usize> {
    star.edge_dihedrals()
        .into_iter()
        .filter(|(_, a)| a.abs() > feature_angle)
        .map(|(r, _)| r)
        .collect()
}

pub fn classify_star(star: &VertexStar, feature_angle: f64) -> VertexClass {
    match star.kind() {
        RingKind::Isolated | RingKind::NonManifold => VertexClass::Complex,
        RingKind::Open => VertexClass::Boundary,
        RingKind::Closed => match feature_neighbors(star, feature_angle).len() {
            0 | 1 => VertexClass::SimpleSmooth,
            2 => VertexClass::InteriorEdge,
            _ => VertexClass::Corner,
        },
    }
}

pub fn classify_vertex(mesh: &Mesh, adj: &Adjacency, v: usize, feature_angle: f64) -> VertexClass {
    classify_star(&adj.star(mesh, v), feature_angle)
}

fn sign(x: f64, band: f64) -> i8 {
    if x.abs() <= band {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

pub fn surface_shape(kg: f64, kh: f64, zero_band: f64) -> SurfaceShape {
    match (sign(kg, zero_band), sign(kh, zero_band)) {
        (0, 0) => SurfaceShape::Planar,
        (0, -1) => SurfaceShape::RidgeConvex,
        (0, _) => SurfaceShape::ValleyConcave,
        (1, 1) => SurfaceShape::Concave,
        // kG > 0 forces kH != 0 on a smooth surface; a band-zero kH is
        // reported with the convex elliptic label.
        (1, _) => SurfaceShape::Convex,
        (_, 0) => SurfaceShape::Saddle,
        (_, -1) => SurfaceShape::SaddleRidge,
        (_, _) => SurfaceShape::SaddleValley,
    }
}

/// Zero band for curvature signs: `1e-6 * max |kG|` over the given values.
pub fn default_zero_band<'a>(kg: impl IntoIterator<Item = &'a Option<f64>>) -> f64 {
    1e-6 * kg
        .into_iter()
        .flatten()
        .fold(0.0f64, |m, k| m.max(k.abs()))
}

/// Risky vertices, split by the rule that caught them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RiskyPrimitives {
    pub topological_errors: BTreeSet<usize>,
    pub boundary: BTreeSet<usize>,
    pub valence_outliers: BTreeSet<usize>,
    pub collinear_edges: BTreeSet<usize>,
    pub flat: BTreeSet<usize>,
}

impl RiskyPrimitives {
    pub fn all(&self) -> BTreeSet<usize> {
        let mut out = self.topological_errors.clone();
        out.extend(&self.boundary);
        out.extend(&self.valence_outliers);
        out.extend(&self.collinear_edges);
        out.extend(&self.flat);
        out
    }
}

/// Collinearity tolerance for incident edge pairs, degrees.
const COLLINEAR_DEGREES: f64 = 1.0;

pub fn risky_primitives(
    mesh: &Mesh,
    adj: &Adjacency,
    topo: &TopologySets,
    table: &FeatureTable,
) -> RiskyPrimitives {
    let n = mesh.vertex_count();
    let valences: Vec<f64> = (0..n)
        .filter(|&v| !adj.vertex_faces(v).is_empty())
        .map(|v| adj.valence(v) as f64)
        .collect();
    let mut valence_outliers = BTreeSet::new();
    if !valences.is_empty() {
        let mean = valences.iter().sum::<f64>() / valences.len() as f64;
        let var = valences.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / valences.len() as f64;
        let limit = mean + 3.0 * var.sqrt();
        valence_outliers = (0..n)
            .filter(|&v| adj.valence(v) as f64 > limit)
            .collect();
    }

    let cos_tol = COLLINEAR_DEGREES.to_radians().cos();
    let collinear_edges = (0..n)
        .filter(|&v| {
            let p = mesh.position(v);
            let dirs: Vec<_> = adj
                .neighbors(v)
                .iter()
                .filter_map(|&u| (mesh.position(u) - p).try_normalize(0.0))
                .collect();
            dirs.iter()
                .enumerate()
                .any(|(i, a)| dirs[i + 1..].iter().any(|b| a.dot(b).abs() >= cos_tol))
        })
        .collect();

    let flat = table
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| match (r.kg, r.kh) {
            (Some(kg), Some(kh)) => kg.abs() <= table.zero_band && kh.abs() <= table.zero_band_kh,
            _ => false,
        })
        .map(|(v, _)| v)
        .collect();

    RiskyPrimitives {
        topological_errors: topo.errors.clone(),
        boundary: topo.boundary.clone(),
        valence_outliers,
        collinear_edges,
        flat,
    }
}
