//! Indexed triangle meshes, file IO, adjacency and topology queries.

mod adjacency;
mod io;
mod topology;

pub use adjacency::{Adjacency, EdgeKey};
pub use io::{load, parse_mesh, write_obj, write_off, MeshFormat};
pub use topology::{
    crossed_edge_vertices, detect_boundary, detect_topological_errors, euler_characteristic,
    segment_distance, TopologySets,
};

use crate::error::{Error, Result};
use nalgebra::{Point3, Vector3};

pub type Point = Point3<f64>;
pub type Vec3 = Vector3<f64>;

/// Triangle mesh: vertex positions plus counter-clockwise index triples.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    faces: Vec<[usize; 3]>,
}

impl Mesh {
    /// Builds a mesh, checking that every index is in range and that no face
    /// repeats a vertex.
    pub fn new(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= n) {
                return Err(Error::Validation(format!(
                    "face {fi} references vertex {bad} but the mesh has {n} vertices"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::Validation(format!(
                    "face {fi} repeats a vertex index: {f:?}"
                )));
            }
        }
        Ok(Self { vertices, faces })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn position(&self, v: usize) -> Point {
        self.vertices[v]
    }

    /// Axis-aligned bounding box `(min, max)`. Empty meshes give the origin twice.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut it = self.vertices.iter();
        let Some(first) = it.next() else {
            return (Point::origin(), Point::origin());
        };
        let (mut lo, mut hi) = (*first, *first);
        for p in it {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.faces[f];
        triangle_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    /// Unit normal from the face winding; zero for degenerate faces.
    pub fn face_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.faces[f];
        triangle_normal(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    /// Area below which a face is treated as degenerate: 1e-12 of the squared
    /// bounding-box diagonal.
    pub fn degenerate_area_threshold(&self) -> f64 {
        let d = self.bbox_diagonal();
        1e-12 * d * d
    }

    /// Returns a copy with every vertex mapped through `f`. Faces are unchanged.
    pub fn map_vertices(&self, f: impl FnMut(&Point) -> Point) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
        }
    }
}

pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

pub fn triangle_normal(a: &Point, b: &Point, c: &Point) -> Vec3 {
    let n = (b - a).cross(&(c - a));
    let len = n.norm();
    if len > 0.0 {
        n / len
    } else {
        Vec3::zeros()
    }
}

/// Interior angle at `p` between rays towards `q` and `r`, in radians.
pub fn corner_angle(p: &Point, q: &Point, r: &Point) -> f64 {
    let u = q - p;
    let v = r - p;
    u.cross(&v).norm().atan2(u.dot(&v))
}
