use super::Mesh;
use crate::star::{Ring, VertexStar};
use std::collections::HashMap;

/// Undirected edge key with the smaller vertex id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeKey(pub usize, pub usize);

impl EdgeKey {
    pub fn new(a: usize, b: usize) -> Self {
        if a < b {
            Self(a, b)
        } else {
            Self(b, a)
        }
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0 == v || self.1 == v
    }
}

/// Vertex/face/edge incidence for an immutable mesh.
#[derive(Debug, Clone)]
pub struct Adjacency {
    vertex_faces: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(EdgeKey, Vec<usize>)>,
    edge_index: HashMap<EdgeKey, usize>,
    rings: Vec<Ring>,
    degenerate_eps: f64,
    degenerate_faces: Vec<usize>,
}

impl Adjacency {
    pub fn build(mesh: &Mesh) -> Self {
        let n = mesh.vertex_count();
        let mut vertex_faces = vec![Vec::new(); n];
        let mut edge_faces: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
        for (fi, f) in mesh.faces().iter().enumerate() {
            for k in 0..3 {
                vertex_faces[f[k]].push(fi);
                edge_faces
                    .entry(EdgeKey::new(f[k], f[(k + 1) % 3]))
                    .or_default()
                    .push(fi);
            }
        }
        let mut edges: Vec<(EdgeKey, Vec<usize>)> = edge_faces.into_iter().collect();
        edges.sort_unstable_by_key(|(k, _)| *k);
        let edge_index = edges.iter().enumerate().map(|(i, (k, _))| (*k, i)).collect();

        let mut neighbors = vec![Vec::new(); n];
        for (EdgeKey(a, b), _) in &edges {
            neighbors[*a].push(*b);
            neighbors[*b].push(*a);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }

        let rings = (0..n)
            .map(|v| {
                let faces: Vec<(usize, [usize; 3])> = vertex_faces[v]
                    .iter()
                    .map(|&f| (f, mesh.faces()[f]))
                    .collect();
                Ring::order(v, &faces)
            })
            .collect();

        let degenerate_eps = mesh.degenerate_area_threshold();
        let degenerate_faces = (0..mesh.face_count())
            .filter(|&f| mesh.face_area(f) < degenerate_eps)
            .collect();

        Self {
            vertex_faces,
            neighbors,
            edges,
            edge_index,
            rings,
            degenerate_eps,
            degenerate_faces,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_faces.len()
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    /// Sorted neighbor ids of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    pub fn valence(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    /// All edges sorted by key, each with its incident faces.
    pub fn edges(&self) -> &[(EdgeKey, Vec<usize>)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_faces(&self, a: usize, b: usize) -> &[usize] {
        match self.edge_index.get(&EdgeKey::new(a, b)) {
            Some(&i) => &self.edges[i].1,
            None => &[],
        }
    }

    pub fn ring(&self, v: usize) -> &Ring {
        &self.rings[v]
    }

    /// Area threshold below which faces count as degenerate.
    pub fn degenerate_eps(&self) -> f64 {
        self.degenerate_eps
    }

    /// Faces whose area falls under [`Adjacency::degenerate_eps`].
    pub fn degenerate_faces(&self) -> &[usize] {
        &self.degenerate_faces
    }

    /// Geometric view of the 1-ring around `v`.
    pub fn star<'a>(&self, mesh: &'a Mesh, v: usize) -> VertexStar<'a> {
        VertexStar::from_ring(
            self.rings[v].clone(),
            mesh.vertices(),
            mesh.faces(),
            self.degenerate_eps,
        )
    }

    /// Vertices at graph distance 1 or 2 from `v`, excluding `v`, sorted.
    pub fn two_ring(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.neighbors[v]
            .iter()
            .flat_map(|&u| self.neighbors[u].iter().copied().chain(std::iter::once(u)))
            .filter(|&u| u != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn tetrahedron_is_complete() {
        let m = fixtures::tetrahedron();
        let adj = Adjacency::build(&m);
        for v in 0..4 {
            assert_eq!(adj.valence(v), 3);
        }
        assert_eq!(adj.edge_count(), 6);
        assert!(adj.edges().iter().all(|(_, f)| f.len() == 2));
    }

    #[test]
    fn grid_center_has_six_faces() {
        let m = fixtures::grid(3, 3, 1.0);
        let adj = Adjacency::build(&m);
        assert_eq!(m.face_count(), 8);
        assert_eq!(adj.vertex_faces(4).len(), 6);
    }

    #[test]
    fn shared_edge_counts() {
        let m = fixtures::two_triangles();
        let adj = Adjacency::build(&m);
        let counts: Vec<usize> = adj.edges().iter().map(|(_, f)| f.len()).collect();
        assert_eq!(counts.iter().filter(|&&c| c == 2).count(), 1);
        assert_eq!(counts.iter().filter(|&&c| c == 1).count(), 4);
    }

    #[test]
    fn neighbor_relation_is_symmetric() {
        let m = fixtures::icosphere(2);
        let adj = Adjacency::build(&m);
        for v in 0..m.vertex_count() {
            for &u in adj.neighbors(v) {
                assert!(adj.neighbors(u).contains(&v));
            }
        }
    }

    #[test]
    fn edge_face_incidences_sum_to_three_per_face() {
        let m = fixtures::torus(12, 8, 1.0, 0.3);
        let adj = Adjacency::build(&m);
        let total: usize = adj.edges().iter().map(|(_, f)| f.len()).sum();
        assert_eq!(total, 3 * m.face_count());
    }
}
