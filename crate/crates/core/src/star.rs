//! Ordered 1-rings and the local geometry every per-vertex estimator uses.

use crate::mesh::{corner_angle, triangle_area, triangle_normal, Point, Vec3};

/// Shape of the wedge graph around a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RingKind {
    /// No incident faces.
    Isolated,
    /// Incident faces form one closed cycle.
    Closed,
    /// Incident faces form one open fan.
    Open,
    /// Anything else: an edge with more than two faces, several fans, ...
    NonManifold,
}

/// Incident faces of one vertex, in fan order when the star is manifold.
///
/// For `Closed` rings `vertices.len() == faces.len()` and face `k` spans
/// `vertices[k] -> vertices[k + 1 mod n]`. For `Open` rings there is one
/// more vertex than faces. For `NonManifold` rings `vertices` is the sorted
/// neighbor set and `wedges` follow each face's own winding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ring {
    pub center: usize,
    pub kind: RingKind,
    pub vertices: Vec<usize>,
    pub faces: Vec<usize>,
    /// `(a, b)` ring vertices spanned by each face, aligned with `faces`.
    pub wedges: Vec<(usize, usize)>,
}

impl Ring {
    /// Orders the faces around `center`. `faces` pairs each face id with its
    /// vertex triple. Orientation follows the first face's winding, so
    /// inconsistently wound fans are still ordered.
    pub fn order(center: usize, faces: &[(usize, [usize; 3])]) -> Ring {
        if faces.is_empty() {
            return Ring {
                center,
                kind: RingKind::Isolated,
                vertices: Vec::new(),
                faces: Vec::new(),
                wedges: Vec::new(),
            };
        }
        let wedges: Vec<(usize, usize)> = faces
            .iter()
            .map(|(_, t)| {
                let p = t.iter().position(|&v| v == center).expect("face lacks center");
                (t[(p + 1) % 3], t[(p + 2) % 3])
            })
            .collect();

        // node -> incident wedge indices
        let mut nodes: Vec<(usize, Vec<usize>)> = Vec::new();
        for (wi, &(a, b)) in wedges.iter().enumerate() {
            for v in [a, b] {
                match nodes.iter_mut().find(|(n, _)| *n == v) {
                    Some((_, ws)) => ws.push(wi),
                    None => nodes.push((v, vec![wi])),
                }
            }
        }
        let non_manifold = |wedges: Vec<(usize, usize)>| {
            let mut vertices: Vec<usize> = nodes.iter().map(|(n, _)| *n).collect();
            vertices.sort_unstable();
            Ring {
                center,
                kind: RingKind::NonManifold,
                vertices,
                faces: faces.iter().map(|(f, _)| *f).collect(),
                wedges,
            }
        };
        if nodes.iter().any(|(_, ws)| ws.len() > 2) {
            return non_manifold(wedges);
        }
        let ends: Vec<usize> = nodes
            .iter()
            .filter(|(_, ws)| ws.len() == 1)
            .map(|(n, _)| *n)
            .collect();
        let (kind, start, first_wedge) = match ends.len() {
            0 => (RingKind::Closed, wedges[0].0, 0),
            2 => {
                // Prefer the endpoint that starts its wedge in winding order.
                let pick = ends
                    .iter()
                    .copied()
                    .find(|&e| wedges.iter().any(|w| w.0 == e))
                    .unwrap_or(ends[0].min(ends[1]));
                let w = nodes.iter().find(|(n, _)| *n == pick).unwrap().1[0];
                (RingKind::Open, pick, w)
            }
            _ => return non_manifold(wedges),
        };

        let mut used = vec![false; wedges.len()];
        let mut order_v = vec![start];
        let mut order_f = Vec::with_capacity(wedges.len());
        let mut order_w = Vec::with_capacity(wedges.len());
        let mut cur = start;
        let mut next_w = Some(first_wedge);
        while let Some(wi) = next_w {
            used[wi] = true;
            let (a, b) = wedges[wi];
            let other = if a == cur { b } else { a };
            order_f.push(faces[wi].0);
            order_w.push((cur, other));
            cur = other;
            next_w = nodes
                .iter()
                .find(|(n, _)| *n == cur)
                .and_then(|(_, ws)| ws.iter().copied().find(|&w| !used[w]));
            if next_w.is_some() || kind == RingKind::Open {
                order_v.push(cur);
            }
        }
        if order_f.len() != wedges.len() {
            return non_manifold(wedges);
        }
        if kind == RingKind::Closed {
            // The walk returns to `start`, which is already recorded.
            debug_assert_eq!(cur, start);
            order_v.truncate(order_f.len());
        }
        Ring {
            center,
            kind,
            vertices: order_v,
            faces: order_f,
            wedges: order_w,
        }
    }

    pub fn is_manifold(&self) -> bool {
        matches!(self.kind, RingKind::Closed | RingKind::Open)
    }
}

/// One incident face seen from the star center.
#[derive(Debug, Clone, Copy)]
pub struct Wedge {
    pub face: usize,
    /// The face's own vertex triple (true winding).
    pub tri: [usize; 3],
    /// Ring vertices spanned, in ring order.
    pub a: usize,
    pub b: usize,
    pub area: f64,
    pub degenerate: bool,
}

/// A vertex with its ordered 1-ring and the positions needed to measure it.
#[derive(Debug, Clone)]
pub struct VertexStar<'a> {
    positions: &'a [Point],
    ring: Ring,
    wedges: Vec<Wedge>,
}

impl<'a> VertexStar<'a> {
    pub fn from_ring(
        ring: Ring,
        positions: &'a [Point],
        faces: &[[usize; 3]],
        degenerate_eps: f64,
    ) -> Self {
        let wedges = ring
            .faces
            .iter()
            .zip(&ring.wedges)
            .map(|(&f, &(a, b))| Self::make_wedge(positions, f, faces[f], a, b, degenerate_eps))
            .collect();
        Self {
            positions,
            ring,
            wedges,
        }
    }

    /// Builds a star from explicit `(face id, triple)` pairs; used by code that
    /// keeps its own face storage.
    pub fn from_faces(
        center: usize,
        positions: &'a [Point],
        faces: &[(usize, [usize; 3])],
        degenerate_eps: f64,
    ) -> Self {
        let ring = Ring::order(center, faces);
        let wedges = ring
            .faces
            .iter()
            .zip(&ring.wedges)
            .map(|(&f, &(a, b))| {
                let tri = faces.iter().find(|(id, _)| *id == f).unwrap().1;
                Self::make_wedge(positions, f, tri, a, b, degenerate_eps)
            })
            .collect();
        Self {
            positions,
            ring,
            wedges,
        }
    }

    fn make_wedge(
        positions: &[Point],
        face: usize,
        tri: [usize; 3],
        a: usize,
        b: usize,
        eps: f64,
    ) -> Wedge {
        let area = triangle_area(&positions[tri[0]], &positions[tri[1]], &positions[tri[2]]);
        Wedge {
            face,
            tri,
            a,
            b,
            area,
            degenerate: area < eps,
        }
    }

    pub fn center(&self) -> usize {
        self.ring.center
    }

    pub fn center_pos(&self) -> Point {
        self.positions[self.ring.center]
    }

    pub fn pos(&self, v: usize) -> Point {
        self.positions[v]
    }

    pub fn kind(&self) -> RingKind {
        self.ring.kind
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    /// Neighbor ids, ordered for manifold stars.
    pub fn neighbors(&self) -> &[usize] {
        &self.ring.vertices
    }

    pub fn wedges(&self) -> &[Wedge] {
        &self.wedges
    }

    /// Non-degenerate wedges only.
    pub fn live_wedges(&self) -> impl Iterator<Item = &Wedge> + '_ {
        self.wedges.iter().filter(|w| !w.degenerate)
    }

    pub fn face_count(&self) -> usize {
        self.wedges.len()
    }

    pub fn degenerate_count(&self) -> usize {
        self.wedges.iter().filter(|w| w.degenerate).count()
    }

    /// Wedge angle at the center, radians.
    pub fn wedge_angle(&self, w: &Wedge) -> f64 {
        corner_angle(&self.center_pos(), &self.positions[w.a], &self.positions[w.b])
    }

    /// Angles of the wedge triangle at `a` and at `b`, radians.
    pub fn opposite_angles(&self, w: &Wedge) -> (f64, f64) {
        let c = self.center_pos();
        let pa = self.positions[w.a];
        let pb = self.positions[w.b];
        (corner_angle(&pa, &pb, &c), corner_angle(&pb, &c, &pa))
    }

    /// Unit normal of a wedge face following the face's own winding.
    pub fn face_normal(&self, w: &Wedge) -> Vec3 {
        let [i, j, k] = w.tri;
        triangle_normal(&self.positions[i], &self.positions[j], &self.positions[k])
    }

    /// Sum of wedge angles over non-degenerate faces, radians.
    pub fn angle_sum(&self) -> f64 {
        self.live_wedges().map(|w| self.wedge_angle(w)).sum()
    }

    /// Wedge-angle-weighted average of incident face normals (unit, or zero
    /// when the normals cancel).
    pub fn angle_weighted_normal(&self) -> Vec3 {
        let n: Vec3 = self
            .live_wedges()
            .map(|w| self.face_normal(w) * self.wedge_angle(w))
            .sum();
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vec3::zeros()
        }
    }

    /// Signed dihedral angle (degrees) across each edge `center - r` that is
    /// shared by exactly two star faces. Positive when the edge is convex
    /// with respect to the face normals.
    pub fn edge_dihedrals(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for &r in &self.ring.vertices {
            let mut it = self.wedges.iter().filter(|w| w.a == r || w.b == r);
            let (Some(w1), Some(w2), None) = (it.next(), it.next(), it.next()) else {
                continue;
            };
            if w1.degenerate || w2.degenerate {
                continue;
            }
            out.push((r, self.signed_dihedral(w1, w2, r)));
        }
        out
    }

    fn signed_dihedral(&self, w1: &Wedge, w2: &Wedge, r: usize) -> f64 {
        let n1 = self.face_normal(w1);
        let n2 = self.face_normal(w2);
        let angle = n1.cross(&n2).norm().atan2(n1.dot(&n2)).to_degrees();
        let opp2 = if w2.a == r { w2.b } else { w2.a };
        let side = n1.dot(&(self.positions[opp2] - self.center_pos()));
        if side > 0.0 {
            -angle
        } else {
            angle
        }
    }

    /// Number of incident edges `center - r` with exactly one star face.
    pub fn single_face_edge_count(&self) -> usize {
        self.ring
            .vertices
            .iter()
            .filter(|&&r| self.wedges.iter().filter(|w| w.a == r || w.b == r).count() == 1)
            .count()
    }
}
