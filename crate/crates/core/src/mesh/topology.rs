use super::{Adjacency, EdgeKey, Mesh, Point};
use crate::star::RingKind;
use std::collections::BTreeSet;

/// Topological-error vertices (`errors`) and boundary vertices (`boundary`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopologySets {
    pub errors: BTreeSet<usize>,
    pub boundary: BTreeSet<usize>,
}

impl TopologySets {
    pub fn compute(mesh: &Mesh, adj: &Adjacency) -> Self {
        Self {
            errors: detect_topological_errors(mesh, adj),
            boundary: detect_boundary(adj),
        }
    }
}

/// Vertices touching at least one edge that belongs to a single face.
pub fn detect_boundary(adj: &Adjacency) -> BTreeSet<usize> {
    adj.edges()
        .iter()
        .filter(|(_, faces)| faces.len() == 1)
        .flat_map(|(EdgeKey(a, b), _)| [*a, *b])
        .collect()
}

/// Union of isolated vertices, dangling boundary-chain endpoints, complex
/// (non-manifold) vertices and endpoints of crossed edges.
pub fn detect_topological_errors(mesh: &Mesh, adj: &Adjacency) -> BTreeSet<usize> {
    let n = mesh.vertex_count();
    let mut errors = BTreeSet::new();
    let mut single_face_edges = vec![0usize; n];
    for (EdgeKey(a, b), faces) in adj.edges() {
        match faces.len() {
            1 => {
                single_face_edges[*a] += 1;
                single_face_edges[*b] += 1;
            }
            2 => {}
            _ => {
                errors.insert(*a);
                errors.insert(*b);
            }
        }
    }
    for (v, &single) in single_face_edges.iter().enumerate() {
        if adj.vertex_faces(v).is_empty() || single == 1 {
            errors.insert(v);
        }
        if adj.ring(v).kind == RingKind::NonManifold {
            errors.insert(v);
        }
    }
    errors.extend(crossed_edge_vertices(mesh, adj));
    errors
}

/// Endpoints of edge pairs that share no vertex yet come within
/// `1e-9 * bbox diagonal` of each other.
pub fn crossed_edge_vertices(mesh: &Mesh, adj: &Adjacency) -> BTreeSet<usize> {
    let tol = 1e-9 * mesh.bbox_diagonal();
    let pts = mesh.vertices();
    let mut boxes: Vec<(Point, Point, EdgeKey)> = adj
        .edges()
        .iter()
        .map(|(k, _)| {
            let (p, q) = (pts[k.0], pts[k.1]);
            let lo = p.inf(&q).map(|c| c - tol);
            let hi = p.sup(&q).map(|c| c + tol);
            (lo, hi, *k)
        })
        .collect();
    boxes.sort_by(|a, b| a.0.x.total_cmp(&b.0.x));

    let mut out = BTreeSet::new();
    let mut active: Vec<usize> = Vec::new();
    for i in 0..boxes.len() {
        let (lo, hi, key) = boxes[i];
        active.retain(|&j| boxes[j].1.x >= lo.x);
        for &j in &active {
            let (olo, ohi, other) = boxes[j];
            if key.contains(other.0) || key.contains(other.1) {
                continue;
            }
            let overlap = lo.y <= ohi.y && olo.y <= hi.y && lo.z <= ohi.z && olo.z <= hi.z;
            if !overlap {
                continue;
            }
            let d = segment_distance(&pts[key.0], &pts[key.1], &pts[other.0], &pts[other.1]);
            if d <= tol {
                out.extend([key.0, key.1, other.0, other.1]);
            }
        }
        active.push(i);
    }
    out
}

/// Minimum distance between segments `p1q1` and `p2q2`.
pub fn segment_distance(p1: &Point, q1: &Point, p2: &Point, q2: &Point) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    let eps = 1e-300;
    let (s, t);
    if a <= eps && e <= eps {
        return r.norm();
    }
    if a <= eps {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= eps {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm()
}

/// `V - E + F`, counting every vertex including isolated ones.
pub fn euler_characteristic(mesh: &Mesh, adj: &Adjacency) -> i64 {
    mesh.vertex_count() as i64 - adj.edge_count() as i64 + mesh.face_count() as i64
}
