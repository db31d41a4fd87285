//! Vertex decimation: characterize each vertex, test a distance criterion,
//! remove the vertex and retriangulate the hole.
//!
//! The decimator keeps original vertex indices, so survivors can be matched
//! back to the input exactly.

mod hole;

pub use hole::{newell_normal, triangulate_hole};

use crate::classify::{classify_star, feature_neighbors, VertexClass, DEFAULT_FEATURE_ANGLE};
use crate::error::{Error, Result};
use crate::mesh::{triangle_area, triangle_normal, Mesh, Point, Vec3};
use crate::star::VertexStar;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecimationParams {
    /// Plane-distance limit for simple vertices, as a fraction of the bbox diagonal.
    pub distance_threshold: f64,
    /// Line-distance limit for boundary and interior-edge vertices, same units.
    pub edge_distance_threshold: f64,
    /// Dihedral angle (degrees) above which an edge is a feature edge.
    pub feature_angle: f64,
    /// Stop once the retained vertex fraction reaches this value.
    pub target_fraction: Option<f64>,
    pub max_passes: usize,
}

impl Default for DecimationParams {
    fn default() -> Self {
        Self {
            distance_threshold: 0.01,
            edge_distance_threshold: 0.01,
            feature_angle: DEFAULT_FEATURE_ANGLE,
            target_fraction: None,
            max_passes: 10,
        }
    }
}

impl DecimationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_threshold >= 0.0 && self.edge_distance_threshold >= 0.0) {
            return Err(Error::InvalidParameter("thresholds must be >= 0".into()));
        }
        if let Some(t) = self.target_fraction {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "target fraction {t} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecimationReport {
    /// Original ids of deleted vertices, in deletion order.
    pub deleted: Vec<usize>,
    /// `survivors[new_id] = original_id`.
    pub survivors: Vec<usize>,
    pub passes: usize,
    pub final_face_count: usize,
    pub original_vertex_count: usize,
    pub retained_fraction: f64,
    /// Whether the target fraction (if any) was reached.
    pub reached_target: bool,
}

/// Distance from the star center to the plane fitted through its ring: the
/// normal is the area-weighted mean face normal, the anchor the ring vertices
/// weighted by adjacent star-face area.
pub fn distance_to_average_plane(star: &VertexStar) -> Result<f64> {
    if star.neighbors().len() < 3 {
        return Err(Error::DegenerateRing(star.center()));
    }
    let mut normal = Vec3::zeros();
    let mut anchor = Vec3::zeros();
    let mut weight = 0.0;
    for w in star.live_wedges() {
        normal += star.face_normal(w) * w.area;
        anchor += (star.pos(w.a).coords + star.pos(w.b).coords) * w.area;
        weight += 2.0 * w.area;
    }
    let normal = normal
        .try_normalize(0.0)
        .ok_or(Error::DegenerateRing(star.center()))?;
    if weight <= 0.0 {
        return Err(Error::DegenerateRing(star.center()));
    }
    let anchor = anchor / weight;
    Ok((star.center_pos().coords - anchor).dot(&normal).abs())
}

/// Perpendicular distance from `p` to the infinite line through `a` and `b`.
pub fn distance_to_boundary_edge(p: &Point, a: &Point, b: &Point) -> Result<f64> {
    let dir = b - a;
    let len = dir.norm();
    if len == 0.0 {
        return Err(Error::CoincidentEndpoints);
    }
    Ok((p - a).cross(&dir).norm() / len)
}

/// Geometric schedule of distance thresholds for [`decimate_progressive`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdRamp {
    pub start: f64,
    pub growth: f64,
    pub max: f64,
    pub passes_per_step: usize,
}

impl Default for ThresholdRamp {
    fn default() -> Self {
        Self {
            start: 1e-5,
            growth: 1.25,
            max: 0.5,
            passes_per_step: 4,
        }
    }
}

/// Mutable working copy used during decimation.
struct Decimator {
    positions: Vec<Point>,
    faces: Vec<[usize; 3]>,
    face_alive: Vec<bool>,
    vertex_faces: Vec<Vec<usize>>,
    vertex_alive: Vec<bool>,
    alive: usize,
    deleted: Vec<usize>,
    diag: f64,
    eps: f64,
    passes: usize,
}

enum Attempt {
    Deleted,
    Kept,
}

impl Decimator {
    fn new(mesh: &Mesh) -> Self {
        let mut vertex_faces = vec![Vec::new(); mesh.vertex_count()];
        for (fi, f) in mesh.faces().iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fi);
            }
        }
        Self {
            positions: mesh.vertices().to_vec(),
            faces: mesh.faces().to_vec(),
            face_alive: vec![true; mesh.face_count()],
            vertex_faces,
            vertex_alive: vec![true; mesh.vertex_count()],
            alive: mesh.vertex_count(),
            deleted: Vec::new(),
            diag: mesh.bbox_diagonal(),
            eps: mesh.degenerate_area_threshold(),
            passes: 0,
        }
    }

    fn retained_fraction(&self) -> f64 {
        self.alive as f64 / self.positions.len().max(1) as f64
    }

    fn target_reached(&self, target: Option<f64>) -> bool {
        target.is_some_and(|t| self.retained_fraction() <= t)
    }

    /// One sweep over vertices in ascending index order. Returns the number
    /// of deletions.
    fn pass(&mut self, plane: f64, edge: f64, feature_angle: f64, target: Option<f64>) -> usize {
        self.passes += 1;
        let mut count = 0;
        for v in 0..self.positions.len() {
            if self.target_reached(target) {
                break;
            }
            if !self.vertex_alive[v] || self.vertex_faces[v].is_empty() {
                continue;
            }
            if let Attempt::Deleted = self.try_delete(v, plane, edge, feature_angle) {
                count += 1;
            }
        }
        count
    }

    fn has_edge(&self, a: usize, b: usize) -> bool {
        self.vertex_faces[a]
            .iter()
            .any(|&f| self.faces[f].contains(&b))
    }

    fn has_face(&self, t: &[usize; 3]) -> bool {
        self.vertex_faces[t[0]].iter().any(|&f| {
            let g = self.faces[f];
            t.iter().all(|v| g.contains(v))
        })
    }

    fn try_delete(&mut self, v: usize, plane: f64, edge: f64, feature_angle: f64) -> Attempt {
        let star_faces: Vec<(usize, [usize; 3])> = self.vertex_faces[v]
            .iter()
            .map(|&f| (f, self.faces[f]))
            .collect();
        let star = VertexStar::from_faces(v, &self.positions, &star_faces, self.eps);
        if star.degenerate_count() > 0 {
            return Attempt::Kept;
        }
        let ring = star.neighbors().to_vec();
        let removed_normal: Vec3 = star
            .wedges()
            .iter()
            .map(|w| star.face_normal(w) * w.area)
            .sum();
        let center = self.positions[v];

        // Sub-loops to fill, and edges that the fill introduces.
        let loops: Vec<Vec<usize>> = match classify_star(&star, feature_angle) {
            VertexClass::SimpleSmooth => {
                let Ok(d) = distance_to_average_plane(&star) else {
                    return Attempt::Kept;
                };
                if d.is_nan() || d >= plane * self.diag {
                    return Attempt::Kept;
                }
                vec![ring.clone()]
            }
            VertexClass::Boundary => {
                if ring.len() < 3 {
                    return Attempt::Kept;
                }
                let (a, b) = (ring[0], ring[ring.len() - 1]);
                let Ok(d) = distance_to_boundary_edge(&center, &self.positions[a], &self.positions[b])
                else {
                    return Attempt::Kept;
                };
                if d.is_nan() || d >= edge * self.diag || self.has_edge(a, b) {
                    return Attempt::Kept;
                }
                vec![ring.clone()]
            }
            VertexClass::InteriorEdge => {
                let fe = feature_neighbors(&star, feature_angle);
                let (p, q) = (fe[0], fe[1]);
                let Ok(d) = distance_to_boundary_edge(&center, &self.positions[p], &self.positions[q])
                else {
                    return Attempt::Kept;
                };
                if d.is_nan() || d >= edge * self.diag {
                    return Attempt::Kept;
                }
                let ip = ring.iter().position(|&r| r == p).unwrap();
                let iq = ring.iter().position(|&r| r == q).unwrap();
                let (i, j) = (ip.min(iq), ip.max(iq));
                let first: Vec<usize> = ring[i..=j].to_vec();
                let second: Vec<usize> = ring[j..].iter().chain(&ring[..=i]).copied().collect();
                if first.len() < 3 || second.len() < 3 {
                    return Attempt::Kept;
                }
                vec![first, second]
            }
            VertexClass::Corner | VertexClass::Complex => return Attempt::Kept,
        };

        let mut new_faces = Vec::new();
        for lp in &loops {
            let pts: Vec<Point> = lp.iter().map(|&i| self.positions[i]).collect();
            let n = newell_normal(&pts);
            if n.dot(&removed_normal) <= 0.0 {
                return Attempt::Kept;
            }
            match triangulate_hole(lp, &self.positions, Some(n)) {
                Ok(tris) => new_faces.extend(tris),
                Err(_) => return Attempt::Kept,
            }
        }
        if !self.fill_is_valid(&new_faces, &ring, &removed_normal) {
            return Attempt::Kept;
        }

        for &f in &self.vertex_faces[v].clone() {
            self.face_alive[f] = false;
            for u in self.faces[f] {
                if u != v {
                    self.vertex_faces[u].retain(|&g| g != f);
                }
            }
        }
        self.vertex_faces[v].clear();
        for t in new_faces {
            let id = self.faces.len();
            self.faces.push(t);
            self.face_alive.push(true);
            for u in t {
                self.vertex_faces[u].push(id);
            }
        }
        self.vertex_alive[v] = false;
        self.alive -= 1;
        self.deleted.push(v);
        Attempt::Deleted
    }

    /// New faces must be non-degenerate, face the same side as the removed
    /// fan, and must not duplicate an existing edge or face.
    fn fill_is_valid(&self, tris: &[[usize; 3]], ring: &[usize], removed_normal: &Vec3) -> bool {
        let loop_edge = |a: usize, b: usize| {
            let m = ring.len();
            (0..m).any(|k| {
                let (x, y) = (ring[k], ring[(k + 1) % m]);
                (x == a && y == b) || (x == b && y == a)
            })
        };
        let mut introduced: Vec<(usize, usize)> = Vec::new();
        for t in tris {
            let (a, b, c) = (self.positions[t[0]], self.positions[t[1]], self.positions[t[2]]);
            if triangle_area(&a, &b, &c) < self.eps {
                return false;
            }
            if triangle_normal(&a, &b, &c).dot(removed_normal) <= 0.0 {
                return false;
            }
            if self.has_face(t) {
                return false;
            }
            for k in 0..3 {
                let (x, y) = (t[k], t[(k + 1) % 3]);
                if loop_edge(x, y) {
                    continue;
                }
                let key = (x.min(y), x.max(y));
                if !introduced.contains(&key) {
                    if self.has_edge(x, y) {
                        return false;
                    }
                    introduced.push(key);
                }
            }
        }
        true
    }

    fn finish(self, reached_target: bool) -> (Mesh, DecimationReport) {
        let n = self.positions.len();
        let survivors: Vec<usize> = (0..n).filter(|&v| self.vertex_alive[v]).collect();
        let mut remap = vec![usize::MAX; n];
        for (new, &old) in survivors.iter().enumerate() {
            remap[old] = new;
        }
        let vertices = survivors.iter().map(|&v| self.positions[v]).collect();
        let faces: Vec<[usize; 3]> = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, alive)| **alive)
            .map(|(f, _)| f.map(|v| remap[v]))
            .collect();
        let report = DecimationReport {
            retained_fraction: survivors.len() as f64 / n.max(1) as f64,
            deleted: self.deleted,
            final_face_count: faces.len(),
            survivors,
            passes: self.passes,
            original_vertex_count: n,
            reached_target,
        };
        let mesh = Mesh::new(vertices, faces).expect("decimation produced an invalid mesh");
        (mesh, report)
    }
}

/// Multi-pass decimation with fixed thresholds.
pub fn decimate(mesh: &Mesh, params: &DecimationParams) -> Result<(Mesh, DecimationReport)> {
    params.validate()?;
    let mut d = Decimator::new(mesh);
    let target = params.target_fraction;
    for _ in 0..params.max_passes {
        if d.target_reached(target) {
            break;
        }
        let removed = d.pass(
            params.distance_threshold,
            params.edge_distance_threshold,
            params.feature_angle,
            target,
        );
        if removed == 0 {
            break;
        }
    }
    let reached = target.is_none_or(|_| d.target_reached(target));
    Ok(d.finish(reached))
}

/// Decimation towards `target_fraction` with thresholds that grow along
/// `ramp`: each step runs passes at one threshold (used for both the plane
/// and the edge criterion) until nothing more is removed.
///
/// A run towards a smaller target replays a run towards a larger one and
/// then continues, so levels of one schedule are nested.
pub fn decimate_progressive(
    mesh: &Mesh,
    target_fraction: f64,
    feature_angle: f64,
    ramp: &ThresholdRamp,
) -> Result<(Mesh, DecimationReport)> {
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target fraction {target_fraction} outside (0, 1]"
        )));
    }
    if !(ramp.start > 0.0 && ramp.growth > 1.0) {
        return Err(Error::InvalidParameter("ramp must start > 0 and grow".into()));
    }
    let target = Some(target_fraction);
    let mut d = Decimator::new(mesh);
    let mut t = ramp.start;
    while t <= ramp.max && !d.target_reached(target) {
        for _ in 0..ramp.passes_per_step {
            if d.pass(t, t, feature_angle, target) == 0 || d.target_reached(target) {
                break;
            }
        }
        t *= ramp.growth;
    }
    let reached = d.target_reached(target);
    Ok(d.finish(reached))
}
