//! Generated meshes used by tests, benchmarks and the experiment harness.
//!
//! All generators are deterministic; the noisy variants take an explicit seed.

use crate::mesh::{Mesh, Point, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

fn mesh(vertices: Vec<Point>, faces: Vec<[usize; 3]>) -> Mesh {
    Mesh::new(vertices, faces).expect("fixture generator produced an invalid mesh")
}

/// Regular tetrahedron with unit edges and outward winding.
pub fn tetrahedron() -> Mesh {
    let h = (2.0f64 / 3.0).sqrt();
    let s3 = 3.0f64.sqrt();
    mesh(
        vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.5, s3 / 2.0, 0.0),
            Point::new(0.5, s3 / 6.0, h),
        ],
        vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [2, 0, 3]],
    )
}

/// Equilateral triangle with unit edges.
pub fn single_triangle() -> Mesh {
    mesh(
        vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.5, 3.0f64.sqrt() / 2.0, 0.0),
        ],
        vec![[0, 1, 2]],
    )
}

/// Two triangles sharing the edge 1-2.
pub fn two_triangles() -> Mesh {
    mesh(
        vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(1.0, 1.0, 0.0),
        ],
        vec![[0, 1, 2], [1, 3, 2]],
    )
}

/// Three triangles hinged on the common edge 0-1.
pub fn three_fins() -> Mesh {
    mesh(
        vec![
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.5, 1.0, 0.0),
            Point::new(0.5, -0.5, 0.8),
            Point::new(0.5, -0.5, -0.8),
        ],
        vec![[0, 1, 2], [1, 0, 3], [1, 0, 4]],
    )
}

/// Planar `nx` x `ny` vertex grid in z = 0, quads split along the
/// (i, j)-(i+1, j+1) diagonal. Vertex `(i, j)` has index `j * nx + i`.
pub fn grid(nx: usize, ny: usize, spacing: f64) -> Mesh {
    height_field(nx, ny, |i, j| {
        Point::new(i as f64 * spacing, j as f64 * spacing, 0.0)
    })
}

/// Grid whose vertex positions come from `f(i, j)`, same connectivity as [`grid`].
pub fn height_field(nx: usize, ny: usize, f: impl Fn(usize, usize) -> Point) -> Mesh {
    assert!(nx >= 2 && ny >= 2);
    let mut verts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            verts.push(f(i, j));
        }
    }
    let mut faces = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let v00 = j * nx + i;
            let v10 = v00 + 1;
            let v01 = v00 + nx;
            let v11 = v01 + 1;
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    mesh(verts, faces)
}

/// Saddle `z = x^2 - y^2` sampled on an `n` x `n` grid over `[-extent, extent]^2`.
pub fn saddle(n: usize, extent: f64) -> Mesh {
    let step = 2.0 * extent / (n - 1) as f64;
    height_field(n, n, |i, j| {
        let x = -extent + i as f64 * step;
        let y = -extent + j as f64 * step;
        Point::new(x, y, x * x - y * y)
    })
}

/// Two planar panels meeting at a convex 90 degree crease along the x axis.
/// `nx` vertices along the crease, `half` rows of vertices on each side.
/// The crease row is `j = half`.
pub fn roof(nx: usize, half: usize) -> Mesh {
    height_field(nx, 2 * half + 1, |i, j| {
        let s = j as f64 - half as f64;
        Point::new(i as f64, s, -s.abs())
    })
}

/// Closed axis-aligned cube `[0, n]^3` with each face split into `n` x `n` quads.
pub fn cube(n: usize) -> Mesh {
    assert!(n >= 1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    let mut id = |c: [usize; 3], verts: &mut Vec<Point>| -> usize {
        *index.entry(c).or_insert_with(|| {
            verts.push(Point::new(c[0] as f64, c[1] as f64, c[2] as f64));
            verts.len() - 1
        })
    };
    for axis in 0..3 {
        for side in [0usize, n] {
            let (mut b, mut c) = ((axis + 1) % 3, (axis + 2) % 3);
            if side == 0 {
                std::mem::swap(&mut b, &mut c);
            }
            let at = |i: usize, j: usize| {
                let mut p = [0usize; 3];
                p[axis] = side;
                p[b] = i;
                p[c] = j;
                p
            };
            for j in 0..n {
                for i in 0..n {
                    let v00 = id(at(i, j), &mut verts);
                    let v10 = id(at(i + 1, j), &mut verts);
                    let v11 = id(at(i + 1, j + 1), &mut verts);
                    let v01 = id(at(i, j + 1), &mut verts);
                    faces.push([v00, v10, v11]);
                    faces.push([v00, v11, v01]);
                }
            }
        }
    }
    mesh(verts, faces)
}

/// Open fan: apex at height `h` over `valence` ring vertices on the unit
/// circle in z = 0. The apex is vertex 0.
pub fn pyramid(valence: usize, h: f64) -> Mesh {
    let mut verts = vec![Point::new(0.0, 0.0, h)];
    for k in 0..valence {
        let a = std::f64::consts::TAU * k as f64 / valence as f64;
        verts.push(Point::new(a.cos(), a.sin(), 0.0));
    }
    let faces = (0..valence)
        .map(|k| [0, 1 + k, 1 + (k + 1) % valence])
        .collect();
    mesh(verts, faces)
}

/// Unit icosphere after `subdivisions` rounds of 1-to-4 splitting. One of
/// the base vertices sits at the north pole (0, 0, 1) and is vertex 5.
pub fn icosphere(subdivisions: usize) -> Mesh {
    let t = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    // Rotate about x so that (0, 1, t) lands on +z.
    let alpha = (1.0f64).atan2(t);
    let (sa, ca) = alpha.sin_cos();
    let mut verts: Vec<Point> = raw
        .iter()
        .map(|&(x, y, z)| {
            let p = Vec3::new(x, y * ca - z * sa, y * sa + z * ca).normalize();
            Point::from(p)
        })
        .collect();
    verts[5] = Point::new(0.0, 0.0, 1.0);
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let m = (verts[a].coords + verts[b].coords).normalize();
                verts.push(Point::from(m));
                verts.len() - 1
            })
        };
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    mesh(verts, faces)
}

/// Torus with major radius `major`, tube radius `minor`, `nu` segments
/// around the axis and `nv` around the tube.
pub fn torus(nu: usize, nv: usize, major: f64, minor: f64) -> Mesh {
    torus_with(nu, nv, major, minor, |_, _| 0.0)
}

fn torus_with(
    nu: usize,
    nv: usize,
    major: f64,
    minor: f64,
    offset: impl Fn(usize, usize) -> f64,
) -> Mesh {
    assert!(nu >= 3 && nv >= 3);
    let mut verts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = std::f64::consts::TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = std::f64::consts::TAU * j as f64 / nv as f64;
            let r = minor + offset(i, j);
            let ring = major + r * v.cos();
            verts.push(Point::new(ring * u.cos(), ring * u.sin(), r * v.sin()));
        }
    }
    let at = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let v00 = at(i, j);
            let v10 = at(i + 1, j);
            let v11 = at(i + 1, j + 1);
            let v01 = at(i, j + 1);
            faces.push([v00, v10, v11]);
            faces.push([v00, v11, v01]);
        }
    }
    mesh(verts, faces)
}

/// Torus whose tube radius is perturbed per vertex by uniform noise in
/// `[-amplitude, amplitude]`.
pub fn noisy_torus(nu: usize, nv: usize, major: f64, minor: f64, amplitude: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..nu * nv)
        .map(|_| rng.random_range(-amplitude..=amplitude))
        .collect();
    torus_with(nu, nv, major, minor, |i, j| noise[i * nv + j])
}

/// Icosphere with radial noise in `[-noise, noise]` and `spikes` randomly
/// chosen vertices pushed outward by the factor `1 + spike_height`.
pub fn spiked_icosphere(
    subdivisions: usize,
    spikes: usize,
    spike_height: f64,
    noise: f64,
    seed: u64,
) -> Mesh {
    let base = icosphere(subdivisions);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = base.vertex_count();
    let mut scale: Vec<f64> = (0..n)
        .map(|_| {
            if noise > 0.0 {
                1.0 + rng.random_range(-noise..=noise)
            } else {
                1.0
            }
        })
        .collect();
    for id in rand::seq::index::sample(&mut rng, n, spikes.min(n)) {
        scale[id] = 1.0 + spike_height;
    }
    let verts = base
        .vertices()
        .iter()
        .zip(&scale)
        .map(|(p, s)| Point::from(p.coords * *s))
        .collect();
    mesh(verts, base.faces().to_vec())
}

/// Unit sphere modulated by `1 + amplitude * sin(f x) sin(f y) sin(f z)`,
/// giving alternating elliptic bumps and hyperbolic saddles.
pub fn bumpy_sphere(subdivisions: usize, amplitude: f64, frequency: f64) -> Mesh {
    let base = icosphere(subdivisions);
    base.map_vertices(|p| {
        let r = 1.0
            + amplitude * (frequency * p.x).sin() * (frequency * p.y).sin() * (frequency * p.z).sin();
        Point::from(p.coords * r)
    })
}

/// Icosphere whose vertex `center` gets a fan of sliver triangles: every
/// edge of its 1-ring polygon is split by `splits` evenly spaced points,
/// and both adjacent faces are refanned through them. Returns the mesh and
/// the id of the high-valence vertex.
pub fn valence_spike(subdivisions: usize, center: usize, splits: usize) -> (Mesh, usize) {
    let base = icosphere(subdivisions);
    let faces = base.faces();
    let mut verts = base.vertices().to_vec();
    let mut removed = vec![false; faces.len()];
    let mut added = Vec::new();
    let star: Vec<usize> = (0..faces.len()).filter(|&f| faces[f].contains(&center)).collect();
    for &f in &star {
        let k = faces[f].iter().position(|&v| v == center).unwrap();
        let (x, y) = (faces[f][(k + 1) % 3], faces[f][(k + 2) % 3]);
        let outer = (0..faces.len())
            .find(|&g| g != f && faces[g].contains(&x) && faces[g].contains(&y))
            .expect("closed icosphere");
        let o = faces[outer].iter().copied().find(|&v| v != x && v != y).unwrap();
        let mut chain = vec![x];
        for j in 1..=splits {
            let t = j as f64 / (splits + 1) as f64;
            chain.push(verts.len());
            verts.push(verts[x] + (verts[y] - verts[x]) * t);
        }
        chain.push(y);
        for w in chain.windows(2) {
            added.push([center, w[0], w[1]]);
            added.push([w[1], w[0], o]);
        }
        removed[f] = true;
        removed[outer] = true;
    }
    let mut out: Vec<[usize; 3]> = (0..faces.len())
        .filter(|&f| !removed[f])
        .map(|f| faces[f])
        .collect();
    out.extend(added);
    (mesh(verts, out), center)
}

/// Applies uniform noise of the given amplitude to every coordinate.
pub fn jitter(mesh: &Mesh, amplitude: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mesh.map_vertices(|p| {
        let d = Vec3::new(
            rng_unit(&mut rng),
            rng_unit(&mut rng),
            rng_unit(&mut rng),
        );
        p + d * amplitude
    })
}

fn rng_unit(rng: &mut ChaCha8Rng) -> f64 {
    rng.random_range(-1.0..=1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for k in 0..4 {
            let m = icosphere(k);
            assert_eq!(m.vertex_count(), 10 * 4usize.pow(k as u32) + 2);
            assert_eq!(m.face_count(), 20 * 4usize.pow(k as u32));
            for p in m.vertices() {
                assert!((p.coords.norm() - 1.0).abs() < 1e-12);
            }
        }
        assert!((icosphere(2).position(5) - Point::new(0.0, 0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn icosphere_faces_point_outward() {
        let m = icosphere(2);
        for f in 0..m.face_count() {
            let [a, b, c] = m.faces()[f];
            let centroid = (m.position(a).coords + m.position(b).coords + m.position(c).coords) / 3.0;
            assert!(m.face_normal(f).dot(&centroid) > 0.0);
        }
    }

    #[test]
    fn torus_faces_point_outward() {
        let m = torus(16, 8, 1.0, 0.3);
        for f in 0..m.face_count() {
            let [a, b, c] = m.faces()[f];
            let centroid = (m.position(a).coords + m.position(b).coords + m.position(c).coords) / 3.0;
            let axis_pt = Vec3::new(centroid.x, centroid.y, 0.0).normalize();
            let outward = centroid - axis_pt;
            assert!(m.face_normal(f).dot(&outward) > 0.0);
        }
    }

    #[test]
    fn cube_is_closed_and_outward() {
        let m = cube(2);
        assert_eq!(m.vertex_count(), 26);
        assert_eq!(m.face_count(), 48);
        let c = Vec3::new(1.0, 1.0, 1.0);
        for f in 0..m.face_count() {
            let [a, b, d] = m.faces()[f];
            let centroid = (m.position(a).coords + m.position(b).coords + m.position(d).coords) / 3.0;
            assert!(m.face_normal(f).dot(&(centroid - c)) > 0.0);
        }
    }

    #[test]
    fn tetrahedron_faces_point_outward() {
        let m = tetrahedron();
        let c: Vec3 = m.vertices().iter().map(|p| p.coords).sum::<Vec3>() / 4.0;
        for f in 0..4 {
            let [a, ..] = m.faces()[f];
            assert!(m.face_normal(f).dot(&(m.position(a).coords - c)) > 0.0);
        }
    }

    #[test]
    fn noisy_generators_are_deterministic() {
        assert_eq!(noisy_torus(10, 6, 1.0, 0.3, 0.01, 3), noisy_torus(10, 6, 1.0, 0.3, 0.01, 3));
        assert_eq!(
            spiked_icosphere(2, 5, 0.2, 0.001, 9),
            spiked_icosphere(2, 5, 0.2, 0.001, 9)
        );
    }

    #[test]
    fn valence_spike_is_closed_and_oriented() {
        let (m, v) = valence_spike(2, 0, 3);
        let adj = crate::mesh::Adjacency::build(&m);
        assert_eq!(adj.valence(v), 5 * 4);
        let topo = crate::mesh::TopologySets::compute(&m, &adj);
        assert!(topo.boundary.is_empty() && topo.errors.is_empty());
        assert_eq!(crate::mesh::euler_characteristic(&m, &adj), 2);
    }
}
