use super::{Mesh, Point};
use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

/// Text mesh formats understood by [`parse_mesh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(Self::Obj),
            "off" => Some(Self::Off),
            _ => None,
        }
    }
}

/// Reads a mesh from disk, picking the format from the extension.
pub fn load(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        Error::InvalidParameter(format!("unknown mesh extension: {}", path.display()))
    })?;
    let bytes = std::fs::read(path)?;
    parse_mesh(&bytes, format)
}

/// Parses OBJ or OFF text. Polygons with more than three corners are
/// fan-triangulated around their first corner.
pub fn parse_mesh(bytes: &[u8], format: MeshFormat) -> Result<Mesh> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        message: format!("input is not valid UTF-8: {e}"),
    })?;
    let (vertices, polygons) = match format {
        MeshFormat::Obj => parse_obj(text)?,
        MeshFormat::Off => parse_off(text)?,
    };
    if vertices.is_empty() {
        return Err(Error::Validation("mesh has no vertices".into()));
    }
    if polygons.is_empty() {
        return Err(Error::Validation("mesh has no faces".into()));
    }
    let mut faces = Vec::with_capacity(polygons.len());
    for poly in polygons {
        for k in 1..poly.len() - 1 {
            faces.push([poly[0], poly[k], poly[k + 1]]);
        }
    }
    Mesh::new(vertices, faces)
}

fn parse_f64(tok: Option<&str>, line: usize, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what}: {tok:?}"),
    })
}

type Polygons = Vec<Vec<usize>>;

fn parse_obj(text: &str) -> Result<(Vec<Point>, Polygons)> {
    let mut vertices = Vec::new();
    let mut polygons = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut toks = content.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line, "x coordinate")?;
                let y = parse_f64(toks.next(), line, "y coordinate")?;
                let z = parse_f64(toks.next(), line, "z coordinate")?;
                vertices.push(Point::new(x, y, z));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in toks {
                    let head = tok.split('/').next().unwrap_or("");
                    let idx: i64 = head.parse().map_err(|_| Error::Parse {
                        line,
                        message: format!("invalid face index: {tok:?}"),
                    })?;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        return Err(Error::Validation(format!(
                            "line {line}: face index 0 is out of range"
                        )));
                    };
                    if resolved < 0 {
                        return Err(Error::Validation(format!(
                            "line {line}: face index {idx} is out of range"
                        )));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(Error::Parse {
                        line,
                        message: format!("face has {} corners, need at least 3", poly.len()),
                    });
                }
                polygons.push(poly);
            }
            _ => {}
        }
    }
    Ok((vertices, polygons))
}

fn parse_off(text: &str) -> Result<(Vec<Point>, Polygons)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty OFF file".into(),
    })?;
    let mut head_toks = header.split_whitespace();
    if head_toks.next() != Some("OFF") {
        return Err(Error::Parse {
            line: hline,
            message: format!("expected OFF header, found {header:?}"),
        });
    }
    // Counts may share the header line.
    let rest: Vec<&str> = head_toks.collect();
    let (cline, counts): (usize, Vec<&str>) = if rest.is_empty() {
        let (l, c) = lines.next().ok_or_else(|| Error::Parse {
            line: hline + 1,
            message: "missing counts line".into(),
        })?;
        (l, c.split_whitespace().collect())
    } else {
        (hline, rest)
    };
    let count = |k: usize, what: &str| -> Result<usize> {
        counts
            .get(k)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse {
                line: cline,
                message: format!("invalid {what} count"),
            })
    };
    let nv = count(0, "vertex")?;
    let nf = count(1, "face")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| Error::Parse {
            line: cline,
            message: format!("expected {nv} vertex lines"),
        })?;
        let mut t = l.split_whitespace();
        let x = parse_f64(t.next(), line, "x coordinate")?;
        let y = parse_f64(t.next(), line, "y coordinate")?;
        let z = parse_f64(t.next(), line, "z coordinate")?;
        vertices.push(Point::new(x, y, z));
    }
    let mut polygons = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines.next().ok_or_else(|| Error::Parse {
            line: cline,
            message: format!("expected {nf} face lines"),
        })?;
        let mut t = l.split_whitespace();
        let arity: usize = t
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Parse {
                line,
                message: "invalid face arity".into(),
            })?;
        if arity < 3 {
            return Err(Error::Parse {
                line,
                message: format!("face has {arity} corners, need at least 3"),
            });
        }
        let mut poly = Vec::with_capacity(arity);
        for _ in 0..arity {
            let idx = t
                .next()
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: "invalid or missing face index".into(),
                })?;
            poly.push(idx);
        }
        polygons.push(poly);
    }
    Ok((vertices, polygons))
}

/// Writes OBJ text. Coordinates use the shortest representation that
/// round-trips exactly.
pub fn write_obj<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    for p in mesh.vertices() {
        writeln!(out, "v {} {} {}", p.x, p.y, p.z)?;
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn write_off<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "OFF")?;
    writeln!(out, "{} {} 0", mesh.vertex_count(), mesh.face_count())?;
    for p in mesh.vertices() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    for f in mesh.faces() {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA: &str = "\
# regular tetrahedron, edge 1
v 0 0 0
v 1 0 0
v 0.5 0.8660254037844386 0
v 0.5 0.28867513459481287 0.816496580927726
f 1 3 2
f 1 2 4
f 2 3 4
f 3 1 4
";

    #[test]
    fn parses_tetrahedron() {
        let m = parse_mesh(TETRA.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.face_count(), 4);
        assert_eq!(m.faces()[0], [0, 2, 1]);
    }

    #[test]
    fn fan_triangulates_quads() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let m = parse_mesh(src.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn out_of_range_index_is_validation_error() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 9\n";
        let err = parse_mesh(src.as_bytes(), MeshFormat::Obj).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn malformed_vertex_reports_line() {
        let src = "v 0 0 0\nv 1 zero 0\n";
        match parse_mesh(src.as_bytes(), MeshFormat::Obj).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn ignores_texture_and_normal_indices() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf 1/1/1 2/1/1 3//1\n";
        let m = parse_mesh(src.as_bytes(), MeshFormat::Obj).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2]]);
    }

    #[test]
    fn parses_off() {
        let src = "OFF\n# comment\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n";
        let m = parse_mesh(src.as_bytes(), MeshFormat::Off).unwrap();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn off_quad_is_fanned() {
        let src = "OFF 4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let m = parse_mesh(src.as_bytes(), MeshFormat::Off).unwrap();
        assert_eq!(m.face_count(), 2);
    }

    #[test]
    fn off_rejects_bad_header() {
        assert!(matches!(
            parse_mesh(b"PLY\n", MeshFormat::Off),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_obj_is_rejected() {
        assert!(parse_mesh(b"# nothing\n", MeshFormat::Obj).is_err());
    }
}
