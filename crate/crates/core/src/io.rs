//! Mesh file I/O: OBJ and OFF readers, parameterized OBJ/CSV writers.
//!
//! Faces with more than three vertices are rejected rather than
//! fan-triangulated; implicit triangulation would silently change the
//! Laplacian. All floats are written with 17 significant digits.

use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;

use crate::mesh::{MeshError, TriMesh};
use crate::util::{fmt_g17, P2, P3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UvFormat {
    /// OBJ with one `vt` record per vertex and faces written as `f i/i j/j k/k`.
    ObjVt,
    /// `index,u,v` rows (1-based indices), one per vertex.
    Csv,
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Topology(#[from] MeshError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("vertex {0} has no texture coordinate")]
    MissingUv(usize),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

/// Loads and validates a mesh from a byte stream in the given format.
pub fn load_mesh<R: Read>(source: R, format: MeshFormat) -> Result<TriMesh, IoError> {
    let (vertices, faces) = load_raw(source, format)?;
    Ok(TriMesh::new(vertices, faces)?)
}

/// Parses vertices and faces without topology validation, for diagnostics.
pub fn load_raw<R: Read>(
    source: R,
    format: MeshFormat,
) -> Result<(Vec<P3>, Vec<[usize; 3]>), IoError> {
    match format {
        MeshFormat::Obj => Ok(parse_obj(source)?.into_mesh_parts()),
        MeshFormat::Off => parse_off(source),
    }
}

/// Raw OBJ contents before topology validation.
pub struct ObjData {
    pub vertices: Vec<P3>,
    pub faces: Vec<[usize; 3]>,
    pub uvs: Vec<P2>,
    /// Per face, the `vt` indices if the face carried them.
    pub face_uvs: Vec<Option<[usize; 3]>>,
}

impl ObjData {
    fn into_mesh_parts(self) -> (Vec<P3>, Vec<[usize; 3]>) {
        (self.vertices, self.faces)
    }

    /// Per-vertex UVs, requiring every vertex to be covered by some `vt`
    /// reference.
    pub fn vertex_uvs(&self) -> Result<Vec<P2>, IoError> {
        let mut out = vec![None; self.vertices.len()];
        for (f, fuv) in self.faces.iter().zip(&self.face_uvs) {
            if let Some(t) = fuv {
                for (v, ti) in f.iter().zip(t.iter()) {
                    out[*v] = Some(self.uvs[*ti]);
                }
            }
        }
        out.into_iter()
            .enumerate()
            .map(|(v, uv)| uv.ok_or(IoError::MissingUv(v)))
            .collect()
    }
}

pub fn parse_obj<R: Read>(source: R) -> Result<ObjData, IoError> {
    let reader = BufReader::new(source);
    let mut data = ObjData {
        vertices: Vec::new(),
        faces: Vec::new(),
        uvs: Vec::new(),
        face_uvs: Vec::new(),
    };
    for (ln, line) in reader.lines().enumerate() {
        let ln = ln + 1;
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next().unwrap() {
            "v" => {
                let coords: Vec<f64> = parts
                    .clone()
                    .map(|p| p.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| parse_err(ln, format!("bad vertex coordinate: {e}")))?;
                if coords.len() < 3 {
                    return Err(parse_err(ln, "vertex needs 3 coordinates"));
                }
                data.vertices.push([coords[0], coords[1], coords[2]]);
            }
            "vt" => {
                let coords: Vec<f64> = parts
                    .clone()
                    .map(|p| p.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| parse_err(ln, format!("bad texture coordinate: {e}")))?;
                if coords.len() < 2 {
                    return Err(parse_err(ln, "vt needs 2 coordinates"));
                }
                data.uvs.push([coords[0], coords[1]]);
            }
            "f" => {
                let refs: Vec<&str> = parts.collect();
                if refs.len() != 3 {
                    return Err(parse_err(
                        ln,
                        format!(
                            "face has {} vertices; only triangles are accepted \
                             (pre-triangulate non-triangular faces explicitly)",
                            refs.len()
                        ),
                    ));
                }
                let mut vidx = [0usize; 3];
                let mut tidx: [Option<usize>; 3] = [None; 3];
                for (k, r) in refs.iter().enumerate() {
                    let mut fields = r.split('/');
                    let v = fields
                        .next()
                        .filter(|s| !s.is_empty())
                        .ok_or_else(|| parse_err(ln, "empty face index"))?;
                    let v: i64 = v
                        .parse()
                        .map_err(|e| parse_err(ln, format!("bad face index '{r}': {e}")))?;
                    if v < 1 {
                        return Err(parse_err(ln, format!("face index {v} must be positive")));
                    }
                    vidx[k] = (v - 1) as usize;
                    if let Some(t) = fields.next() {
                        if !t.is_empty() {
                            let t: i64 = t.parse().map_err(|e| {
                                parse_err(ln, format!("bad texture index '{r}': {e}"))
                            })?;
                            if t < 1 {
                                return Err(parse_err(ln, "texture index must be positive"));
                            }
                            tidx[k] = Some((t - 1) as usize);
                        }
                    }
                }
                data.faces.push(vidx);
                data.face_uvs.push(match tidx {
                    [Some(a), Some(b), Some(c)] => Some([a, b, c]),
                    _ => None,
                });
            }
            // Normals, groups, materials and smoothing are irrelevant here.
            "vn" | "o" | "g" | "s" | "usemtl" | "mtllib" | "l" | "p" => {}
            other => {
                return Err(parse_err(ln, format!("unrecognized record '{other}'")));
            }
        }
    }
    for (fi, (f, fuv)) in data.faces.iter().zip(&data.face_uvs).enumerate() {
        for &v in f {
            if v >= data.vertices.len() {
                return Err(parse_err(
                    0,
                    format!("face {} references vertex {} out of range", fi + 1, v + 1),
                ));
            }
        }
        if let Some(t) = fuv {
            for &ti in t {
                if ti >= data.uvs.len() {
                    return Err(parse_err(
                        0,
                        format!("face {} references vt {} out of range", fi + 1, ti + 1),
                    ));
                }
            }
        }
    }
    Ok(data)
}

fn parse_off<R: Read>(source: R) -> Result<(Vec<P3>, Vec<[usize; 3]>), IoError> {
    let reader = BufReader::new(source);
    // Strip comments/blank lines, keep 1-based line numbers for messages.
    let mut tokens: Vec<(usize, String)> = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        let stripped = line.split('#').next().unwrap_or("").trim().to_string();
        if !stripped.is_empty() {
            tokens.push((ln + 1, stripped));
        }
    }
    let mut it = tokens.into_iter();
    let (ln0, header) = it.next().ok_or_else(|| parse_err(1, "empty OFF file"))?;
    let counts_line = if header == "OFF" {
        it.next()
            .ok_or_else(|| parse_err(ln0, "missing counts line"))?
    } else {
        (ln0, header)
    };
    let counts: Vec<usize> = counts_line
        .1
        .split_whitespace()
        .map(|p| p.parse())
        .collect::<Result<_, _>>()
        .map_err(|e| parse_err(counts_line.0, format!("bad counts line: {e}")))?;
    if counts.len() < 2 {
        return Err(parse_err(counts_line.0, "counts line needs V F [E]"));
    }
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = it
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in vertex list"))?;
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(|p| p.parse())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad vertex: {e}")))?;
        if coords.len() < 3 {
            return Err(parse_err(ln, "vertex needs 3 coordinates"));
        }
        vertices.push([coords[0], coords[1], coords[2]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, line) = it
            .next()
            .ok_or_else(|| parse_err(0, "unexpected end of file in face list"))?;
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(|p| p.parse())
            .collect::<Result<_, _>>()
            .map_err(|e| parse_err(ln, format!("bad face: {e}")))?;
        if idx.is_empty() || idx[0] != 3 || idx.len() != 4 {
            return Err(parse_err(
                ln,
                "face line must be '3 i j k'; only triangles are accepted",
            ));
        }
        faces.push([idx[1], idx[2], idx[3]]);
    }
    Ok((vertices, faces))
}

/// Writes the parameterized mesh: OBJ with per-vertex `vt` records, or a CSV
/// of `(index, u, v)` rows. `uv` must hold one 2D point per vertex.
pub fn write_parameterized<W: Write>(
    mesh: &TriMesh,
    uv: &[P2],
    sink: W,
    format: UvFormat,
) -> Result<(), IoError> {
    assert_eq!(uv.len(), mesh.vertex_count(), "one UV per vertex required");
    let mut w = std::io::BufWriter::new(sink);
    match format {
        UvFormat::ObjVt => {
            for v in mesh.vertices() {
                writeln!(w, "v {} {} {}", fmt_g17(v[0]), fmt_g17(v[1]), fmt_g17(v[2]))?;
            }
            for t in uv {
                writeln!(w, "vt {} {}", fmt_g17(t[0]), fmt_g17(t[1]))?;
            }
            for f in mesh.faces() {
                writeln!(
                    w,
                    "f {}/{} {}/{} {}/{}",
                    f[0] + 1,
                    f[0] + 1,
                    f[1] + 1,
                    f[1] + 1,
                    f[2] + 1,
                    f[2] + 1
                )?;
            }
        }
        UvFormat::Csv => {
            writeln!(w, "index,u,v")?;
            for (i, t) in uv.iter().enumerate() {
                writeln!(w, "{},{},{}", i + 1, fmt_g17(t[0]), fmt_g17(t[1]))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads per-vertex UVs from a CSV written by [`write_parameterized`].
pub fn load_uv_csv<R: Read>(source: R, vertex_count: usize) -> Result<Vec<P2>, IoError> {
    let reader = BufReader::new(source);
    let mut out = vec![None; vertex_count];
    for (ln, line) in reader.lines().enumerate() {
        let ln = ln + 1;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (ln == 1 && line.starts_with("index")) {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(parse_err(ln, "expected 'index,u,v'"));
        }
        let idx: usize = parts[0]
            .trim()
            .parse()
            .map_err(|e| parse_err(ln, format!("bad index: {e}")))?;
        if idx < 1 || idx > vertex_count {
            return Err(parse_err(ln, format!("index {idx} out of range")));
        }
        let u: f64 = parts[1]
            .trim()
            .parse()
            .map_err(|e| parse_err(ln, format!("bad u: {e}")))?;
        let v: f64 = parts[2]
            .trim()
            .parse()
            .map_err(|e| parse_err(ln, format!("bad v: {e}")))?;
        out[idx - 1] = Some([u, v]);
    }
    out.into_iter()
        .enumerate()
        .map(|(v, uv)| uv.ok_or(IoError::MissingUv(v)))
        .collect()
}
