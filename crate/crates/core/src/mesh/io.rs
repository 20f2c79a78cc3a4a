//! OBJ and OFF mesh file I/O.
//!
//! OBJ parsing honors only `v` and `f` records; normals, texture
//! coordinates, groups, and materials are ignored. Output is OBJ with
//! 6-decimal fixed-point vertex coordinates.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use super::TriMesh;
use crate::error::{Error, Result};

/// Loads a mesh, dispatching on the file extension (`.off` for OFF,
/// anything else parsed as OBJ).
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match ext.as_deref() {
        Some("off") => parse_off(path, &text),
        _ => parse_obj(path, &text),
    }
}

/// Parses OBJ text.
pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(path, &text)
}

/// Parses OFF text.
pub fn load_off(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_off(path, &text)
}

/// Writes OBJ with 1-based face indices and `%.6f` vertex coordinates.
pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(mesh.vertices.len() * 32);
    for p in &mesh.vertices {
        out.push_str(&format!("v {:.6} {:.6} {:.6}\n", p.x, p.y, p.z));
    }
    for f in &mesh.faces {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

fn parse_obj(path: &Path, text: &str) -> Result<TriMesh> {
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces: Vec<[u32; 3]> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let coords: Vec<f64> = parts
                    .clone()
                    .take(3)
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| Error::parse(path, lineno, format!("bad coordinate `{t}`")))
                    })
                    .collect::<Result<_>>()?;
                if coords.len() != 3 {
                    return Err(Error::parse(path, lineno, "vertex needs 3 coordinates"));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let refs: Vec<&str> = parts.collect();
                if refs.len() != 3 {
                    return Err(Error::parse(path, lineno, "non-triangular face"));
                }
                let mut idx = [0u32; 3];
                for (k, r) in refs.iter().enumerate() {
                    // `f v`, `f v/t`, `f v/t/n`, `f v//n`: the leading field
                    // is the vertex index, 1-based.
                    let first = r.split('/').next().unwrap_or("");
                    let v: i64 = first
                        .parse()
                        .map_err(|_| Error::parse(path, lineno, format!("bad face index `{r}`")))?;
                    if v < 1 || v as usize > vertices.len() {
                        return Err(Error::parse(
                            path,
                            lineno,
                            format!("face index {v} out of range"),
                        ));
                    }
                    idx[k] = (v - 1) as u32;
                }
                if idx[0] == idx[1] || idx[1] == idx[2] || idx[0] == idx[2] {
                    return Err(Error::parse(path, lineno, "degenerate face"));
                }
                faces.push(idx);
            }
            _ => {} // vn, vt, o, g, s, usemtl, mtllib: ignored
        }
    }
    TriMesh::new(vertices, faces)
}

fn parse_off(path: &Path, text: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (lineno, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty OFF file"))?;
    if header != "OFF" {
        return Err(Error::parse(path, lineno, "missing OFF header"));
    }
    let (lineno, counts) = lines
        .next()
        .ok_or_else(|| Error::parse(path, lineno, "missing OFF counts"))?;
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::parse(path, lineno, format!("bad count `{t}`")))
        })
        .collect::<Result<_>>()?;
    if nums.len() < 2 {
        return Err(Error::parse(path, lineno, "OFF counts need V and F"));
    }
    let (nv, nf) = (nums[0], nums[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, "unexpected end of OFF vertices"))?;
        let coords: Vec<f64> = line
            .split_whitespace()
            .take(3)
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::parse(path, lineno, format!("bad coordinate `{t}`")))
            })
            .collect::<Result<_>>()?;
        if coords.len() != 3 {
            return Err(Error::parse(path, lineno, "vertex needs 3 coordinates"));
        }
        vertices.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 0, "unexpected end of OFF faces"))?;
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::parse(path, lineno, format!("bad face index `{t}`")))
            })
            .collect::<Result<_>>()?;
        if nums.first() != Some(&3) {
            return Err(Error::parse(path, lineno, "non-triangular face"));
        }
        if nums.len() < 4 {
            return Err(Error::parse(path, lineno, "truncated face record"));
        }
        let mut idx = [0u32; 3];
        for k in 0..3 {
            let v = nums[k + 1];
            if v < 0 || v as usize >= vertices.len() {
                return Err(Error::parse(path, lineno, format!("face index {v} out of range")));
            }
            idx[k] = v as u32;
        }
        faces.push(idx);
    }
    TriMesh::new(vertices, faces)
}
