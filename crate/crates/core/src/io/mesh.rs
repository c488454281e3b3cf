//! OBJ and ASCII PLY export of meshes and polyline stacks, with readers for
//! the same subset.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::MidSurfaceMesh;
use crate::scalar::Real;
use crate::trace::PolylineStack;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

/// Vertices and 0-based triangles read back from a file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
}

/// A polyline read back from an OBJ `l` record.
#[derive(Clone, Debug, PartialEq)]
pub struct RawPolyline {
    pub points: Vec<[f64; 3]>,
    pub closed: bool,
}

fn push_vertex(out: &mut String, p: [f64; 3]) {
    let _ = writeln!(out, "v {:.6} {:.6} {:.6}", p[0], p[1], p[2]);
}

pub fn mesh_to_obj<T: Real>(mesh: &MidSurfaceMesh<T>) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        push_vertex(&mut out, v.map(|c| c.to_f64_lossy()));
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

pub fn mesh_to_ply<T: Real>(mesh: &MidSurfaceMesh<T>) -> String {
    let mut out = String::from("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", mesh.vertex_count());
    out += "property float x\nproperty float y\nproperty float z\n";
    let _ = writeln!(out, "element face {}", mesh.triangle_count());
    out += "property list uchar int vertex_indices\nend_header\n";
    for v in &mesh.vertices {
        let p = v.map(|c| c.to_f64_lossy());
        let _ = writeln!(out, "{:.6} {:.6} {:.6}", p[0], p[1], p[2]);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    out
}

pub fn write_mesh<T: Real>(mesh: &MidSurfaceMesh<T>, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    let path = path.as_ref();
    let text = match format {
        MeshFormat::Obj => mesh_to_obj(mesh),
        MeshFormat::Ply => mesh_to_ply(mesh),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// OBJ with one `l` record per polyline; closed lines repeat their first index.
pub fn polylines_to_obj<T: Real>(stack: &PolylineStack<T>) -> String {
    let mut out = String::new();
    let mut records = String::new();
    let mut next = 1;
    for slice in &stack.slices {
        let z = stack.slice_z(slice.slice_index).to_f64_lossy();
        for line in &slice.polylines {
            for p in &line.points {
                push_vertex(&mut out, [p[0].to_f64_lossy(), p[1].to_f64_lossy(), z]);
            }
            if line.points.is_empty() {
                continue;
            }
            records.push('l');
            for k in 0..line.points.len() {
                let _ = write!(records, " {}", next + k);
            }
            if line.closed {
                let _ = write!(records, " {next}");
            }
            records.push('\n');
            next += line.points.len();
        }
    }
    out + &records
}

pub fn write_polylines<T: Real>(stack: &PolylineStack<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, polylines_to_obj(stack)).map_err(|e| Error::io(path, e))
}

fn parse_err(path: &Path, line: usize, reason: impl std::fmt::Display) -> Error {
    Error::Header { path: path.to_path_buf(), reason: format!("line {line}: {reason}") }
}

fn parse_point(path: &Path, line: usize, fields: &[&str]) -> Result<[f64; 3]> {
    if fields.len() < 3 {
        return Err(parse_err(path, line, "vertex needs three coordinates"));
    }
    let c = |i: usize| fields[i].parse::<f64>().map_err(|e| parse_err(path, line, e));
    Ok([c(0)?, c(1)?, c(2)?])
}

/// Resolves a 1-based (or negative, relative) OBJ index to 0-based.
fn obj_index(path: &Path, line: usize, tok: &str, count: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head.parse().map_err(|_| parse_err(path, line, format!("bad index '{tok}'")))?;
    let resolved = if i < 0 { count as i64 + i } else { i - 1 };
    if resolved < 0 || resolved as usize >= count {
        return Err(parse_err(path, line, format!("index {i} out of range")));
    }
    Ok(resolved as usize)
}

/// Reads `v` and triangular `f` records; other records are ignored.
pub fn read_obj(path: impl AsRef<Path>) -> Result<RawMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut mesh = RawMesh::default();
    for (n, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let rest: Vec<&str>;
        match fields.next() {
            Some("v") => {
                rest = fields.collect();
                mesh.vertices.push(parse_point(path, n + 1, &rest)?);
            }
            Some("f") => {
                rest = fields.collect();
                if rest.len() != 3 {
                    return Err(parse_err(path, n + 1, "only triangular faces are supported"));
                }
                let count = mesh.vertices.len();
                let mut t = [0; 3];
                for (k, tok) in rest.iter().enumerate() {
                    t[k] = obj_index(path, n + 1, tok, count)?;
                }
                mesh.triangles.push(t);
            }
            _ => {}
        }
    }
    Ok(mesh)
}

/// Reads `l` records back into polylines; a repeated first index marks a
/// closed line.
pub fn read_polylines(path: impl AsRef<Path>) -> Result<Vec<RawPolyline>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut vertices = Vec::new();
    let mut lines = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => vertices.push(parse_point(path, n + 1, &fields.collect::<Vec<_>>())?),
            Some("l") => {
                let mut idx =
                    fields.map(|tok| obj_index(path, n + 1, tok, vertices.len())).collect::<Result<Vec<_>>>()?;
                let closed = idx.len() > 2 && idx.first() == idx.last();
                if closed {
                    idx.pop();
                }
                lines.push(RawPolyline { points: idx.iter().map(|&i| vertices[i]).collect(), closed });
            }
            _ => {}
        }
    }
    Ok(lines)
}

/// Reads the ASCII PLY subset written by [`write_mesh`].
pub fn read_ply(path: impl AsRef<Path>) -> Result<RawMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (mut nv, mut nf) = (0, 0);
    if lines.next().map(|(_, l)| l.trim()) != Some("ply") {
        return Err(parse_err(path, 1, "missing 'ply' magic"));
    }
    for (n, line) in lines.by_ref() {
        let f: Vec<&str> = line.split_whitespace().collect();
        match f.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(parse_err(path, n + 1, format!("unsupported format {fmt}")))
            }
            ["element", "vertex", c] => nv = c.parse().map_err(|e| parse_err(path, n + 1, e))?,
            ["element", "face", c] => nf = c.parse().map_err(|e| parse_err(path, n + 1, e))?,
            ["end_header"] => break,
            _ => {}
        }
    }
    let mut mesh = RawMesh::default();
    for (n, line) in lines.by_ref().take(nv) {
        let f: Vec<&str> = line.split_whitespace().collect();
        mesh.vertices.push(parse_point(path, n + 1, &f)?);
    }
    for (n, line) in lines.take(nf) {
        let f: Vec<usize> =
            line.split_whitespace().map(|s| s.parse().map_err(|e| parse_err(path, n + 1, e))).collect::<Result<_>>()?;
        if f.len() != 4 || f[0] != 3 || f[1..].iter().any(|&i| i >= nv) {
            return Err(parse_err(path, n + 1, "expected a triangle with valid indices"));
        }
        mesh.triangles.push([f[1], f[2], f[3]]);
    }
    if mesh.vertices.len() != nv || mesh.triangles.len() != nf {
        return Err(parse_err(path, 0, "file ends before all elements were read"));
    }
    Ok(mesh)
}
