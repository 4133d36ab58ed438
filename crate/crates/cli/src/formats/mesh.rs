//! OBJ mesh export with a companion file for boundary loops.
//!
//! The main file carries `v`/`f` records. The companion repeats the vertex
//! block and encodes each boundary chain as an OBJ line element (`l`),
//! closing loops by repeating their first index.

use super::FormatError;
use std::io::{BufWriter, Write};
use std::path::Path;
use udfforge_core::geometry::{mesh_boundary_loops, Mesh};

pub fn save_obj(mesh: &Mesh, path: &Path) -> Result<(), FormatError> {
    let file = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| FormatError::io(path, e);
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2]).map_err(io_err)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Writes the boundary companion; returns the number of chains written.
pub fn save_boundary_obj(mesh: &Mesh, path: &Path) -> Result<usize, FormatError> {
    let loops = mesh_boundary_loops(mesh);
    let file = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| FormatError::io(path, e);
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", v[0], v[1], v[2]).map_err(io_err)?;
    }
    for l in &loops {
        let mut indices: Vec<String> = l.vertices.iter().map(|&v| (v + 1).to_string()).collect();
        if l.closed {
            if let Some(first) = l.vertices.first() {
                indices.push((first + 1).to_string());
            }
        }
        writeln!(w, "l {}", indices.join(" ")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(loops.len())
}

/// Minimal OBJ reader for round-trip tests: `v` and `f` records only.
pub fn load_obj(path: &Path) -> Result<Mesh, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = [0.0; 3];
                for c in &mut coord {
                    *c = parts
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| FormatError::parse(path, lineno, "bad vertex"))?;
                }
                vertices.push(coord);
            }
            Some("f") => {
                let mut tri = [0usize; 3];
                for t in &mut tri {
                    let idx: usize = parts
                        .next()
                        .and_then(|t| t.split('/').next())
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| FormatError::parse(path, lineno, "bad face"))?;
                    *t = idx - 1;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    Ok(Mesh::new(vertices, triangles))
}
