//! Plain xyz point lists: one `x y z` triple per line, `#` comments allowed.

use super::FormatError;
use std::io::{BufWriter, Write};
use std::path::Path;
use udfforge_core::math::Vec3;

pub fn save_xyz(points: &[Vec3], path: &Path) -> Result<(), FormatError> {
    let file = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in points {
        writeln!(w, "{} {} {}", p[0], p[1], p[2]).map_err(|e| FormatError::io(path, e))?;
    }
    w.flush().map_err(|e| FormatError::io(path, e))
}

pub fn load_xyz(path: &Path) -> Result<Vec<Vec3>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let mut p = [0.0; 3];
        for c in &mut p {
            *c = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| FormatError::parse(path, lineno + 1, "expected three floats"))?;
        }
        if parts.next().is_some() {
            return Err(FormatError::parse(path, lineno + 1, "trailing tokens"));
        }
        points.push(p);
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.xyz");
        let pts = vec![[0.5, -1.0, 2.25], [1e-9, 3.0, -0.125]];
        save_xyz(&pts, &path).unwrap();
        assert_eq!(load_xyz(&path).unwrap(), pts);
    }
}
