//! Grid volume export: a JSON sidecar plus a raw little-endian f32 volume.
//!
//! The raw file stores `nx * ny * nz` values x-major (z fastest), matching
//! the in-memory layout of [`udfforge_core::geometry::Grid`].

use super::FormatError;
use serde::{Deserialize, Serialize};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use udfforge_core::geometry::{Aabb, Grid};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSidecar {
    pub bbox: Aabb,
    pub resolution: [usize; 3],
    pub dtype: String,
}

/// Writes `<base>.vol` and `<base>.vol.json`; returns both paths.
pub fn save_grid(grid: &Grid, base: &Path) -> Result<(PathBuf, PathBuf), FormatError> {
    let vol_path = base.with_extension("vol");
    let sidecar_path = base.with_extension("vol.json");
    let sidecar = GridSidecar {
        bbox: grid.bbox,
        resolution: grid.resolution,
        dtype: "f32".into(),
    };
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| FormatError::invalid(&sidecar_path, e.to_string()))?;
    std::fs::write(&sidecar_path, json + "\n").map_err(|e| FormatError::io(&sidecar_path, e))?;
    let file = std::fs::File::create(&vol_path).map_err(|e| FormatError::io(&vol_path, e))?;
    let mut w = BufWriter::new(file);
    for &v in &grid.values {
        w.write_all(&(v as f32).to_le_bytes())
            .map_err(|e| FormatError::io(&vol_path, e))?;
    }
    w.flush().map_err(|e| FormatError::io(&vol_path, e))?;
    Ok((vol_path, sidecar_path))
}

/// Reads a volume back (used by tests and tooling).
pub fn load_grid(base: &Path) -> Result<(GridSidecar, Vec<f32>), FormatError> {
    let vol_path = base.with_extension("vol");
    let sidecar_path = base.with_extension("vol.json");
    let text =
        std::fs::read_to_string(&sidecar_path).map_err(|e| FormatError::io(&sidecar_path, e))?;
    let sidecar: GridSidecar = serde_json::from_str(&text)
        .map_err(|e| FormatError::parse(&sidecar_path, e.line(), e.to_string()))?;
    if sidecar.dtype != "f32" {
        return Err(FormatError::invalid(
            &sidecar_path,
            format!("unsupported dtype {}", sidecar.dtype),
        ));
    }
    let bytes = std::fs::read(&vol_path).map_err(|e| FormatError::io(&vol_path, e))?;
    let expected = sidecar.resolution.iter().product::<usize>() * 4;
    if bytes.len() != expected {
        return Err(FormatError::invalid(
            &vol_path,
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let values = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((sidecar, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use udfforge_core::field::AnalyticField;
    use udfforge_core::geometry::eval_grid;

    #[test]
    fn export_size_and_values() {
        let dir = tempfile::tempdir().unwrap();
        let base = dir.path().join("field");
        let grid = eval_grid(
            &AnalyticField::Sphere { radius: 0.8 },
            &Aabb::unit_cube(),
            [32, 32, 32],
        )
        .unwrap();
        let (vol, _) = save_grid(&grid, &base).unwrap();
        let meta = std::fs::metadata(&vol).unwrap();
        assert_eq!(meta.len(), 32 * 32 * 32 * 4);
        let (sidecar, values) = load_grid(&base).unwrap();
        assert_eq!(sidecar.resolution, [32, 32, 32]);
        for (a, b) in grid.values.iter().zip(values.iter()) {
            assert_eq!(*a as f32, *b);
        }
    }
}
