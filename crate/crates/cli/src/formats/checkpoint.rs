//! Field checkpoints: one JSON header line followed by the raw parameter
//! vector as little-endian 64-bit floats, length declared in the header.

use super::FormatError;
use serde::{Deserialize, Serialize};
use std::io::{BufWriter, Write};
use std::path::Path;
use udfforge_core::{FieldArch, NeuralField, SceneTransform};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub arch: FieldArch,
    pub seed: u64,
    pub transform: SceneTransform,
    pub iter: usize,
    pub param_count: usize,
}

pub const CHECKPOINT_FORMAT: &str = "udfforge-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

pub struct Checkpoint {
    pub field: NeuralField,
    pub transform: SceneTransform,
    pub iter: usize,
}

pub fn save_checkpoint(
    field: &NeuralField,
    transform: &SceneTransform,
    iter: usize,
    path: &Path,
) -> Result<(), FormatError> {
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        arch: *field.arch(),
        seed: field.seed(),
        transform: *transform,
        iter,
        param_count: field.param_count(),
    };
    let file = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| FormatError::io(path, e);
    let json = serde_json::to_string(&header)
        .map_err(|e| FormatError::invalid(path, format!("header serialization: {e}")))?;
    w.write_all(json.as_bytes()).map_err(io_err)?;
    w.write_all(b"\n").map_err(io_err)?;
    for v in field.params() {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| FormatError::invalid(path, "missing header line"))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..newline])
        .map_err(|e| FormatError::parse(path, 1, e.to_string()))?;
    if header.format != CHECKPOINT_FORMAT || header.version != CHECKPOINT_VERSION {
        return Err(FormatError::invalid(path, "not an udfforge checkpoint"));
    }
    if header.param_count != header.arch.param_count() {
        return Err(FormatError::invalid(
            path,
            format!(
                "header declares {} parameters but the architecture needs {}",
                header.param_count,
                header.arch.param_count()
            ),
        ));
    }
    let body = &bytes[newline + 1..];
    if body.len() != header.param_count * 8 {
        return Err(FormatError::invalid(
            path,
            format!(
                "expected {} parameter bytes, found {}",
                header.param_count * 8,
                body.len()
            ),
        ));
    }
    let params: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let field = NeuralField::from_params(header.arch, header.seed, params)
        .map_err(|e| FormatError::invalid(path, e.to_string()))?;
    Ok(Checkpoint {
        field,
        transform: header.transform,
        iter: header.iter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.udfck");
        let arch = FieldArch {
            num_layers: 3,
            hidden_width: 16,
            encoding_frequencies: 2,
        };
        let field = NeuralField::init(arch, 11).unwrap();
        let transform = SceneTransform {
            scale: 0.5,
            translation: [0.1, -0.2, 0.3],
        };
        save_checkpoint(&field, &transform, 1234, &path).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        assert_eq!(ck.field.params(), field.params());
        assert_eq!(ck.field.arch(), field.arch());
        assert_eq!(ck.transform, transform);
        assert_eq!(ck.iter, 1234);
    }

    #[test]
    fn corrupted_length_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.udfck");
        let arch = FieldArch {
            num_layers: 2,
            hidden_width: 4,
            encoding_frequencies: 0,
        };
        let field = NeuralField::init(arch, 1).unwrap();
        save_checkpoint(&field, &SceneTransform::identity(), 0, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 8);
        std::fs::write(&path, bytes).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
