//! Newline-delimited JSON metrics log.

use super::FormatError;
use std::io::{BufWriter, Write};
use std::path::Path;
use udfforge_core::training::IterRecord;

pub struct MetricsWriter {
    writer: BufWriter<std::fs::File>,
    path: std::path::PathBuf,
}

impl MetricsWriter {
    pub fn create(path: &Path) -> Result<Self, FormatError> {
        let file = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
        Ok(Self {
            writer: BufWriter::new(file),
            path: path.to_path_buf(),
        })
    }

    pub fn write(&mut self, record: &IterRecord) -> Result<(), FormatError> {
        let line = serde_json::to_string(record)
            .map_err(|e| FormatError::invalid(&self.path, e.to_string()))?;
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .map_err(|e| FormatError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), FormatError> {
        self.writer
            .flush()
            .map_err(|e| FormatError::io(&self.path, e))
    }
}

pub fn load_metrics(path: &Path) -> Result<Vec<IterRecord>, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(lineno, l)| {
            serde_json::from_str(l).map_err(|e| FormatError::parse(path, lineno + 1, e.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_losses_stay_absent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ndjson");
        let mut w = MetricsWriter::create(&path).unwrap();
        let r0 = IterRecord {
            iter: 0,
            l_far: Some(1.5),
            l_near: None,
            l_proj: None,
            lr: 1e-3,
            degenerate_fraction: 0.0,
        };
        let r1 = IterRecord {
            iter: 1,
            l_far: Some(1.2),
            l_near: Some(0.01),
            l_proj: Some(0.2),
            lr: 9e-4,
            degenerate_fraction: 0.125,
        };
        w.write(&r0).unwrap();
        w.write(&r1).unwrap();
        w.finish().unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let first = text.lines().next().unwrap();
        assert!(!first.contains("l_near"));
        assert!(!first.contains("l_proj"));
        let back = load_metrics(&path).unwrap();
        assert_eq!(back, vec![r0, r1]);
    }
}
