//! Surfel cloud files.
//!
//! Text format (line oriented, `#` comments allowed):
//!
//! ```text
//! surfelcloud v1 <count>
//! cx cy cz r00 r01 r02 r10 r11 r12 r20 r21 r22 s0 s1 [alpha] [cr cg cb]
//! ```
//!
//! Rotations are row-major; the optional fields give 14, 15, 17 or 18
//! columns per record. Floats print in shortest round-trip form, so a
//! save/load cycle reproduces every field bit for bit.
//!
//! The binary variant starts with the magic `SURFCLD1`, a little-endian u64
//! count and u32 stride (floats per record, one of 14/15/17/18), followed by
//! `count * stride` little-endian f64 values mirroring the text columns.
//! Loading sniffs the magic, so one loader serves both variants.

use super::FormatError;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use udfforge_core::surfel::{Surfel, SurfelCloud};

const MAGIC: &[u8; 8] = b"SURFCLD1";

fn record_stride(s: &Surfel) -> usize {
    match (s.alpha.is_some(), s.color.is_some()) {
        (false, false) => 14,
        (true, false) => 15,
        (false, true) => 17,
        (true, true) => 18,
    }
}

fn record_values(s: &Surfel) -> Vec<f64> {
    let mut v = Vec::with_capacity(18);
    v.extend_from_slice(&s.center);
    for row in &s.rotation {
        v.extend_from_slice(row);
    }
    v.extend_from_slice(&s.scales);
    if let Some(a) = s.alpha {
        v.push(a);
    }
    if let Some(c) = s.color {
        v.extend_from_slice(&c);
    }
    v
}

fn surfel_from_values(values: &[f64]) -> Result<Surfel, String> {
    let mut s = Surfel::new(
        [values[0], values[1], values[2]],
        [
            [values[3], values[4], values[5]],
            [values[6], values[7], values[8]],
            [values[9], values[10], values[11]],
        ],
        [values[12], values[13]],
    );
    match values.len() {
        14 => {}
        15 => s.alpha = Some(values[14]),
        17 => s.color = Some([values[14], values[15], values[16]]),
        18 => {
            s.alpha = Some(values[14]);
            s.color = Some([values[15], values[16], values[17]]);
        }
        n => return Err(format!("expected 14, 15, 17 or 18 columns, got {n}")),
    }
    s.validate().map_err(|d| d.to_string())?;
    Ok(s)
}

pub fn save_cloud_text(cloud: &SurfelCloud, path: &Path) -> Result<(), FormatError> {
    let file = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| FormatError::io(path, e);
    writeln!(w, "surfelcloud v1 {}", cloud.len()).map_err(io_err)?;
    for s in &cloud.surfels {
        let values = record_values(s);
        let line: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", line.join(" ")).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn save_cloud_binary(cloud: &SurfelCloud, path: &Path) -> Result<(), FormatError> {
    // The binary layout needs one stride for every record; promote optional
    // fields to the widest stride present.
    let stride = cloud.surfels.iter().map(record_stride).max().unwrap_or(14);
    let file = std::fs::File::create(path).map_err(|e| FormatError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| FormatError::io(path, e);
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&(cloud.len() as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(stride as u32).to_le_bytes()).map_err(io_err)?;
    for s in &cloud.surfels {
        let mut s = s.clone();
        if stride >= 15 {
            s.alpha = Some(s.opacity());
        }
        if stride >= 17 {
            s.color = Some(s.color.unwrap_or([0.5, 0.5, 0.5]));
        }
        for v in record_values(&s) {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Loads either variant, sniffing the binary magic. The transform is the
/// identity; normalization into the working cube happens at training entry.
pub fn load_cloud(path: &Path) -> Result<SurfelCloud, FormatError> {
    let bytes = std::fs::read(path).map_err(|e| FormatError::io(path, e))?;
    if bytes.len() >= 8 && &bytes[..8] == MAGIC {
        load_binary(path, &bytes[8..])
    } else {
        let text = core::str::from_utf8(&bytes)
            .map_err(|_| FormatError::invalid(path, "file is neither valid UTF-8 nor binary"))?;
        load_text(path, text)
    }
}

fn load_text(path: &Path, text: &str) -> Result<SurfelCloud, FormatError> {
    let mut expected: Option<usize> = None;
    let mut surfels = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if expected.is_none() {
            let mut parts = line.split_whitespace();
            let (kw, ver, count) = (parts.next(), parts.next(), parts.next());
            if kw != Some("surfelcloud") || ver != Some("v1") {
                return Err(FormatError::parse(
                    path,
                    lineno,
                    "expected header 'surfelcloud v1 <count>'",
                ));
            }
            let count: usize = count
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| FormatError::parse(path, lineno, "bad count in header"))?;
            if parts.next().is_some() {
                return Err(FormatError::parse(path, lineno, "trailing tokens in header"));
            }
            expected = Some(count);
            surfels.reserve(count);
            continue;
        }
        let mut values = Vec::with_capacity(18);
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| {
                FormatError::parse(path, lineno, format!("bad float '{tok}'"))
            })?;
            values.push(v);
        }
        let s = surfel_from_values(&values)
            .map_err(|msg| FormatError::parse(path, lineno, msg))?;
        surfels.push(s);
    }
    let expected =
        expected.ok_or_else(|| FormatError::invalid(path, "missing surfelcloud header"))?;
    if surfels.len() != expected {
        return Err(FormatError::invalid(
            path,
            format!("header declares {expected} surfels, found {}", surfels.len()),
        ));
    }
    Ok(SurfelCloud::new(surfels))
}

fn load_binary(path: &Path, body: &[u8]) -> Result<SurfelCloud, FormatError> {
    let mut cursor = body;
    let mut read_exact = |n: usize| -> Result<Vec<u8>, FormatError> {
        let mut buf = vec![0u8; n];
        cursor
            .read_exact(&mut buf)
            .map_err(|_| FormatError::invalid(path, "truncated binary cloud"))?;
        Ok(buf)
    };
    let count = u64::from_le_bytes(read_exact(8)?.try_into().expect("8 bytes")) as usize;
    let stride = u32::from_le_bytes(read_exact(4)?.try_into().expect("4 bytes")) as usize;
    if ![14, 15, 17, 18].contains(&stride) {
        return Err(FormatError::invalid(path, format!("bad stride {stride}")));
    }
    let mut surfels = Vec::with_capacity(count);
    for record in 0..count {
        let raw = read_exact(stride * 8)?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let s = surfel_from_values(&values).map_err(|msg| {
            FormatError::invalid(path, format!("record {record}: {msg}"))
        })?;
        surfels.push(s);
    }
    Ok(SurfelCloud::new(surfels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use udfforge_core::surfel::{gen_scene, GenParams, SceneKind};

    fn sample_cloud() -> SurfelCloud {
        let mut scene =
            gen_scene(SceneKind::Sphere, 40, 0.01, 7, &GenParams::default()).unwrap();
        // Exercise the optional columns.
        scene.cloud.surfels[1].alpha = Some(0.25);
        scene.cloud.surfels[2].alpha = Some(0.5);
        scene.cloud.surfels[2].color = Some([0.1, 0.7, 0.9]);
        scene.cloud.surfels[3].color = Some([1.0, 0.0, 0.25]);
        scene.cloud
    }

    #[test]
    fn text_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.surfels");
        let cloud = sample_cloud();
        save_cloud_text(&cloud, &path).unwrap();
        let back = load_cloud(&path).unwrap();
        assert_eq!(cloud.surfels, back.surfels);
    }

    #[test]
    fn binary_roundtrip_preserves_all_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cloud.bin");
        let mut cloud = sample_cloud();
        // Binary promotes to a single stride; make all records explicit so
        // the roundtrip is field-exact.
        for s in &mut cloud.surfels {
            s.alpha = Some(s.opacity());
            s.color = Some(s.color.unwrap_or([0.5, 0.5, 0.5]));
        }
        save_cloud_binary(&cloud, &path).unwrap();
        let back = load_cloud(&path).unwrap();
        assert_eq!(cloud.surfels, back.surfels);
    }

    #[test]
    fn zero_scale_is_rejected_with_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.surfels");
        std::fs::write(
            &path,
            "surfelcloud v1 1\n0 0 0 1 0 0 0 1 0 0 0 1 0 0.1\n",
        )
        .unwrap();
        let err = load_cloud(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(":2:"), "{msg}");
        assert!(msg.contains("positive"), "{msg}");
    }

    #[test]
    fn non_orthonormal_rotation_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.surfels");
        std::fs::write(
            &path,
            "surfelcloud v1 1\n0 0 0 1 0 0 0 1 0 0 0 2 0.1 0.1\n",
        )
        .unwrap();
        let err = load_cloud(&path).unwrap_err();
        assert!(err.to_string().contains("orthonormal"), "{err}");
    }

    #[test]
    fn empty_cloud_loads_for_inspection() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.surfels");
        std::fs::write(&path, "# nothing here\nsurfelcloud v1 0\n").unwrap();
        let cloud = load_cloud(&path).unwrap();
        assert!(cloud.is_empty());
        // Training-path validation still refuses it.
        assert!(cloud.validate(true).is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.surfels");
        std::fs::write(
            &path,
            "# header comment\n\nsurfelcloud v1 1\n0 0 0 1 0 0 0 1 0 0 0 1 0.1 0.2 # trailing\n",
        )
        .unwrap();
        let cloud = load_cloud(&path).unwrap();
        assert_eq!(cloud.len(), 1);
        assert_eq!(cloud.surfels[0].scales, [0.1, 0.2]);
    }

    #[test]
    fn count_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.surfels");
        std::fs::write(&path, "surfelcloud v1 2\n0 0 0 1 0 0 0 1 0 0 0 1 0.1 0.2\n").unwrap();
        assert!(load_cloud(&path).unwrap_err().to_string().contains("declares 2"));
    }
}
