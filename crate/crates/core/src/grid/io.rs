//! Layer persistence: a little-endian `f64` blob plus a JSON sidecar.
//!
//! `<stem>.f64` holds `width * height` IEEE-754 doubles, row-major, little
//! endian. `<stem>.json` holds the geometry, the semantic tag and the SHA-256
//! of the blob. Both files are written to a temporary name and renamed into
//! place.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GridGeometry, GridLayer, Semantic};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSidecar {
    pub resolution_c: f64,
    pub origin: [f64; 2],
    pub width: usize,
    pub height: usize,
    pub semantic: Semantic,
    pub sha256_of_blob: String,
}

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut name = stem.as_os_str().to_owned();
    name.push(".");
    name.push(ext);
    PathBuf::from(name)
}

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes `<stem>.f64` and `<stem>.json`.
pub fn save_layer(layer: &GridLayer, stem: &Path) -> Result<()> {
    let mut blob = Vec::with_capacity(layer.values.len() * 8);
    for v in &layer.values {
        blob.extend_from_slice(&v.to_le_bytes());
    }
    let sidecar = LayerSidecar {
        resolution_c: layer.geometry.resolution,
        origin: layer.geometry.origin,
        width: layer.geometry.width,
        height: layer.geometry.height,
        semantic: layer.semantic,
        sha256_of_blob: hex::encode(Sha256::digest(&blob)),
    };
    write_atomic(&with_ext(stem, "f64"), &blob)?;
    write_atomic(&with_ext(stem, "json"), serde_json::to_string_pretty(&sidecar)?.as_bytes())?;
    Ok(())
}

pub fn load_layer(stem: &Path) -> Result<GridLayer> {
    let sidecar: LayerSidecar = serde_json::from_slice(&fs::read(with_ext(stem, "json"))?)
        .map_err(|e| Error::MalformedFile(format!("sidecar: {e}")))?;
    let blob = fs::read(with_ext(stem, "f64"))?;
    let geometry = GridGeometry::new(sidecar.resolution_c, sidecar.origin, sidecar.width, sidecar.height)
        .map_err(|e| Error::MalformedFile(e.to_string()))?;
    if blob.len() % 8 != 0 || blob.len() / 8 != geometry.len() {
        return Err(Error::MalformedFile(format!(
            "blob holds {} bytes, header expects {} values",
            blob.len(),
            geometry.len()
        )));
    }
    let actual = hex::encode(Sha256::digest(&blob));
    if !actual.eq_ignore_ascii_case(&sidecar.sha256_of_blob) {
        return Err(Error::ChecksumMismatch { expected: sidecar.sha256_of_blob, actual });
    }
    let values = blob
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    GridLayer::from_values(geometry, sidecar.semantic, values)
}

/// Reads a layer from comma-separated rows; the first line is grid row 0.
pub fn read_csv_layer(
    reader: impl BufRead,
    resolution: f64,
    origin: [f64; 2],
    semantic: Semantic,
) -> Result<GridLayer> {
    let mut values = Vec::new();
    let mut width = None;
    let mut height = 0;
    for line in reader.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::MalformedFile(format!("{s:?}: {e}"))))
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::MalformedFile(format!("row {height} has {} columns, expected {w}", row.len())))
            }
            _ => {}
        }
        values.extend(row);
        height += 1;
    }
    let width = width.ok_or_else(|| Error::MalformedFile("empty csv".into()))?;
    let geometry = GridGeometry::new(resolution, origin, width, height)?;
    GridLayer::from_values(geometry, semantic, values)
}

/// 8-bit binary PGM, values min-max scaled to 0..=255, top image row = top of
/// the world (highest grid row). Non-finite values map to 0. Lossy.
pub fn export_pgm(layer: &GridLayer, path: &Path) -> Result<()> {
    let g = layer.geometry;
    let finite = layer.values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut bytes = format!("P5\n{} {}\n255\n", g.width, g.height).into_bytes();
    for row in (0..g.height).rev() {
        for col in 0..g.width {
            let v = layer.values[row * g.width + col];
            let px = if v.is_finite() { (((v - lo) / span) * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 };
            bytes.push(px);
        }
    }
    write_atomic(path, &bytes)
}
