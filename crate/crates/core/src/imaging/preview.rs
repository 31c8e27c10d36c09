//! Chip files and 8-bit previews.
//!
//! A chip is stored as `<stem>.f32` (row-major magnitudes, 32-bit float,
//! little-endian) next to a `<stem>.json` sidecar holding the dimensions,
//! spacings and metadata.

use std::fs;
use std::path::{Path, PathBuf};

use image::GrayImage;
use serde::{Deserialize, Serialize};

use super::sensor::{ChipMetadata, RadarChip};
use crate::{Error, Result};

/// Log-magnitude mapped onto `[0, 255]` over `dynamic_range_db` below the
/// reference (the chip peak when `reference` is `None`).
pub fn to_preview(
    chip: &RadarChip,
    dynamic_range_db: f64,
    reference: Option<f64>,
) -> Result<GrayImage> {
    if chip.data.is_empty() {
        return Err(Error::invalid("empty chip"));
    }
    if !(dynamic_range_db > 0.0) {
        return Err(Error::invalid("dynamic range must be > 0 dB"));
    }
    let mags = chip.magnitude();
    let peak = reference.unwrap_or_else(|| mags.iter().fold(0.0f32, |a, &b| a.max(b)) as f64);
    let mut img = GrayImage::new(chip.cols as u32, chip.rows as u32);
    if peak <= 0.0 {
        return Ok(img);
    }
    for (i, &m) in mags.iter().enumerate() {
        let level = if m > 0.0 {
            let db = 20.0 * (m as f64 / peak).log10();
            (255.0 * (db + dynamic_range_db) / dynamic_range_db)
                .round()
                .clamp(0.0, 255.0)
        } else {
            0.0
        };
        let (r, c) = (i / chip.cols, i % chip.cols);
        img.put_pixel(c as u32, r as u32, image::Luma([level as u8]));
    }
    Ok(img)
}

pub fn save_preview(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))
}

/// Raw little-endian magnitude bytes of a chip.
pub fn chip_bytes(chip: &RadarChip) -> Vec<u8> {
    chip.magnitude()
        .iter()
        .flat_map(|m| m.to_le_bytes())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipHeader {
    pub rows: usize,
    pub cols: usize,
    pub range_spacing_m: f64,
    pub cross_spacing_m: f64,
    pub origin: (f64, f64),
    pub metadata: ChipMetadata,
}

impl ChipHeader {
    pub fn of(chip: &RadarChip) -> Self {
        ChipHeader {
            rows: chip.rows,
            cols: chip.cols,
            range_spacing_m: chip.range_spacing_m,
            cross_spacing_m: chip.cross_spacing_m,
            origin: chip.origin,
            metadata: chip.metadata.clone(),
        }
    }
}

/// `<stem>.f32` and `<stem>.json`. A trailing `.f32` or `.json` on `stem` is
/// dropped; any other dot is part of the name.
pub fn chip_paths(stem: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let stem = stem.as_ref();
    let stem = match stem.extension().and_then(|e| e.to_str()) {
        Some("f32" | "json") => stem.with_extension(""),
        _ => stem.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(ext);
        PathBuf::from(s)
    };
    (with(".f32"), with(".json"))
}

pub fn sidecar_text(chip: &RadarChip) -> String {
    let mut s = serde_json::to_string_pretty(&ChipHeader::of(chip)).expect("header serializes");
    s.push('\n');
    s
}

/// Writes `<stem>.f32` and `<stem>.json`; returns their paths.
pub fn write_chip(chip: &RadarChip, stem: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let (raw, side) = chip_paths(stem);
    fs::write(&raw, chip_bytes(chip)).map_err(|e| Error::io(&raw, e))?;
    fs::write(&side, sidecar_text(chip)).map_err(|e| Error::io(&side, e))?;
    Ok((raw, side))
}

pub fn read_chip(stem: impl AsRef<Path>) -> Result<(ChipHeader, Vec<f32>)> {
    let (raw, side) = chip_paths(stem);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let header: ChipHeader = serde_json::from_str(&text).map_err(|e| Error::Format {
        kind: "chip sidecar",
        reason: e.to_string(),
    })?;
    let bytes = fs::read(&raw).map_err(|e| Error::io(&raw, e))?;
    if bytes.len() != 4 * header.rows * header.cols {
        return Err(Error::Format {
            kind: "chip",
            reason: format!(
                "{} bytes for a {}×{} chip",
                bytes.len(),
                header.rows,
                header.cols
            ),
        });
    }
    let mags = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Ok((header, mags))
}
