//! Panoptic maps as an RGB id PNG (id = R + 256·G + 65536·B) plus a JSON
//! sidecar listing the segments.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use png::{BitDepth as PngDepth, ColorType};
use serde::{Deserialize, Serialize};

use super::images::{decode, encode};
use crate::error::{Error, Result};
use crate::types::{PanopticMap, Segment};

pub const MAX_ID: u32 = (1 << 24) - 1;

pub fn id_to_rgb(id: u32) -> Result<[u8; 3]> {
    if id > MAX_ID {
        return Err(Error::IdOverflow(id));
    }
    Ok([id as u8, (id >> 8) as u8, (id >> 16) as u8])
}

pub fn rgb_to_id([r, g, b]: [u8; 3]) -> u32 {
    r as u32 | (g as u32) << 8 | (b as u32) << 16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub image_id: String,
    pub file_name: String,
    pub width: usize,
    pub height: usize,
    pub segments_info: Vec<Segment>,
}

/// Sidecar path for an id PNG: same stem, `.json` extension.
pub fn sidecar_path(png_path: &Path) -> PathBuf {
    png_path.with_extension("json")
}

/// Writes `<dir>/<image_id>.png` and `<dir>/<image_id>.json`.
pub fn write_panoptic(dir: impl AsRef<Path>, image_id: &str, map: &PanopticMap) -> Result<PathBuf> {
    let png_path = dir.as_ref().join(format!("{image_id}.png"));
    write_panoptic_files(&png_path, image_id, map)?;
    Ok(png_path)
}

pub fn write_panoptic_files(png_path: &Path, image_id: &str, map: &PanopticMap) -> Result<()> {
    let mut bytes = Vec::with_capacity(map.id_map().len() * 3);
    for &id in map.id_map() {
        bytes.extend_from_slice(&id_to_rgb(id)?);
    }
    for s in map.segments() {
        id_to_rgb(s.id)?;
    }
    let sidecar = Sidecar {
        image_id: image_id.to_string(),
        file_name: png_path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        width: map.width(),
        height: map.height(),
        segments_info: map.segments().to_vec(),
    };
    encode(
        png_path,
        map.width(),
        map.height(),
        ColorType::Rgb,
        PngDepth::Eight,
        &bytes,
    )?;
    super::write_json(sidecar_path(png_path), &sidecar)
}

/// Reads an id PNG and its sidecar, checking that the two agree.
pub fn read_panoptic(png_path: impl AsRef<Path>) -> Result<PanopticMap> {
    let png_path = png_path.as_ref();
    let json_path = sidecar_path(png_path);
    let sidecar: Sidecar = super::read_json(&json_path)?;
    let raw = decode(png_path)?;
    if raw.color != ColorType::Rgb || raw.depth != PngDepth::Eight {
        return Err(Error::UnsupportedFormat {
            path: png_path.to_path_buf(),
            message: format!(
                "expected 8-bit RGB id map, found {:?} {:?}",
                raw.color, raw.depth
            ),
        });
    }
    let mismatch = |message: String| Error::SidecarMismatch {
        path: json_path.clone(),
        message,
    };
    if (sidecar.width, sidecar.height) != (raw.width, raw.height) {
        return Err(mismatch(format!(
            "sidecar says {}x{}, image is {}x{}",
            sidecar.width, sidecar.height, raw.width, raw.height
        )));
    }
    let ids: Vec<u32> = raw
        .bytes
        .chunks_exact(3)
        .map(|c| rgb_to_id([c[0], c[1], c[2]]))
        .collect();
    let listed: HashSet<u32> = sidecar.segments_info.iter().map(|s| s.id).collect();
    if let Some(id) = ids.iter().find(|&&id| id != 0 && !listed.contains(&id)) {
        return Err(mismatch(format!("pixel id {id} is not listed")));
    }
    let mut areas: HashMap<u32, u64> = HashMap::new();
    for &id in ids.iter().filter(|&&id| id != 0) {
        *areas.entry(id).or_default() += 1;
    }
    for s in &sidecar.segments_info {
        let actual = areas.get(&s.id).copied().unwrap_or(0);
        if actual != s.area {
            return Err(mismatch(format!(
                "segment {} declares area {}, image has {actual}",
                s.id, s.area
            )));
        }
    }
    PanopticMap::new(raw.width, raw.height, ids, sidecar.segments_info)
}

/// Image ids (file stems) of every id PNG in `dir` that has a sidecar, sorted.
pub fn list_panoptic_dir(dir: impl AsRef<Path>) -> Result<Vec<String>> {
    let dir = dir.as_ref();
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "png") && sidecar_path(&path).is_file() {
            if let Some(stem) = path.file_stem() {
                ids.push(stem.to_string_lossy().into_owned());
            }
        }
    }
    ids.sort();
    Ok(ids)
}
