//! File formats: PNG images and masks, panoptic archives, CSV tables,
//! JSON documents and reports.

mod images;
mod panoptic;
mod report;
mod tables;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub use images::{read_gray, read_mask, write_gray, write_mask};
pub use panoptic::{
    id_to_rgb, list_panoptic_dir, read_panoptic, rgb_to_id, sidecar_path, write_panoptic,
    write_panoptic_files, Sidecar, MAX_ID,
};
pub use report::{
    classes_csv, comparison_markdown, fold_summary_csv, percent, percent_opt, records_csv,
    summaries_csv, summary_cell, sweep_svg, UNDEFINED,
};
pub use tables::{
    parse_category, read_box_annotations, read_categories, read_instance_masks, read_mask_listing,
    write_categories, BoxColumns, DatasetManifest, ManifestItem, MaskEntry,
};

/// Pretty-printed JSON; floats keep full precision.
pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes a text file in one go.
pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
