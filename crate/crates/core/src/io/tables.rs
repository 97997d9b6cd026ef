//! CSV inputs: box annotations, per-lesion mask listings and dataset manifests.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowError};
use crate::experiment::FoldPlan;
use crate::types::{BoxAnnotation, CategoryTable, PanopticMap};

use super::images::read_mask;

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })
}

fn column(headers: &csv::StringRecord, path: &Path, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })
}

/// Resolves a category cell: a plain id, a name from `cats`, or a label
/// ending in an id such as `BI-RADS 4`.
pub fn parse_category(cell: &str, cats: Option<&CategoryTable>) -> Option<u32> {
    let cell = cell.trim();
    if let Ok(id) = cell.parse() {
        return Some(id);
    }
    if let Some(id) = cats.and_then(|c| c.id_by_name(cell)) {
        return Some(id);
    }
    let digits = cell.len() - cell.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    if digits == 0 {
        return None;
    }
    cell[cell.len() - digits..].parse().ok()
}

/// Column names for [`read_box_annotations`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxColumns {
    pub image_id: String,
    pub xmin: String,
    pub ymin: String,
    pub xmax: String,
    pub ymax: String,
    pub category: String,
}

impl Default for BoxColumns {
    fn default() -> Self {
        Self {
            image_id: "image_id".into(),
            xmin: "xmin".into(),
            ymin: "ymin".into(),
            xmax: "xmax".into(),
            ymax: "ymax".into(),
            category: "category".into(),
        }
    }
}

/// Reads one box per row.
///
/// Fractional coordinates are widened outward to whole pixels. Rows whose
/// four coordinates are all blank (images without findings) are skipped.
/// Every bad row is collected into a single [`Error::MalformedRow`].
pub fn read_box_annotations(
    path: impl AsRef<Path>,
    columns: &BoxColumns,
    cats: Option<&CategoryTable>,
) -> Result<Vec<BoxAnnotation>> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?
        .clone();
    let idx = [
        column(&headers, path, &columns.image_id)?,
        column(&headers, path, &columns.xmin)?,
        column(&headers, path, &columns.ymin)?,
        column(&headers, path, &columns.xmax)?,
        column(&headers, path, &columns.ymax)?,
        column(&headers, path, &columns.category)?,
    ];

    let mut out = Vec::new();
    let mut bad = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(idx[i]).unwrap_or("");
        if (1..=4).all(|i| field(i).is_empty()) {
            continue;
        }
        match parse_box_row(&field, cats) {
            Ok(ann) => out.push(ann),
            Err(message) => bad.push(RowError { line, message }),
        }
    }
    if !bad.is_empty() {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            rows: bad,
        });
    }
    Ok(out)
}

fn parse_box_row<'a>(
    field: &impl Fn(usize) -> &'a str,
    cats: Option<&CategoryTable>,
) -> std::result::Result<BoxAnnotation, String> {
    let image_id = field(0);
    if image_id.is_empty() {
        return Err("empty image id".into());
    }
    let mut coords = [0.0f64; 4];
    for (k, name) in ["xmin", "ymin", "xmax", "ymax"].iter().enumerate() {
        let raw = field(k + 1);
        let v: f64 = raw
            .parse()
            .map_err(|_| format!("{name} {raw:?} is not a number"))?;
        if !v.is_finite() || v < 0.0 || v > u32::MAX as f64 {
            return Err(format!("{name} {raw:?} is out of range"));
        }
        coords[k] = v;
    }
    let [xmin, ymin, xmax, ymax] = coords;
    if xmax <= xmin || ymax <= ymin {
        return Err(format!("empty box ({xmin}, {ymin}, {xmax}, {ymax})"));
    }
    let cell = field(5);
    let category =
        parse_category(cell, cats).ok_or_else(|| format!("unrecognised category {cell:?}"))?;
    if cats.is_some_and(|c| !c.contains(category)) {
        return Err(format!("category {category} is not in the category table"));
    }
    let rect = (
        xmin.floor() as u32,
        ymin.floor() as u32,
        xmax.ceil() as u32,
        ymax.ceil() as u32,
    );
    BoxAnnotation::new(image_id, rect, category).map_err(|e| e.to_string())
}

/// One lesion mask of a per-image listing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskEntry {
    pub image_id: String,
    pub mask_path: PathBuf,
    pub category_id: u32,
}

/// Reads a listing with columns `image_id, mask_path, category`.
///
/// Relative mask paths are taken relative to the listing's directory.
pub fn read_mask_listing(path: impl AsRef<Path>, cats: &CategoryTable) -> Result<Vec<MaskEntry>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?
        .clone();
    let idx = [
        column(&headers, path, "image_id")?,
        column(&headers, path, "mask_path")?,
        column(&headers, path, "category")?,
    ];
    let mut out = Vec::new();
    let mut bad = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let [image_id, mask, cat] = idx.map(|i| record.get(i).unwrap_or(""));
        if image_id.is_empty() || mask.is_empty() {
            bad.push(RowError {
                line,
                message: "empty image_id or mask_path".into(),
            });
            continue;
        }
        match parse_category(cat, Some(cats)) {
            Some(category_id) => out.push(MaskEntry {
                image_id: image_id.to_string(),
                mask_path: base.join(mask),
                category_id,
            }),
            None => bad.push(RowError {
                line,
                message: format!("unrecognised category {cat:?}"),
            }),
        }
    }
    if !bad.is_empty() {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            rows: bad,
        });
    }
    Ok(out)
}

/// Stacks per-lesion masks into one map; segment `i + 1` comes from
/// `entries[i]` and earlier masks keep contested pixels.
pub fn read_instance_masks(
    entries: &[MaskEntry],
    width: usize,
    height: usize,
    cats: &CategoryTable,
) -> Result<PanopticMap> {
    let mut ids = vec![0u32; width * height];
    let mut labels = HashMap::new();
    for (i, entry) in entries.iter().enumerate() {
        if !cats.contains(entry.category_id) {
            return Err(Error::UnknownCategory(entry.category_id));
        }
        let mask = read_mask(&entry.mask_path)?;
        if (mask.width(), mask.height()) != (width, height) {
            return Err(Error::DimensionMismatch {
                left: (width, height),
                right: (mask.width(), mask.height()),
            });
        }
        let id = i as u32 + 1;
        for (slot, &on) in ids.iter_mut().zip(mask.bits()) {
            if on && *slot == 0 {
                *slot = id;
            }
        }
        labels.insert(id, (entry.category_id, None));
    }
    PanopticMap::from_id_map(width, height, ids, &labels)?.validate(cats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub image_id: String,
    pub image_path: PathBuf,
    pub gt_path: PathBuf,
    pub pred_path: Option<PathBuf>,
    pub group: Option<String>,
    pub fold: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub items: Vec<ManifestItem>,
}

impl DatasetManifest {
    pub fn new(items: Vec<ManifestItem>) -> Result<Self> {
        let mut seen = HashSet::new();
        for item in &items {
            if !seen.insert(item.image_id.as_str()) {
                return Err(Error::DuplicateItem(item.image_id.clone()));
            }
        }
        Ok(Self { items })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let csv_err = |e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let items = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestItem>, _>>()
            .map_err(csv_err)?;
        Self::new(items)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let csv_err = |e| Error::Csv {
            path: path.to_path_buf(),
            source: e,
        };
        let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
        for item in &self.items {
            writer.serialize(item).map_err(csv_err)?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }

    /// `(image_id, group)` pairs in manifest order.
    pub fn split_items(&self) -> Vec<(String, Option<String>)> {
        self.items
            .iter()
            .map(|i| (i.image_id.clone(), i.group.clone()))
            .collect()
    }

    /// Copies fold indices from `plan` into the items.
    pub fn assign_folds(&mut self, plan: &FoldPlan) {
        for item in &mut self.items {
            item.fold = plan.fold_of(&item.image_id);
        }
    }
}

pub fn read_categories(path: impl AsRef<Path>) -> Result<CategoryTable> {
    super::read_json(path)
}

pub fn write_categories(path: impl AsRef<Path>, cats: &CategoryTable) -> Result<()> {
    super::write_json(path, cats)
}
