//! Domain types shared by every stage of the pipeline.
//!
//! Everything here is plain data plus invariant checks. Values are immutable
//! once constructed, so they can be shared freely across rayon workers.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample depth of a [`GrayImage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn bits(self) -> u8 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn max_value(self) -> u16 {
        match self {
            BitDepth::Eight => u8::MAX as u16,
            BitDepth::Sixteen => u16::MAX,
        }
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions {
            width,
            height,
            reason: "width and height must be at least 1".into(),
        });
    }
    match width.checked_mul(height) {
        Some(n) if n == len => Ok(()),
        _ => Err(Error::InvalidDimensions {
            width,
            height,
            reason: format!("grid holds {len} samples"),
        }),
    }
}

/// Single-channel intensity raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    depth: BitDepth,
    data: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, depth: BitDepth, data: Vec<u16>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        let max = depth.max_value();
        if let Some(&value) = data.iter().find(|&&v| v > max) {
            return Err(Error::IntensityOutOfRange {
                value,
                bits: depth.bits(),
            });
        }
        Ok(Self {
            width,
            height,
            depth,
            data,
        })
    }

    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(
            width,
            height,
            BitDepth::Eight,
            data.iter().map(|&v| v as u16).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.data[y * self.width + x]
    }

    /// Copies the half-open rectangle `[x0, x1) x [y0, y1)`.
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Result<Self> {
        if x0 >= x1 || y0 >= y1 || x1 > self.width || y1 > self.height {
            return Err(Error::BoxOutOfBounds {
                xmin: x0 as u32,
                ymin: y0 as u32,
                xmax: x1 as u32,
                ymax: y1 as u32,
                width: self.width,
                height: self.height,
            });
        }
        let mut data = Vec::with_capacity((x1 - x0) * (y1 - y0));
        for y in y0..y1 {
            data.extend_from_slice(&self.data[y * self.width + x0..y * self.width + x1]);
        }
        Ok(Self {
            width: x1 - x0,
            height: y1 - y0,
            depth: self.depth,
            data,
        })
    }

    pub fn to_float(&self) -> FloatImage {
        FloatImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v as f64).collect(),
        }
    }
}

/// Real-valued raster, the output of filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// One boolean per pixel with a cached population count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
    area: u64,
}

impl BinaryMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
            area: 0,
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        let area = bits.iter().filter(|&&b| b).count() as u64;
        Ok(Self {
            width,
            height,
            bits,
            area,
        })
    }

    /// Mask of the half-open rectangle `[x0, x1) x [y0, y1)`, clipped to the grid.
    pub fn from_rect(
        width: usize,
        height: usize,
        x0: usize,
        y0: usize,
        x1: usize,
        y1: usize,
    ) -> Self {
        let mut mask = Self::empty(width, height);
        for y in y0..y1.min(height) {
            for x in x0..x1.min(width) {
                mask.set(x, y, true);
            }
        }
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn area(&self) -> u64 {
        self.area
    }

    pub fn is_empty(&self) -> bool {
        self.area == 0
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        let idx = y * self.width + x;
        if self.bits[idx] != value {
            self.bits[idx] = value;
            if value {
                self.area += 1;
            } else {
                self.area -= 1;
            }
        }
    }

    /// Row-major `(x, y)` coordinates of the set pixels.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch {
                left: (self.width, self.height),
                right: (other.width, other.height),
            });
        }
        Ok(())
    }

    pub fn intersection_area(&self, other: &Self) -> Result<u64> {
        self.check_same_dims(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(&a, &b)| a && b)
            .count() as u64)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a || b)
            .collect();
        Self::from_bits(self.width, self.height, bits)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(&a, &b)| a && b)
            .collect();
        Self::from_bits(self.width, self.height, bits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub id: u32,
    pub name: String,
}

/// Category ids are unique and positive; 0 is reserved for void.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Category>", into = "Vec<Category>")]
pub struct CategoryTable {
    entries: Vec<Category>,
}

impl CategoryTable {
    pub fn new(entries: Vec<Category>) -> Result<Self> {
        let mut ids = HashSet::new();
        let mut names = HashSet::new();
        for c in &entries {
            if c.id == 0 {
                return Err(Error::InvalidCategoryTable(
                    "category id 0 is reserved for void".into(),
                ));
            }
            if !ids.insert(c.id) {
                return Err(Error::InvalidCategoryTable(format!(
                    "duplicate category id {}",
                    c.id
                )));
            }
            if !names.insert(c.name.as_str()) {
                return Err(Error::InvalidCategoryTable(format!(
                    "duplicate category name {:?}",
                    c.name
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Table whose names are the decimal ids, e.g. BI-RADS levels `{3, 4, 5}`.
    pub fn from_ids(ids: impl IntoIterator<Item = u32>) -> Result<Self> {
        let mut ids: Vec<u32> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        Self::new(
            ids.into_iter()
                .map(|id| Category {
                    id,
                    name: id.to_string(),
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[Category] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|c| c.id)
    }

    pub fn contains(&self, id: u32) -> bool {
        self.entries.iter().any(|c| c.id == id)
    }

    pub fn id_by_name(&self, name: &str) -> Option<u32> {
        self.entries.iter().find(|c| c.name == name).map(|c| c.id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl TryFrom<Vec<Category>> for CategoryTable {
    type Error = Error;
    fn try_from(entries: Vec<Category>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<CategoryTable> for Vec<Category> {
    fn from(table: CategoryTable) -> Self {
        table.entries
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub id: u32,
    pub category_id: u32,
    pub area: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

/// Per-pixel segment ids (0 = void) plus the segment table.
#[derive(Debug, Clone, PartialEq)]
pub struct PanopticMap {
    width: usize,
    height: usize,
    id_map: Vec<u32>,
    segments: Vec<Segment>,
}

impl PanopticMap {
    /// Checks only the grid shape; use [`PanopticMap::validate`] for the full invariants.
    pub fn new(
        width: usize,
        height: usize,
        id_map: Vec<u32>,
        segments: Vec<Segment>,
    ) -> Result<Self> {
        check_dims(width, height, id_map.len())?;
        Ok(Self {
            width,
            height,
            id_map,
            segments,
        })
    }

    pub fn void(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0; width * height], Vec::new())
    }

    /// Builds the segment table from the id map, counting areas.
    ///
    /// `labels` maps each segment id to `(category_id, confidence)`. Ids in
    /// `labels` that never occur in the map are left out of the table.
    pub fn from_id_map(
        width: usize,
        height: usize,
        id_map: Vec<u32>,
        labels: &HashMap<u32, (u32, Option<f64>)>,
    ) -> Result<Self> {
        check_dims(width, height, id_map.len())?;
        let mut areas: BTreeMap<u32, u64> = BTreeMap::new();
        for &id in &id_map {
            if id != 0 {
                *areas.entry(id).or_default() += 1;
            }
        }
        let mut segments = Vec::with_capacity(areas.len());
        for (id, area) in areas {
            let &(category_id, confidence) = labels
                .get(&id)
                .ok_or_else(|| Error::OverlapViolation(format!("id {id} in map has no label")))?;
            segments.push(Segment {
                id,
                category_id,
                area,
                confidence,
            });
        }
        Ok(Self {
            width,
            height,
            id_map,
            segments,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn id_map(&self) -> &[u32] {
        &self.id_map
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, id: u32) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }

    pub fn id_at(&self, x: usize, y: usize) -> u32 {
        self.id_map[y * self.width + x]
    }

    pub fn void_count(&self) -> u64 {
        self.id_map.iter().filter(|&&id| id == 0).count() as u64
    }

    pub fn segment_mask(&self, id: u32) -> BinaryMask {
        let bits = self.id_map.iter().map(|&v| v == id && id != 0).collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("dimensions already checked")
    }

    /// Union of all segments of one category.
    pub fn category_mask(&self, category_id: u32) -> BinaryMask {
        let ids: HashSet<u32> = self
            .segments
            .iter()
            .filter(|s| s.category_id == category_id)
            .map(|s| s.id)
            .collect();
        let bits = self.id_map.iter().map(|v| ids.contains(v)).collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("dimensions already checked")
    }

    /// Replaces missing confidences with `fill`, returning the ids that were filled.
    pub fn fill_missing_confidence(&mut self, fill: f64) -> Vec<u32> {
        let mut filled = Vec::new();
        for s in &mut self.segments {
            if s.confidence.is_none() {
                s.confidence = Some(fill);
                filled.push(s.id);
            }
        }
        filled
    }

    /// Returns the map iff every invariant holds against `cats`.
    pub fn validate(self, cats: &CategoryTable) -> Result<Self> {
        let mut declared: HashMap<u32, &Segment> = HashMap::with_capacity(self.segments.len());
        for s in &self.segments {
            if s.id == 0 {
                return Err(Error::OverlapViolation(
                    "segment table lists reserved id 0".into(),
                ));
            }
            if declared.insert(s.id, s).is_some() {
                return Err(Error::OverlapViolation(format!(
                    "segment id {} listed more than once",
                    s.id
                )));
            }
            if !cats.contains(s.category_id) {
                return Err(Error::UnknownCategory(s.category_id));
            }
            if let Some(c) = s.confidence {
                if !(0.0..=1.0).contains(&c) {
                    return Err(Error::InvalidConfidence { id: s.id, value: c });
                }
            }
        }
        let mut counts: HashMap<u32, u64> = HashMap::with_capacity(declared.len());
        let mut last_checked = 0u32;
        for &id in &self.id_map {
            if id == 0 {
                continue;
            }
            if id != last_checked {
                if !declared.contains_key(&id) {
                    return Err(Error::OverlapViolation(format!(
                        "id {id} in map is missing from segment table"
                    )));
                }
                last_checked = id;
            }
            *counts.entry(id).or_default() += 1;
        }
        for s in &self.segments {
            let actual = counts.get(&s.id).copied().unwrap_or(0);
            if actual == 0 {
                return Err(Error::OverlapViolation(format!(
                    "segment {} is absent from the id map",
                    s.id
                )));
            }
            if actual != s.area {
                return Err(Error::AreaMismatch {
                    id: s.id,
                    declared: s.area,
                    actual,
                });
            }
        }
        Ok(self)
    }
}

/// Weak label: a half-open pixel box `[xmin, xmax) x [ymin, ymax)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxAnnotation {
    pub image_id: String,
    pub xmin: u32,
    pub ymin: u32,
    pub xmax: u32,
    pub ymax: u32,
    pub category_id: u32,
}

impl BoxAnnotation {
    pub fn new(
        image_id: impl Into<String>,
        (xmin, ymin, xmax, ymax): (u32, u32, u32, u32),
        category_id: u32,
    ) -> Result<Self> {
        if xmin >= xmax || ymin >= ymax {
            return Err(Error::InvalidBox {
                xmin,
                ymin,
                xmax,
                ymax,
            });
        }
        Ok(Self {
            image_id: image_id.into(),
            xmin,
            ymin,
            xmax,
            ymax,
            category_id,
        })
    }

    pub fn check_within(&self, width: usize, height: usize) -> Result<()> {
        if self.xmin >= self.xmax
            || self.ymin >= self.ymax
            || self.xmax as usize > width
            || self.ymax as usize > height
        {
            return Err(Error::BoxOutOfBounds {
                xmin: self.xmin,
                ymin: self.ymin,
                xmax: self.xmax,
                ymax: self.ymax,
                width,
                height,
            });
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        (self.xmax - self.xmin) as usize
    }

    pub fn height(&self) -> usize {
        (self.ymax - self.ymin) as usize
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.xmin as usize
            && x < self.xmax as usize
            && y >= self.ymin as usize
            && y < self.ymax as usize
    }
}

/// Per-class evaluation values. `sq` is undefined when there are no true positives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub category_id: u32,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub iou_sum: f64,
    pub rq: f64,
    pub sq: Option<f64>,
    pub pq: f64,
    /// `None` when the class has no ground-truth instance.
    pub ap: Option<f64>,
    /// `None` when both semantic masks of the class are empty.
    pub dice: Option<f64>,
}

/// All metrics of one evaluation at IoU threshold `tau`, as ratios in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub tau: f64,
    pub rq: f64,
    pub sq: Option<f64>,
    pub pq: f64,
    pub ap: f64,
    pub dice: f64,
    pub per_class: BTreeMap<u32, ClassMetrics>,
}

impl MetricsRecord {
    /// Looks up a dataset-level metric by its report name.
    pub fn metric(&self, name: MetricName) -> Option<f64> {
        match name {
            MetricName::Rq => Some(self.rq),
            MetricName::Sq => self.sq,
            MetricName::Pq => Some(self.pq),
            MetricName::Ap => Some(self.ap),
            MetricName::Dice => Some(self.dice),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricName {
    #[serde(rename = "RQ")]
    Rq,
    #[serde(rename = "SQ")]
    Sq,
    #[serde(rename = "PQ")]
    Pq,
    #[serde(rename = "AP")]
    Ap,
    #[serde(rename = "Dice")]
    Dice,
}

impl MetricName {
    pub const ALL: [MetricName; 5] = [
        MetricName::Rq,
        MetricName::Sq,
        MetricName::Pq,
        MetricName::Ap,
        MetricName::Dice,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MetricName::Rq => "RQ",
            MetricName::Sq => "SQ",
            MetricName::Pq => "PQ",
            MetricName::Ap => "AP",
            MetricName::Dice => "Dice",
        }
    }
}
