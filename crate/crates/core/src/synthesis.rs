//! Panoptic ground truth from weak box annotations.
//!
//! Per box: crop, Gaussian blur, Otsu threshold, union of the foreground
//! components, concave hull of the foreground, fill the hull back into the
//! box. Boxes are resolved into one map in annotation order; a pixel belongs
//! to the first segment that claims it.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgproc::{self, otsu, Point};
use crate::types::{BinaryMask, BoxAnnotation, CategoryTable, GrayImage, PanopticMap};

pub const DEFAULT_SIGMA: f64 = 7.0;
pub const DEFAULT_HULL_K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapPolicy {
    #[default]
    FirstWins,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackPolicy {
    #[default]
    WholeBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisConfig {
    pub sigma: f64,
    pub hull_k_start: usize,
    pub overlap_policy: OverlapPolicy,
    pub fallback_policy: FallbackPolicy,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            sigma: DEFAULT_SIGMA,
            hull_k_start: DEFAULT_HULL_K,
            overlap_policy: OverlapPolicy::FirstWins,
            fallback_policy: FallbackPolicy::WholeBox,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::NonPositiveSigma(self.sigma));
        }
        if self.hull_k_start < 3 {
            return Err(Error::InvalidConfig(format!(
                "hull_k_start must be at least 3, got {}",
                self.hull_k_start
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarningKind {
    /// Otsu or the hull could not run; the segment is the whole box.
    WholeBoxFallback,
    /// Every pixel of the segment was already claimed by earlier boxes.
    SegmentDropped,
    /// A prediction segment had no confidence and was given 1.0.
    DefaultConfidence,
    /// A ground-truth image has no prediction file.
    MissingPrediction,
    /// A prediction file has no ground-truth counterpart and was skipped.
    OrphanPrediction,
    /// Undefined values were left out of an aggregate.
    UndefinedExcluded,
}

/// A non-fatal event, emitted as one JSON line per warning by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Warning {
    pub kind: WarningKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub annotation: Option<usize>,
    pub message: String,
}

/// Result of [`synthesize_segment`]: the mask plus the reason when the whole
/// box was used instead.
#[derive(Debug, Clone)]
pub struct SegmentOutcome {
    pub mask: BinaryMask,
    pub fallback: Option<String>,
}

/// Synthesizes one segment, in full-image coordinates, for a single box.
pub fn synthesize_segment(
    img: &GrayImage,
    ann: &BoxAnnotation,
    cfg: &SynthesisConfig,
) -> Result<SegmentOutcome> {
    cfg.validate()?;
    ann.check_within(img.width(), img.height())?;
    let (x0, y0) = (ann.xmin as usize, ann.ymin as usize);
    let (bw, bh) = (ann.width(), ann.height());

    let local = match box_foreground(img, ann, cfg) {
        Ok(mask) => Ok(mask),
        Err(e @ (Error::DegenerateRegion | Error::TooFewPoints(_) | Error::CollinearPoints)) => {
            Err(e.to_string())
        }
        Err(e) => return Err(e),
    };

    let mut full = BinaryMask::empty(img.width(), img.height());
    let fallback = match local {
        Ok(local) => {
            for (x, y) in local.pixels() {
                full.set(x0 + x, y0 + y, true);
            }
            None
        }
        Err(reason) => {
            match cfg.fallback_policy {
                FallbackPolicy::WholeBox => {
                    for y in y0..y0 + bh {
                        for x in x0..x0 + bw {
                            full.set(x, y, true);
                        }
                    }
                }
            }
            Some(reason)
        }
    };
    Ok(SegmentOutcome {
        mask: full,
        fallback,
    })
}

/// The hull-filled foreground in box-local coordinates.
fn box_foreground(
    img: &GrayImage,
    ann: &BoxAnnotation,
    cfg: &SynthesisConfig,
) -> Result<BinaryMask> {
    let crop = img.crop(
        ann.xmin as usize,
        ann.ymin as usize,
        ann.xmax as usize,
        ann.ymax as usize,
    )?;
    let (w, h) = (crop.width(), crop.height());
    let blurred = imgproc::blur(&crop, cfg.sigma)?;
    let threshold = imgproc::otsu_from_histogram(&otsu::histogram_float(&blurred, crop.depth()))?;
    let bits: Vec<bool> = blurred
        .data()
        .iter()
        .map(|&v| otsu::bin_of_float(v, crop.depth()) > threshold as usize)
        .collect();
    let foreground = BinaryMask::from_bits(w, h, bits)?;

    let components = imgproc::connected_components(&foreground);
    let mut union = BinaryMask::empty(w, h);
    for comp in &components {
        for (x, y) in comp.pixels() {
            union.set(x, y, true);
        }
    }

    let points = boundary_points(&union);
    let hull = imgproc::concave_hull(&points, cfg.hull_k_start)?;
    let filled = imgproc::rasterize(&hull, w, h)?;
    // A hull edge may pass between two boundary centers; the union keeps
    // every foreground pixel covered.
    filled.union(&union)
}

/// Pixel centers of foreground pixels with a 4-neighbour outside the foreground.
fn boundary_points(mask: &BinaryMask) -> Vec<Point> {
    let (w, h) = (mask.width(), mask.height());
    mask.pixels()
        .filter(|&(x, y)| {
            x == 0
                || y == 0
                || x + 1 == w
                || y + 1 == h
                || !mask.get(x - 1, y)
                || !mask.get(x + 1, y)
                || !mask.get(x, y - 1)
                || !mask.get(x, y + 1)
        })
        .map(|(x, y)| Point::new(x as f64 + 0.5, y as f64 + 0.5))
        .collect()
}

/// A synthesized map together with the warnings raised while building it.
#[derive(Debug, Clone)]
pub struct Synthesized {
    pub map: PanopticMap,
    pub warnings: Vec<Warning>,
}

/// Builds a panoptic map from every box of one image.
///
/// Annotation `i` becomes segment id `i + 1`; segments emptied by earlier
/// claims are dropped, so ids may have gaps.
pub fn build_panoptic(
    img: &GrayImage,
    annotations: &[BoxAnnotation],
    cfg: &SynthesisConfig,
    cats: &CategoryTable,
) -> Result<Synthesized> {
    cfg.validate()?;
    for ann in annotations {
        ann.check_within(img.width(), img.height())?;
        if !cats.contains(ann.category_id) {
            return Err(Error::UnknownCategory(ann.category_id));
        }
    }
    let outcomes: Vec<SegmentOutcome> = annotations
        .par_iter()
        .map(|ann| synthesize_segment(img, ann, cfg))
        .collect::<Result<_>>()?;

    let (w, h) = (img.width(), img.height());
    let mut id_map = vec![0u32; w * h];
    let mut labels = HashMap::new();
    let mut warnings = Vec::new();
    for (idx, (ann, outcome)) in annotations.iter().zip(&outcomes).enumerate() {
        let id = idx as u32 + 1;
        if let Some(reason) = &outcome.fallback {
            warnings.push(Warning {
                kind: WarningKind::WholeBoxFallback,
                image_id: Some(ann.image_id.clone()),
                annotation: Some(idx),
                message: format!("whole-box segment used: {reason}"),
            });
        }
        let mut claimed = 0u64;
        match cfg.overlap_policy {
            OverlapPolicy::FirstWins => {
                for (i, &bit) in outcome.mask.bits().iter().enumerate() {
                    if bit && id_map[i] == 0 {
                        id_map[i] = id;
                        claimed += 1;
                    }
                }
            }
        }
        if claimed == 0 {
            warnings.push(Warning {
                kind: WarningKind::SegmentDropped,
                image_id: Some(ann.image_id.clone()),
                annotation: Some(idx),
                message: "segment fully covered by earlier segments".into(),
            });
        } else {
            labels.insert(id, (ann.category_id, None));
        }
    }
    let map = PanopticMap::from_id_map(w, h, id_map, &labels)?.validate(cats)?;
    Ok(Synthesized { map, warnings })
}
