//! Loading ground-truth/prediction directory pairs.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{Context, Result};
use panoptic_eval::io::{list_panoptic_dir, read_categories, read_panoptic};
use panoptic_eval::matching::check_category_tables;
use panoptic_eval::{
    CategoryTable, DatasetOverlaps, ImageOverlaps, PanopticMap, Warning, WarningKind,
};
use rayon::prelude::*;

pub const CATEGORIES_FILE: &str = "categories.json";

fn categories_in(dir: &Path) -> Result<Option<CategoryTable>> {
    let path = dir.join(CATEGORIES_FILE);
    if path.is_file() {
        Ok(Some(read_categories(&path)?))
    } else {
        Ok(None)
    }
}

fn warning(kind: WarningKind, image_id: &str, message: String) -> Warning {
    Warning {
        kind,
        image_id: Some(image_id.to_string()),
        annotation: None,
        message,
    }
}

fn checked(map: PanopticMap, cats: Option<&CategoryTable>) -> panoptic_eval::Result<PanopticMap> {
    match cats {
        Some(c) => map.validate(c),
        None => Ok(map),
    }
}

/// Reads every ground-truth map with its prediction and computes overlaps.
///
/// A missing prediction counts as an empty map; prediction segments without
/// a confidence get 1.0. Both cases produce warnings.
pub fn load(gt_dir: &Path, pred_dir: &Path) -> Result<(DatasetOverlaps, Vec<Warning>)> {
    let gt_cats = categories_in(gt_dir)?;
    let pred_cats = categories_in(pred_dir)?;
    if let (Some(g), Some(p)) = (&gt_cats, &pred_cats) {
        check_category_tables(g, p)?;
    }
    let cats = gt_cats.or(pred_cats);

    let gt_ids = list_panoptic_dir(gt_dir)?;
    let pred_ids: BTreeSet<String> = list_panoptic_dir(pred_dir)?.into_iter().collect();

    let per_image: Vec<(ImageOverlaps, Vec<Warning>)> = gt_ids
        .par_iter()
        .map(|id| -> Result<_> {
            let gt_path = gt_dir.join(format!("{id}.png"));
            let gt = checked(read_panoptic(&gt_path)?, cats.as_ref())
                .with_context(|| format!("ground truth {}", gt_path.display()))?;
            let mut warnings = Vec::new();
            let mut pred = if pred_ids.contains(id) {
                let pred_path = pred_dir.join(format!("{id}.png"));
                checked(read_panoptic(&pred_path)?, cats.as_ref())
                    .with_context(|| format!("prediction {}", pred_path.display()))?
            } else {
                warnings.push(warning(
                    WarningKind::MissingPrediction,
                    id,
                    "no prediction; scored as an empty map".into(),
                ));
                PanopticMap::void(gt.width(), gt.height())?
            };
            let filled = pred.fill_missing_confidence(1.0);
            if !filled.is_empty() {
                warnings.push(warning(
                    WarningKind::DefaultConfidence,
                    id,
                    format!("segments {filled:?} have no confidence; using 1.0"),
                ));
            }
            let overlaps =
                ImageOverlaps::compute(&gt, &pred).with_context(|| format!("image {id}"))?;
            Ok((overlaps, warnings))
        })
        .collect::<Result<_>>()?;

    let mut images = Vec::with_capacity(per_image.len());
    let mut warnings = Vec::new();
    for (overlaps, w) in per_image {
        images.push(overlaps);
        warnings.extend(w);
    }
    let gt_set: BTreeSet<&String> = gt_ids.iter().collect();
    for id in pred_ids.iter().filter(|id| !gt_set.contains(id)) {
        warnings.push(warning(
            WarningKind::OrphanPrediction,
            id,
            "prediction has no ground truth; skipped".into(),
        ));
    }
    Ok((DatasetOverlaps::new(images), warnings))
}
