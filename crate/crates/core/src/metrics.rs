//! Recognition, segmentation and panoptic quality, average precision and Dice.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{check_tau, DatasetOverlaps, MatchConfig, MatchReport};
use crate::types::{ClassMetrics, MetricsRecord};

/// How per-class values are reduced to one dataset value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    /// Unweighted mean over classes.
    #[default]
    Macro,
    /// Counts (or pixels) pooled over classes before the ratio is taken.
    Micro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApInterpolation {
    /// Mean interpolated precision at recall 0.00, 0.01, ..., 1.00.
    #[default]
    Coco101,
    /// Exact area under the interpolated precision envelope.
    AllPoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiceMode {
    /// Pixels pooled per class over the whole dataset.
    #[default]
    Pooled,
    /// Dice per image and class, averaged over images, then over classes.
    PerImage,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPq {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub iou_sum: f64,
    pub rq: f64,
    pub sq: Option<f64>,
    pub pq: f64,
}

impl ClassPq {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64, iou_sum: f64) -> Self {
        let denom = tp as f64 + 0.5 * fp as f64 + 0.5 * fn_ as f64;
        let rq = if denom > 0.0 { tp as f64 / denom } else { 0.0 };
        let sq = (tp > 0).then(|| iou_sum / tp as f64);
        let pq = sq.map_or(0.0, |sq| rq * sq);
        Self {
            tp,
            fp,
            fn_,
            iou_sum,
            rq,
            sq,
            pq,
        }
    }

    /// Number of ground-truth instances.
    pub fn gt_count(&self) -> u64 {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PqResult {
    pub per_class: BTreeMap<u32, ClassPq>,
    pub rq: f64,
    pub sq: Option<f64>,
    pub pq: f64,
}

/// Macro-averaged panoptic quality over classes with at least one ground-truth instance.
pub fn panoptic_quality(report: &MatchReport) -> PqResult {
    panoptic_quality_with(report, Averaging::Macro)
}

pub fn panoptic_quality_with(report: &MatchReport, averaging: Averaging) -> PqResult {
    let per_class: BTreeMap<u32, ClassPq> = report
        .classes
        .iter()
        .filter(|(_, m)| !(m.tp.is_empty() && m.fp.is_empty() && m.fn_.is_empty()))
        .map(|(&cat, m)| {
            let iou_sum = m.tp.iter().map(|t| t.iou).sum();
            (
                cat,
                ClassPq::from_counts(
                    m.tp.len() as u64,
                    m.fp.len() as u64,
                    m.fn_.len() as u64,
                    iou_sum,
                ),
            )
        })
        .collect();
    let counted: Vec<&ClassPq> = per_class.values().filter(|c| c.gt_count() > 0).collect();

    let (rq, sq, pq) = match averaging {
        Averaging::Macro => {
            if counted.is_empty() {
                (0.0, None, 0.0)
            } else {
                let n = counted.len() as f64;
                let rq = counted.iter().map(|c| c.rq).sum::<f64>() / n;
                let pq = counted.iter().map(|c| c.pq).sum::<f64>() / n;
                let sqs: Vec<f64> = counted.iter().filter_map(|c| c.sq).collect();
                let sq = (!sqs.is_empty()).then(|| sqs.iter().sum::<f64>() / sqs.len() as f64);
                (rq, sq, pq)
            }
        }
        Averaging::Micro => {
            let pooled = per_class
                .values()
                .fold(ClassPq::from_counts(0, 0, 0, 0.0), |acc, c| {
                    ClassPq::from_counts(
                        acc.tp + c.tp,
                        acc.fp + c.fp,
                        acc.fn_ + c.fn_,
                        acc.iou_sum + c.iou_sum,
                    )
                });
            (pooled.rq, pooled.sq, pooled.pq)
        }
    };
    PqResult {
        per_class,
        rq,
        sq,
        pq,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApResult {
    /// Only classes with at least one ground-truth instance.
    pub per_class: BTreeMap<u32, f64>,
    /// Mean over `per_class`, 0 when it is empty.
    pub mean: f64,
}

struct Detection {
    confidence: f64,
    id: u32,
    image: usize,
    pred: usize,
}

/// Confidence-ranked average precision at IoU threshold `tau`, per class.
///
/// Detections of one class are ranked over the whole dataset by descending
/// confidence (ties: smaller segment id, then earlier image). Each claims
/// the unclaimed ground truth of its class and image with the highest IoU
/// of at least `tau`, or counts as a false positive.
pub fn average_precision(
    data: &DatasetOverlaps,
    tau: f64,
    interpolation: ApInterpolation,
) -> Result<ApResult> {
    check_tau(tau)?;
    let mut gt_counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut detections: BTreeMap<u32, Vec<Detection>> = BTreeMap::new();
    // Per image, per prediction index: overlapping gt indices by descending IoU.
    let mut candidates: Vec<HashMap<usize, Vec<(usize, f64)>>> =
        Vec::with_capacity(data.images.len());
    for (image, img) in data.images.iter().enumerate() {
        for g in &img.gt {
            *gt_counts.entry(g.category_id).or_default() += 1;
        }
        for (pred, p) in img.pred.iter().enumerate() {
            let confidence = p.confidence.ok_or(Error::MissingConfidence { id: p.id })?;
            detections
                .entry(p.category_id)
                .or_default()
                .push(Detection {
                    confidence,
                    id: p.id,
                    image,
                    pred,
                });
        }
        let mut by_pred: HashMap<usize, Vec<(usize, f64)>> = HashMap::new();
        for pair in &img.pairs {
            if pair.iou >= tau && img.gt[pair.gt].category_id == img.pred[pair.pred].category_id {
                by_pred
                    .entry(pair.pred)
                    .or_default()
                    .push((pair.gt, pair.iou));
            }
        }
        candidates.push(by_pred);
    }

    let mut claimed: Vec<Vec<bool>> = data
        .images
        .iter()
        .map(|img| vec![false; img.gt.len()])
        .collect();
    let mut per_class = BTreeMap::new();
    for (&cat, &n_gt) in &gt_counts {
        let mut dets = detections.remove(&cat).unwrap_or_default();
        dets.sort_by(|a, b| {
            b.confidence
                .total_cmp(&a.confidence)
                .then(a.id.cmp(&b.id))
                .then(a.image.cmp(&b.image))
        });
        let hits: Vec<bool> = dets
            .iter()
            .map(|d| {
                let found = candidates[d.image]
                    .get(&d.pred)
                    .and_then(|gts| gts.iter().find(|(g, _)| !claimed[d.image][*g]));
                match found {
                    Some(&(g, _)) => {
                        claimed[d.image][g] = true;
                        true
                    }
                    None => false,
                }
            })
            .collect();
        per_class.insert(cat, ap_from_hits(&hits, n_gt, interpolation));
    }
    let mean = if per_class.is_empty() {
        0.0
    } else {
        per_class.values().sum::<f64>() / per_class.len() as f64
    };
    Ok(ApResult { per_class, mean })
}

/// AP of a ranked hit/miss sequence against `n_gt` ground truths.
pub fn ap_from_hits(hits: &[bool], n_gt: u64, interpolation: ApInterpolation) -> f64 {
    if n_gt == 0 || hits.is_empty() {
        return 0.0;
    }
    let mut tp = 0u64;
    let mut recall = Vec::with_capacity(hits.len());
    let mut precision = Vec::with_capacity(hits.len());
    for (rank, &hit) in hits.iter().enumerate() {
        if hit {
            tp += 1;
        }
        recall.push(tp as f64 / n_gt as f64);
        precision.push(tp as f64 / (rank + 1) as f64);
    }
    // Envelope: best precision at this recall or beyond.
    for i in (0..precision.len() - 1).rev() {
        precision[i] = precision[i].max(precision[i + 1]);
    }
    match interpolation {
        ApInterpolation::Coco101 => {
            let mut sum = 0.0;
            let mut idx = 0;
            for step in 0..=100u32 {
                let r = step as f64 / 100.0;
                while idx < recall.len() && recall[idx] < r {
                    idx += 1;
                }
                if idx == recall.len() {
                    break;
                }
                sum += precision[idx];
            }
            sum / 101.0
        }
        ApInterpolation::AllPoints => {
            let mut area = 0.0;
            let mut prev = 0.0;
            for (&r, &p) in recall.iter().zip(&precision) {
                area += (r - prev) * p;
                prev = r;
            }
            area
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiceResult {
    /// Classes non-empty in the ground truth or the prediction.
    pub per_class: BTreeMap<u32, f64>,
    pub mean: f64,
}

#[derive(Default, Clone, Copy)]
struct DiceCounts {
    gt: u64,
    pred: u64,
    inter: u64,
}

impl DiceCounts {
    fn value(&self) -> Option<f64> {
        let denom = self.gt + self.pred;
        (denom > 0).then(|| 2.0 * self.inter as f64 / denom as f64)
    }
}

fn image_dice_counts(img: &crate::matching::ImageOverlaps) -> BTreeMap<u32, DiceCounts> {
    let mut counts: BTreeMap<u32, DiceCounts> = BTreeMap::new();
    for g in &img.gt {
        counts.entry(g.category_id).or_default().gt += g.area;
    }
    for p in &img.pred {
        counts.entry(p.category_id).or_default().pred += p.area;
    }
    for pair in &img.pairs {
        let (g, p) = (&img.gt[pair.gt], &img.pred[pair.pred]);
        if g.category_id == p.category_id {
            counts.entry(g.category_id).or_default().inter += pair.intersection;
        }
    }
    counts
}

/// Dice between per-category semantic masks (union of each category's segments).
pub fn dice(data: &DatasetOverlaps, mode: DiceMode, averaging: Averaging) -> DiceResult {
    let per_image: Vec<BTreeMap<u32, DiceCounts>> =
        data.images.iter().map(image_dice_counts).collect();
    let mut pooled: BTreeMap<u32, DiceCounts> = BTreeMap::new();
    for counts in &per_image {
        for (&cat, c) in counts {
            let e = pooled.entry(cat).or_default();
            e.gt += c.gt;
            e.pred += c.pred;
            e.inter += c.inter;
        }
    }
    let per_class: BTreeMap<u32, f64> = match mode {
        DiceMode::Pooled => pooled
            .iter()
            .filter_map(|(&cat, c)| c.value().map(|v| (cat, v)))
            .collect(),
        DiceMode::PerImage => {
            let mut sums: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
            for counts in &per_image {
                for (&cat, c) in counts {
                    if let Some(v) = c.value() {
                        let e = sums.entry(cat).or_default();
                        e.0 += v;
                        e.1 += 1;
                    }
                }
            }
            sums.into_iter()
                .map(|(cat, (s, n))| (cat, s / n as f64))
                .collect()
        }
    };
    let mean = match averaging {
        Averaging::Macro => {
            if per_class.is_empty() {
                0.0
            } else {
                per_class.values().sum::<f64>() / per_class.len() as f64
            }
        }
        Averaging::Micro => {
            let total = pooled
                .values()
                .fold(DiceCounts::default(), |acc, c| DiceCounts {
                    gt: acc.gt + c.gt,
                    pred: acc.pred + c.pred,
                    inter: acc.inter + c.inter,
                });
            total.value().unwrap_or(0.0)
        }
    };
    DiceResult { per_class, mean }
}

/// Options for a full evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub matching: MatchConfig,
    pub averaging: Averaging,
    pub ap_interpolation: ApInterpolation,
    pub dice_mode: DiceMode,
}

impl EvalConfig {
    pub fn new(tau: f64) -> Result<Self> {
        Ok(Self {
            matching: MatchConfig::new(tau)?,
            averaging: Averaging::Macro,
            ap_interpolation: ApInterpolation::Coco101,
            dice_mode: DiceMode::Pooled,
        })
    }
}

/// Assembles a record from its parts; Dice does not depend on the threshold.
pub fn build_record(tau: f64, pq: &PqResult, ap: &ApResult, dice: &DiceResult) -> MetricsRecord {
    let cats: BTreeSet<u32> = pq
        .per_class
        .keys()
        .chain(ap.per_class.keys())
        .chain(dice.per_class.keys())
        .copied()
        .collect();
    let per_class = cats
        .into_iter()
        .map(|cat| {
            let c = pq
                .per_class
                .get(&cat)
                .copied()
                .unwrap_or_else(|| ClassPq::from_counts(0, 0, 0, 0.0));
            (
                cat,
                ClassMetrics {
                    category_id: cat,
                    tp: c.tp,
                    fp: c.fp,
                    fn_: c.fn_,
                    iou_sum: c.iou_sum,
                    rq: c.rq,
                    sq: c.sq,
                    pq: c.pq,
                    ap: ap.per_class.get(&cat).copied(),
                    dice: dice.per_class.get(&cat).copied(),
                },
            )
        })
        .collect();
    MetricsRecord {
        tau,
        rq: pq.rq,
        sq: pq.sq,
        pq: pq.pq,
        ap: ap.mean,
        dice: dice.mean,
        per_class,
    }
}

/// Every metric at `cfg.matching.tau`.
pub fn evaluate(data: &DatasetOverlaps, cfg: &EvalConfig) -> Result<MetricsRecord> {
    let dice = dice(data, cfg.dice_mode, cfg.averaging);
    evaluate_at(data, cfg, &dice)
}

pub(crate) fn evaluate_at(
    data: &DatasetOverlaps,
    cfg: &EvalConfig,
    dice: &DiceResult,
) -> Result<MetricsRecord> {
    let report = data.match_segments(&cfg.matching)?;
    let pq = panoptic_quality_with(&report, cfg.averaging);
    let ap = average_precision(data, cfg.matching.tau, cfg.ap_interpolation)?;
    Ok(build_record(cfg.matching.tau, &pq, &ap, dice))
}
