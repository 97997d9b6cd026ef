//! Pairing predicted segments with ground-truth segments at an IoU threshold.
//!
//! One pass over the pixels of a (ground truth, prediction) pair yields every
//! pairwise intersection; IoUs follow from the segment areas. Candidate
//! pairs are sorted once by descending IoU, so matching at any threshold is a
//! greedy scan over a prefix of that list. This is what makes the
//! filtration property hold: `TP(t2)` is exactly the part of `TP(t1)` with
//! IoU at least `t2`, for `t1 < t2`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BinaryMask, CategoryTable, PanopticMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub tau: f64,
    pub class_aware: bool,
    pub void_forgiveness: bool,
}

impl MatchConfig {
    pub fn new(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self {
            tau,
            class_aware: true,
            void_forgiveness: false,
        })
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self { tau, ..*self })
    }
}

pub(crate) fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidThreshold(tau))
    }
}

/// `|a ∩ b| / |a ∪ b|`, or 0 when both masks are empty.
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64> {
    let inter = a.intersection_area(b)?;
    let union = a.area() + b.area() - inter;
    Ok(ratio(inter, union))
}

fn ratio(inter: u64, union: u64) -> f64 {
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Fails unless both maps were labeled with the same category table.
pub fn check_category_tables(gt: &CategoryTable, pred: &CategoryTable) -> Result<()> {
    if gt == pred {
        Ok(())
    } else {
        Err(Error::CategoryTableMismatch)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub id: u32,
    pub category_id: u32,
    /// Pixel count in the id map.
    pub area: u64,
    pub confidence: Option<f64>,
}

/// Intersection of ground-truth segment `gt` and prediction segment `pred`,
/// both given as indices into the owning [`ImageOverlaps`] tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairOverlap {
    pub gt: usize,
    pub pred: usize,
    pub intersection: u64,
    pub iou: f64,
}

/// Everything evaluation needs from one image pair, without the pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageOverlaps {
    pub gt: Vec<SegmentInfo>,
    pub pred: Vec<SegmentInfo>,
    /// Overlapping pairs, by descending IoU, then ascending gt id, then pred id.
    pub pairs: Vec<PairOverlap>,
    /// Per prediction, the number of its pixels over ground-truth void.
    pub pred_void: Vec<u64>,
}

fn segment_table(map: &PanopticMap) -> (Vec<SegmentInfo>, HashMap<u32, usize>) {
    let mut segs: Vec<SegmentInfo> = map
        .segments()
        .iter()
        .map(|s| SegmentInfo {
            id: s.id,
            category_id: s.category_id,
            area: 0,
            confidence: s.confidence,
        })
        .collect();
    segs.sort_by_key(|s| s.id);
    let index = segs.iter().enumerate().map(|(i, s)| (s.id, i)).collect();
    (segs, index)
}

fn lookup(index: &HashMap<u32, usize>, id: u32, which: &str) -> Result<usize> {
    index.get(&id).copied().ok_or_else(|| {
        Error::OverlapViolation(format!("{which} id {id} is missing from its segment table"))
    })
}

impl ImageOverlaps {
    pub fn compute(gt: &PanopticMap, pred: &PanopticMap) -> Result<Self> {
        if gt.dims() != pred.dims() {
            return Err(Error::DimensionMismatch {
                left: gt.dims(),
                right: pred.dims(),
            });
        }
        let (mut gt_segs, gt_index) = segment_table(gt);
        let (mut pred_segs, pred_index) = segment_table(pred);
        let mut pred_void = vec![0u64; pred_segs.len()];
        let mut inter: HashMap<(usize, usize), u64> = HashMap::new();

        // Runs of equal ids are common, so cache the last lookups.
        let mut last_g = (0u32, usize::MAX);
        let mut last_p = (0u32, usize::MAX);
        let mut last_pair = ((usize::MAX, usize::MAX), 0u64);
        for (&g, &p) in gt.id_map().iter().zip(pred.id_map()) {
            if g == 0 && p == 0 {
                continue;
            }
            let gi = if g == 0 {
                usize::MAX
            } else {
                if g != last_g.0 {
                    last_g = (g, lookup(&gt_index, g, "ground-truth")?);
                }
                gt_segs[last_g.1].area += 1;
                last_g.1
            };
            if p == 0 {
                continue;
            }
            if p != last_p.0 {
                last_p = (p, lookup(&pred_index, p, "prediction")?);
            }
            let pi = last_p.1;
            pred_segs[pi].area += 1;
            if gi == usize::MAX {
                pred_void[pi] += 1;
                continue;
            }
            if last_pair.0 == (gi, pi) {
                last_pair.1 += 1;
            } else {
                if last_pair.0 .0 != usize::MAX {
                    *inter.entry(last_pair.0).or_default() += last_pair.1;
                }
                last_pair = ((gi, pi), 1);
            }
        }
        if last_pair.0 .0 != usize::MAX {
            *inter.entry(last_pair.0).or_default() += last_pair.1;
        }

        let mut pairs: Vec<PairOverlap> = inter
            .into_iter()
            .map(|((g, p), n)| PairOverlap {
                gt: g,
                pred: p,
                intersection: n,
                iou: ratio(n, gt_segs[g].area + pred_segs[p].area - n),
            })
            .collect();
        pairs.sort_by(|a, b| {
            b.iou
                .total_cmp(&a.iou)
                .then(gt_segs[a.gt].id.cmp(&gt_segs[b.gt].id))
                .then(pred_segs[a.pred].id.cmp(&pred_segs[b.pred].id))
        });
        Ok(Self {
            gt: gt_segs,
            pred: pred_segs,
            pairs,
            pred_void,
        })
    }

    /// Greedy one-to-one matching at `cfg.tau`; segments are tagged with `image`.
    pub fn match_segments(&self, cfg: &MatchConfig, image: usize) -> MatchReport {
        let mut report = MatchReport::new(cfg.tau);
        self.match_into(cfg, image, &mut report);
        report
    }

    fn match_into(&self, cfg: &MatchConfig, image: usize, report: &mut MatchReport) {
        let mut gt_taken = vec![false; self.gt.len()];
        let mut pred_taken = vec![false; self.pred.len()];
        for pair in self.pairs.iter().take_while(|p| p.iou >= cfg.tau) {
            if gt_taken[pair.gt] || pred_taken[pair.pred] {
                continue;
            }
            let (g, p) = (&self.gt[pair.gt], &self.pred[pair.pred]);
            if cfg.class_aware && g.category_id != p.category_id {
                continue;
            }
            gt_taken[pair.gt] = true;
            pred_taken[pair.pred] = true;
            report.class_mut(g.category_id).tp.push(TruePositive {
                image,
                gt_id: g.id,
                pred_id: p.id,
                iou: pair.iou,
            });
        }
        for (g, taken) in self.gt.iter().zip(&gt_taken) {
            if !taken {
                report
                    .class_mut(g.category_id)
                    .fn_
                    .push(SegmentRef { image, id: g.id });
            }
        }
        for (i, (p, taken)) in self.pred.iter().zip(&pred_taken).enumerate() {
            if *taken {
                continue;
            }
            let seg = SegmentRef { image, id: p.id };
            let class = report.class_mut(p.category_id);
            // More than half of the prediction over void.
            if cfg.void_forgiveness && 2 * self.pred_void[i] > p.area {
                class.ignored.push(seg);
            } else {
                class.fp.push(seg);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SegmentRef {
    pub image: usize,
    pub id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruePositive {
    pub image: usize,
    pub gt_id: u32,
    pub pred_id: u32,
    pub iou: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMatches {
    pub tp: Vec<TruePositive>,
    pub fp: Vec<SegmentRef>,
    #[serde(rename = "fn")]
    pub fn_: Vec<SegmentRef>,
    /// Unmatched predictions discarded by void forgiveness.
    pub ignored: Vec<SegmentRef>,
}

/// Matches grouped by category. In class-agnostic mode a true positive is
/// filed under its ground-truth category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub tau: f64,
    pub classes: BTreeMap<u32, ClassMatches>,
}

impl MatchReport {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            classes: BTreeMap::new(),
        }
    }

    pub fn class_mut(&mut self, category_id: u32) -> &mut ClassMatches {
        self.classes.entry(category_id).or_default()
    }

    /// Appends another report's entries; order within classes follows call order.
    pub fn merge(&mut self, other: MatchReport) {
        for (cat, m) in other.classes {
            let c = self.class_mut(cat);
            c.tp.extend(m.tp);
            c.fp.extend(m.fp);
            c.fn_.extend(m.fn_);
            c.ignored.extend(m.ignored);
        }
    }
}

/// Matches a single image pair.
pub fn match_segments(
    gt: &PanopticMap,
    pred: &PanopticMap,
    cfg: &MatchConfig,
) -> Result<MatchReport> {
    check_tau(cfg.tau)?;
    Ok(ImageOverlaps::compute(gt, pred)?.match_segments(cfg, 0))
}

/// Overlap tables of a whole dataset, image index = position.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetOverlaps {
    pub images: Vec<ImageOverlaps>,
}

impl DatasetOverlaps {
    pub fn new(images: Vec<ImageOverlaps>) -> Self {
        Self { images }
    }

    /// Computes the overlap table of every pair in parallel.
    pub fn compute(pairs: &[(PanopticMap, PanopticMap)]) -> Result<Self> {
        let images = pairs
            .par_iter()
            .map(|(g, p)| ImageOverlaps::compute(g, p))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { images })
    }

    pub fn match_segments(&self, cfg: &MatchConfig) -> Result<MatchReport> {
        check_tau(cfg.tau)?;
        let mut report = MatchReport::new(cfg.tau);
        for (i, img) in self.images.iter().enumerate() {
            img.match_into(cfg, i, &mut report);
        }
        Ok(report)
    }
}
