//! Threshold sweeps, cross-validation folds and fold aggregation.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{check_tau, DatasetOverlaps};
use crate::metrics::{dice, evaluate_at, EvalConfig};
use crate::synthesis::{Warning, WarningKind};
use crate::types::{MetricName, MetricsRecord};

/// 0.05, 0.10, ..., 0.90.
pub fn default_grid() -> Vec<f64> {
    (1..=18).map(|k| k as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// One record per threshold, in grid order.
    pub rows: Vec<MetricsRecord>,
    /// Threshold with the highest PQ; the smallest one on ties.
    pub optimal_tau: f64,
}

impl SweepResult {
    pub fn optimal(&self) -> &MetricsRecord {
        self.rows
            .iter()
            .find(|r| r.tau == self.optimal_tau)
            .expect("optimal threshold is one of the rows")
    }
}

pub fn check_grid(taus: &[f64]) -> Result<()> {
    if taus.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for &t in taus {
        check_tau(t)?;
    }
    if taus.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::UnsortedGrid);
    }
    Ok(())
}

/// Evaluates every threshold of `taus` over precomputed overlaps.
///
/// `cfg.matching.tau` is ignored; everything else in `cfg` applies to each row.
pub fn sweep(data: &DatasetOverlaps, taus: &[f64], cfg: &EvalConfig) -> Result<SweepResult> {
    check_grid(taus)?;
    let dice = dice(data, cfg.dice_mode, cfg.averaging);
    let rows = taus
        .par_iter()
        .map(|&tau| {
            let mut at = *cfg;
            at.matching = cfg.matching.with_tau(tau)?;
            evaluate_at(data, &at, &dice)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = &rows[0];
    for r in &rows[1..] {
        if r.pq > best.pq {
            best = r;
        }
    }
    let optimal_tau = best.tau;
    Ok(SweepResult { rows, optimal_tau })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    /// Item id to fold index in `0..k`.
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, item: &str) -> Option<usize> {
        self.assignments.get(item).copied()
    }

    /// Item ids of fold `fold`, sorted.
    pub fn members(&self, fold: usize) -> Vec<&str> {
        self.assignments
            .iter()
            .filter(|(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum GroupKey<'a> {
    Group(&'a str),
    Single(&'a str),
}

/// Splits items into `k` folds, keeping each group inside one fold.
///
/// Items are `(id, group)`; an item without a group is its own group.
/// Groups are sorted, shuffled with a generator seeded by `seed`, then
/// dealt round-robin.
pub fn kfold_split(items: &[(String, Option<String>)], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::InvalidFoldCount(k));
    }
    let mut seen = HashSet::with_capacity(items.len());
    let mut groups: BTreeMap<GroupKey, Vec<&str>> = BTreeMap::new();
    for (id, group) in items {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateItem(id.clone()));
        }
        let key = match group {
            Some(g) => GroupKey::Group(g),
            None => GroupKey::Single(id),
        };
        groups.entry(key).or_default().push(id);
    }
    if groups.len() < k {
        return Err(Error::TooFewItems {
            k,
            needed: k,
            available: groups.len(),
        });
    }
    let mut order: Vec<Vec<&str>> = groups.into_values().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let assignments = order
        .iter()
        .enumerate()
        .flat_map(|(i, members)| members.iter().map(move |id| (id.to_string(), i % k)))
        .collect();
    Ok(FoldPlan {
        k,
        seed,
        assignments,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation; absent with fewer than two values.
    pub std: Option<f64>,
    pub n: usize,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = (n > 1).then(|| {
            let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        });
        Some(Self { mean, std, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tau: f64,
    pub folds: usize,
    /// Metrics with no defined value in any fold are absent.
    pub metrics: BTreeMap<MetricName, MetricSummary>,
}

impl Summary {
    pub fn get(&self, name: MetricName) -> Option<&MetricSummary> {
        self.metrics.get(&name)
    }
}

/// Mean and sample std of each metric over fold records.
pub fn aggregate(records: &[MetricsRecord]) -> Result<(Summary, Vec<Warning>)> {
    if records.len() < 2 {
        return Err(Error::TooFewFolds(records.len()));
    }
    let tau = records[0].tau;
    if let Some(r) = records.iter().find(|r| r.tau != tau) {
        return Err(Error::MixedThresholds(tau, r.tau));
    }
    let mut warnings = Vec::new();
    let mut metrics = BTreeMap::new();
    for name in MetricName::ALL {
        let values: Vec<f64> = records.iter().filter_map(|r| r.metric(name)).collect();
        let missing = records.len() - values.len();
        if missing > 0 {
            warnings.push(Warning {
                kind: WarningKind::UndefinedExcluded,
                image_id: None,
                annotation: None,
                message: format!(
                    "{} undefined in {missing} of {} folds; excluded from its mean and std",
                    name.label(),
                    records.len()
                ),
            });
        }
        if let Some(s) = MetricSummary::from_values(&values) {
            metrics.insert(name, s);
        }
    }
    Ok((
        Summary {
            tau,
            folds: records.len(),
            metrics,
        },
        warnings,
    ))
}

/// Group values present in more than one fold; empty for a valid plan.
pub fn straddling_groups(items: &[(String, Option<String>)], plan: &FoldPlan) -> Vec<String> {
    let mut folds: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    for (id, group) in items {
        if let (Some(g), Some(f)) = (group, plan.fold_of(id)) {
            folds.entry(g).or_default().insert(f);
        }
    }
    folds
        .into_iter()
        .filter(|(_, f)| f.len() > 1)
        .map(|(g, _)| g.to_string())
        .collect()
}
