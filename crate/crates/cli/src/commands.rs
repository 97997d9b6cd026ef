use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use panoptic_eval::io::{
    classes_csv, comparison_markdown, read_box_annotations, read_categories, read_gray, read_json,
    records_csv, summaries_csv, sweep_svg, write_categories, write_json, write_panoptic,
    write_text, BoxColumns, DatasetManifest,
};
use panoptic_eval::metrics::{ApInterpolation, Averaging, DiceMode};
use panoptic_eval::{
    build_panoptic, default_grid, evaluate as evaluate_metrics, kfold_split,
    sweep as sweep_metrics, BoxAnnotation, EvalConfig, MatchConfig, MetricsRecord, SynthesisConfig,
    Warning,
};
use rayon::prelude::*;

use crate::dataset::{self, CATEGORIES_FILE};
use crate::{AggregateArgs, EvaluateArgs, MatchFlags, SplitArgs, SweepArgs, SynthesizeArgs};

const WARNINGS_FILE: &str = "warnings.jsonl";

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Prints each warning as a JSON line on stderr and writes them to `out/warnings.jsonl`.
fn emit_warnings(out: &Path, warnings: &[Warning]) -> Result<()> {
    let mut text = String::new();
    for w in warnings {
        let line = serde_json::to_string(w)?;
        eprintln!("{line}");
        text.push_str(&line);
        text.push('\n');
    }
    write_text(out.join(WARNINGS_FILE), &text)?;
    Ok(())
}

fn eval_config(tau: f64, flags: &MatchFlags) -> Result<EvalConfig> {
    let mut matching = MatchConfig::new(tau)?;
    matching.class_aware = !flags.no_class_aware;
    matching.void_forgiveness = flags.void_forgiveness;
    Ok(EvalConfig {
        matching,
        averaging: if flags.micro {
            Averaging::Micro
        } else {
            Averaging::Macro
        },
        ap_interpolation: if flags.all_points_ap {
            ApInterpolation::AllPoints
        } else {
            ApInterpolation::Coco101
        },
        dice_mode: if flags.per_image_dice {
            DiceMode::PerImage
        } else {
            DiceMode::Pooled
        },
    })
}

pub fn synthesize(args: SynthesizeArgs) -> Result<()> {
    let cfg = SynthesisConfig {
        sigma: args.sigma,
        hull_k_start: args.hull_k as usize,
        ..SynthesisConfig::default()
    };
    cfg.validate()?;
    let cats = read_categories(&args.categories)?;
    let columns = BoxColumns {
        image_id: args.image_id_col,
        xmin: args.xmin_col,
        ymin: args.ymin_col,
        xmax: args.xmax_col,
        ymax: args.ymax_col,
        category: args.category_col,
    };
    let boxes = read_box_annotations(&args.annotations, &columns, Some(&cats))?;
    let mut by_image: BTreeMap<String, Vec<BoxAnnotation>> = BTreeMap::new();
    for b in boxes {
        by_image.entry(b.image_id.clone()).or_default().push(b);
    }

    let mut image_ids: BTreeSet<String> = BTreeSet::new();
    for entry in
        fs::read_dir(&args.images).with_context(|| format!("reading {}", args.images.display()))?
    {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "png") {
            if let Some(stem) = path.file_stem() {
                image_ids.insert(stem.to_string_lossy().into_owned());
            }
        }
    }
    if let Some(missing) = by_image.keys().find(|id| !image_ids.contains(*id)) {
        bail!(
            "annotations reference image {missing:?}, which is not in {}",
            args.images.display()
        );
    }

    create_dir(&args.out)?;
    let ids: Vec<&String> = image_ids.iter().collect();
    let warnings: Vec<Vec<Warning>> = ids
        .par_iter()
        .map(|id| -> Result<Vec<Warning>> {
            let img = read_gray(args.images.join(format!("{id}.png")))?;
            let anns = by_image.get(*id).map_or(&[][..], Vec::as_slice);
            let out =
                build_panoptic(&img, anns, &cfg, &cats).with_context(|| format!("image {id}"))?;
            write_panoptic(&args.out, id, &out.map)?;
            Ok(out.warnings)
        })
        .collect::<Result<_>>()?;
    write_categories(args.out.join(CATEGORIES_FILE), &cats)?;
    emit_warnings(&args.out, &warnings.concat())
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let cfg = eval_config(args.tau, &args.flags)?;
    let (data, warnings) = dataset::load(&args.gt, &args.pred)?;
    let record = evaluate_metrics(&data, &cfg)?;
    create_dir(&args.out)?;
    write_json(args.out.join("metrics.json"), &record)?;
    write_text(
        args.out.join("metrics.csv"),
        &records_csv(std::slice::from_ref(&record))?,
    )?;
    write_text(args.out.join("classes.csv"), &classes_csv(&record))?;
    emit_warnings(&args.out, &warnings)
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let taus = args.taus.clone().unwrap_or_else(default_grid);
    let cfg = eval_config(taus.first().copied().unwrap_or(0.5), &args.flags)?;
    let (data, warnings) = dataset::load(&args.gt, &args.pred)?;
    let result = sweep_metrics(&data, &taus, &cfg)?;
    create_dir(&args.out)?;
    write_json(args.out.join("sweep.json"), &result)?;
    write_text(args.out.join("sweep.csv"), &records_csv(&result.rows)?)?;
    write_text(args.out.join("sweep.svg"), &sweep_svg(&result)?)?;
    println!("optimal tau: {:.2}", result.optimal_tau);
    emit_warnings(&args.out, &warnings)
}

pub fn split(args: SplitArgs) -> Result<()> {
    let mut manifest = DatasetManifest::read(&args.manifest)?;
    let plan = kfold_split(&manifest.split_items(), args.k as usize, args.seed)?;
    manifest.assign_folds(&plan);
    manifest.write(args.out.as_ref().unwrap_or(&args.manifest))?;
    Ok(())
}

pub fn aggregate(args: AggregateArgs) -> Result<()> {
    let records = args
        .inputs
        .iter()
        .map(|p| read_json::<MetricsRecord>(p).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    let (summary, warnings) = panoptic_eval::aggregate(&records)?;
    create_dir(&args.out)?;
    let rows = [(args.name.clone(), summary)];
    write_json(args.out.join("summary.json"), &rows[0].1)?;
    write_text(args.out.join("summary.csv"), &summaries_csv(&rows)?)?;
    write_text(args.out.join("summary.md"), &comparison_markdown(&rows)?)?;
    emit_warnings(&args.out, &warnings)
}
