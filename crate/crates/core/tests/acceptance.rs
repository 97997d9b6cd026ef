//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use panoptic_eval::experiment::straddling_groups;
use panoptic_eval::imgproc::{blur, concave_hull, convex_hull, otsu_from_histogram, Point};
use panoptic_eval::io::{read_panoptic, summaries_csv, sweep_svg, write_panoptic, MAX_ID};
use panoptic_eval::matching::{ClassMatches, SegmentRef, TruePositive};
use panoptic_eval::metrics::{ap_from_hits, ApInterpolation, DiceMode};
use panoptic_eval::synthesis::synthesize_segment;
use panoptic_eval::{
    aggregate, average_precision, build_panoptic, default_grid, dice, evaluate, kfold_split,
    panoptic_quality, sweep, BitDepth, CategoryTable, DatasetOverlaps, EvalConfig, GrayImage,
    ImageOverlaps, MatchReport, MetricName, MetricSummary, MetricsRecord, PanopticMap, Summary,
    SynthesisConfig, WarningKind,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// 1. PQ identities on random match reports.

fn random_report(r: &mut ChaCha8Rng) -> MatchReport {
    let mut report = MatchReport::new(0.5);
    for cat in 1..=r.gen_range(1..=6u32) {
        let tp = r.gen_range(0..25);
        let c = ClassMatches {
            tp: (0..tp)
                .map(|i| TruePositive {
                    image: 0,
                    gt_id: i,
                    pred_id: i,
                    iou: r.gen_range(0.5..=1.0),
                })
                .collect(),
            fp: (0..r.gen_range(0..25))
                .map(|id| SegmentRef { image: 0, id })
                .collect(),
            fn_: (0..r.gen_range(0..25))
                .map(|id| SegmentRef { image: 0, id })
                .collect(),
            ignored: vec![],
        };
        *report.class_mut(cat) = c;
    }
    report
}

fn identity_suite() -> Outcome {
    let mut r = rng(1);
    let mut checked = 0;
    for _ in 0..1000 {
        let report = random_report(&mut r);
        let pq = panoptic_quality(&report);
        for (cat, m) in &report.classes {
            let Some(c) = pq.per_class.get(cat) else {
                ensure!(
                    m.tp.is_empty() && m.fp.is_empty() && m.fn_.is_empty(),
                    "class {cat} missing"
                );
                continue;
            };
            let iou_sum: f64 = m.tp.iter().map(|t| t.iou).sum();
            let (tp, fp, fn_) = (m.tp.len() as f64, m.fp.len() as f64, m.fn_.len() as f64);
            let single = iou_sum / (tp + 0.5 * fp + 0.5 * fn_);
            ensure!(
                (c.pq - single).abs() <= 1e-12,
                "PQ {} vs single fraction {single}",
                c.pq
            );
            if let Some(sq) = c.sq {
                ensure!(
                    (c.pq - c.rq * sq).abs() <= 1e-12,
                    "PQ {} vs RQ·SQ {}",
                    c.pq,
                    c.rq * sq
                );
            } else {
                ensure!(c.pq == 0.0 && m.tp.is_empty(), "undefined SQ with TP > 0");
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} class records"))
}

// ---------------------------------------------------------------------------
// 2. Monotonicity of RQ/SQ over the threshold grid and TP filtration.

type TpKey = (u32, usize, u32, u32);

fn tp_set(report: &MatchReport) -> BTreeMap<TpKey, f64> {
    report
        .classes
        .iter()
        .flat_map(|(&cat, m)| {
            m.tp.iter()
                .map(move |t| ((cat, t.image, t.gt_id, t.pred_id), t.iou))
        })
        .collect()
}

fn monotonicity_suite() -> Outcome {
    let start = Instant::now();
    let grid = default_grid();
    let mut r = rng(2);
    let mut svg_checked = false;
    for case in 0..200 {
        let (gt, pred) = common::random_pair(&mut r, 96, 96, 8, 3);
        let data = DatasetOverlaps::compute(&[(gt, pred)]).map_err(|e| e.to_string())?;
        let cfg = EvalConfig::new(0.5).unwrap();
        let result = sweep(&data, &grid, &cfg).map_err(|e| e.to_string())?;
        for w in result.rows.windows(2) {
            ensure!(
                w[1].rq <= w[0].rq,
                "case {case}: RQ rose from {} to {}",
                w[0].rq,
                w[1].rq
            );
            if let (Some(a), Some(b)) = (w[0].sq, w[1].sq) {
                ensure!(b >= a, "case {case}: SQ fell from {a} to {b}");
            }
        }
        let sets: Vec<BTreeMap<TpKey, f64>> = grid
            .iter()
            .map(|&t| {
                tp_set(
                    &data
                        .match_segments(&cfg.matching.with_tau(t).unwrap())
                        .unwrap(),
                )
            })
            .collect();
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                let filtered: BTreeSet<&TpKey> = sets[i]
                    .iter()
                    .filter(|(_, &iou)| iou >= grid[j])
                    .map(|(k, _)| k)
                    .collect();
                let direct: BTreeSet<&TpKey> = sets[j].keys().collect();
                ensure!(
                    filtered == direct,
                    "case {case}: TP({}) is not TP({}) filtered",
                    grid[j],
                    grid[i]
                );
            }
        }
        if !svg_checked {
            let svg = sweep_svg(&result).map_err(|e| e.to_string())?;
            ensure!(
                svg.matches(r#"class="series""#).count() == 3,
                "SVG series count"
            );
            ensure!(
                svg.matches(r#"class="tick""#).count() == 18,
                "SVG tick count"
            );
            for label in ["PQ", "RQ", "SQ"] {
                ensure!(
                    svg.contains(&format!(r#"id="series-{label}""#)),
                    "SVG lacks {label}"
                );
            }
            ensure!(svg.contains("IoU threshold"), "SVG x label");
            svg_checked = true;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("200 pairs in {:.1}s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 3. Oracles for Otsu, blur and the concave hull.

/// Exhaustive Otsu: argmax of (s0·n1 − s1·n0)² / (n0·n1), first maximum wins.
fn otsu_oracle(hist: &[u64; 256]) -> u8 {
    let mut best: Option<(usize, u128, u128)> = None;
    for t in 0..255 {
        let (mut n0, mut s0, mut n1, mut s1) = (0u128, 0u128, 0u128, 0u128);
        for (i, &c) in hist.iter().enumerate() {
            if i <= t {
                n0 += c as u128;
                s0 += i as u128 * c as u128;
            } else {
                n1 += c as u128;
                s1 += i as u128 * c as u128;
            }
        }
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = (s0 * n1).abs_diff(s1 * n0);
        let (num, den) = (d * d, n0 * n1);
        match best {
            Some((_, bn, bd)) if num * bd <= bn * den => {}
            _ => best = Some((t, num, den)),
        }
    }
    best.unwrap().0 as u8
}

fn reflect_oracle(i: i64, n: i64) -> usize {
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - 1 - i;
        } else {
            return i as usize;
        }
    }
}

fn dense_blur(img: &GrayImage, sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            kernel.push((
                dx,
                dy,
                (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp(),
            ));
        }
    }
    let z: f64 = kernel.iter().map(|k| k.2).sum();
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut out = vec![0.0; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for &(dx, dy, k) in &kernel {
                acc += k * img.get(reflect_oracle(x + dx, w), reflect_oracle(y + dy, h)) as f64;
            }
            out[(y * w + x) as usize] = acc / z;
        }
    }
    out
}

/// Winding-number containment with explicit boundary test.
fn inside_oracle(poly: &[Point], p: Point) -> bool {
    let n = poly.len();
    let mut winding = 0i32;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        let within = p.x >= a.x.min(b.x)
            && p.x <= a.x.max(b.x)
            && p.y >= a.y.min(b.y)
            && p.y <= a.y.max(b.y);
        if cross == 0.0 && within {
            return true;
        }
        if a.y <= p.y {
            if b.y > p.y && cross > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && cross < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Lattice points on the circle x² + y² = 1105², all in convex position.
fn circle_lattice() -> Vec<Point> {
    let r: i64 = 1105;
    let mut pts = Vec::new();
    for x in -r..=r {
        let y2 = r * r - x * x;
        let y = (y2 as f64).sqrt().round() as i64;
        if y * y == y2 {
            pts.push(Point::new(x as f64, y as f64));
            if y != 0 {
                pts.push(Point::new(x as f64, -y as f64));
            }
        }
    }
    pts
}

fn vertex_set(pts: &[Point]) -> BTreeSet<(i64, i64)> {
    pts.iter().map(|p| (p.x as i64, p.y as i64)).collect()
}

fn oracle_suite() -> Outcome {
    let mut r = rng(3);
    for case in 0..100 {
        let mut hist = [0u64; 256];
        let occupied = r.gen_range(2..=256);
        for _ in 0..occupied {
            hist[r.gen_range(0..256)] += r.gen_range(1..100);
        }
        if hist.iter().filter(|&&c| c > 0).count() < 2 {
            hist[0] += 1;
            hist[255] += 1;
        }
        let got = otsu_from_histogram(&hist).map_err(|e| e.to_string())?;
        let want = otsu_oracle(&hist);
        ensure!(got == want, "histogram {case}: otsu {got}, oracle {want}");
    }

    let mut worst = 0.0f64;
    for case in 0..20 {
        let data: Vec<u16> = (0..64 * 64).map(|_| r.gen_range(0..256)).collect();
        let img = GrayImage::new(64, 64, BitDepth::Eight, data).unwrap();
        let fast = blur(&img, 7.0).map_err(|e| e.to_string())?;
        let slow = dense_blur(&img, 7.0);
        for (a, b) in fast.data().iter().zip(&slow) {
            ensure!(
                approx::relative_eq!(*a, *b, epsilon = 1e-12, max_relative = 1e-6),
                "image {case}: separable {a} vs dense {b}"
            );
            worst = worst.max((a - b).abs() / b.abs().max(1e-12));
        }
    }

    for case in 0..100 {
        let n = r.gen_range(4..80);
        let pts: Vec<Point> = (0..n)
            .map(|_| Point::new(r.gen_range(0..100) as f64, r.gen_range(0..100) as f64))
            .collect();
        let hull = concave_hull(&pts, 3).map_err(|e| format!("set {case}: {e}"))?;
        for p in &pts {
            ensure!(
                inside_oracle(hull.vertices(), *p),
                "set {case}: point {p:?} outside"
            );
        }
    }

    let lattice = circle_lattice();
    for case in 0..100 {
        let n = r.gen_range(4..=lattice.len().min(40));
        let pts: Vec<Point> = rand::seq::index::sample(&mut r, lattice.len(), n)
            .into_iter()
            .map(|i| lattice[i])
            .collect();
        let concave = concave_hull(&pts, 3).map_err(|e| e.to_string())?;
        let convex = convex_hull(&pts).map_err(|e| e.to_string())?;
        ensure!(
            vertex_set(concave.vertices()) == vertex_set(convex.vertices()),
            "convex set {case}: hulls differ"
        );
        ensure!(
            concave.area().abs() == convex.area().abs(),
            "convex set {case}: areas differ"
        );
        ensure!(
            vertex_set(&pts) == vertex_set(convex.vertices()),
            "convex set {case}: point dropped"
        );
    }
    Ok(format!("blur worst relative error {worst:.1e}"))
}

// ---------------------------------------------------------------------------
// 4. Hand-computed metric values.

fn map(w: usize, ids: Vec<u32>, labels: &[(u32, u32, Option<f64>)]) -> PanopticMap {
    let l: HashMap<u32, (u32, Option<f64>)> =
        labels.iter().map(|&(id, c, s)| (id, (c, s))).collect();
    PanopticMap::from_id_map(w, ids.len() / w, ids, &l).unwrap()
}

fn hand_values() -> Outcome {
    // One TP at IoU 0.6 (3 of 5 pixels), one FP, one FN.
    let gt = map(
        10,
        vec![1, 1, 1, 1, 0, 0, 2, 2, 0, 0],
        &[(1, 1, None), (2, 1, None)],
    );
    let pred = map(
        10,
        vec![0, 5, 5, 5, 5, 0, 0, 0, 6, 6],
        &[(5, 1, Some(0.9)), (6, 1, Some(0.4))],
    );
    let data = DatasetOverlaps::compute(&[(gt, pred)]).unwrap();
    let rec = evaluate(&data, &EvalConfig::new(0.5).unwrap()).map_err(|e| e.to_string())?;
    ensure!(rec.rq == 0.5, "RQ {}", rec.rq);
    ensure!(rec.sq == Some(0.6), "SQ {:?}", rec.sq);
    ensure!((rec.pq - 0.30).abs() < 1e-15, "PQ {}", rec.pq);

    // Two GT; hit (0.9), miss (0.7), hit (0.5).
    let gt = map(6, vec![1, 1, 0, 0, 2, 2], &[(1, 3, None), (2, 3, None)]);
    let pred = map(
        6,
        vec![7, 7, 8, 0, 9, 9],
        &[(7, 3, Some(0.9)), (8, 3, Some(0.7)), (9, 3, Some(0.5))],
    );
    let data = DatasetOverlaps::compute(&[(gt, pred)]).unwrap();
    let ap = average_precision(&data, 0.5, ApInterpolation::Coco101).map_err(|e| e.to_string())?;
    let expected = (51.0 + 50.0 * (2.0 / 3.0)) / 101.0;
    ensure!(
        (ap.mean - expected).abs() < 1e-12,
        "AP {} vs {expected}",
        ap.mean
    );
    ensure!(
        (ap.mean - 0.8350).abs() <= 1e-4,
        "AP {} not ≈ 0.8350",
        ap.mean
    );
    ensure!(
        ap_from_hits(&[true, false, true], 2, ApInterpolation::Coco101) == ap.mean,
        "AP curve"
    );

    // |P| = |G| = 100, overlap 50.
    let mut g = vec![0u32; 150];
    let mut p = vec![0u32; 150];
    g[..100].fill(1);
    p[50..].fill(1);
    let data =
        DatasetOverlaps::compute(&[(map(10, g, &[(1, 4, None)]), map(10, p, &[(1, 4, None)]))])
            .unwrap();
    let d = dice(&data, DiceMode::Pooled, Default::default());
    ensure!(d.mean == 0.5, "Dice {}", d.mean);
    Ok("PQ (0.5, 0.6, 0.30), AP 0.8350, Dice 0.5".into())
}

// ---------------------------------------------------------------------------
// 5. Ground truth against itself is perfect everywhere.

fn birads() -> CategoryTable {
    CategoryTable::from_ids([3, 4, 5]).unwrap()
}

fn end_to_end() -> Outcome {
    let mut r = rng(5);
    let cats = birads();
    let cfg = SynthesisConfig::default();
    let mut pairs = Vec::new();
    for i in 0..20 {
        let count = r.gen_range(1..=3);
        let blob = common::blob_image(&mut r, &format!("img{i}"), 256, 256, count);
        let out =
            build_panoptic(&blob.image, &blob.boxes, &cfg, &cats).map_err(|e| e.to_string())?;
        let mut pred = out.map.clone();
        pred.fill_missing_confidence(1.0);
        pairs.push((out.map, pred));
    }
    let data = DatasetOverlaps::compute(&pairs).map_err(|e| e.to_string())?;
    let result =
        sweep(&data, &default_grid(), &EvalConfig::new(0.5).unwrap()).map_err(|e| e.to_string())?;
    for row in &result.rows {
        for m in MetricName::ALL {
            ensure!(
                row.metric(m) == Some(1.0),
                "{} = {:?} at tau {}",
                m.label(),
                row.metric(m),
                row.tau
            );
        }
    }
    ensure!(
        result.optimal_tau == 0.05,
        "optimal tau {}",
        result.optimal_tau
    );
    Ok(format!(
        "{} segments, 18 thresholds",
        pairs.iter().map(|p| p.0.segments().len()).sum::<usize>()
    ))
}

// ---------------------------------------------------------------------------
// 6. Synthesized segments recover known lesion supports.

fn synthesis_fidelity() -> Outcome {
    let mut r = rng(6);
    let cats = birads();
    let cfg = SynthesisConfig::default();
    ensure!(cfg.sigma == 7.0, "default sigma {}", cfg.sigma);
    let (mut good, mut total) = (0, 0);
    let mut worst = 1.0f64;
    for i in 0..60 {
        let count = r.gen_range(1..=3);
        let blob = common::blob_image(&mut r, &format!("img{i}"), 256, 256, count);
        let out =
            build_panoptic(&blob.image, &blob.boxes, &cfg, &cats).map_err(|e| e.to_string())?;
        for (k, e) in blob.blobs.iter().enumerate() {
            let truth = e.support(256, 256);
            let seg = out.map.segment_mask(k as u32 + 1);
            let inter = seg.intersection_area(&truth).unwrap() as f64;
            let iou = inter / ((seg.area() + truth.area()) as f64 - inter).max(1.0);
            total += 1;
            worst = worst.min(iou);
            if iou >= 0.7 {
                good += 1;
            }
        }
    }
    let rate = good as f64 / total as f64;
    ensure!(
        rate >= 0.95,
        "{good}/{total} boxes reach IoU 0.7 (worst {worst:.3})"
    );

    let flat = GrayImage::from_u8(64, 64, &[100; 64 * 64]).unwrap();
    let ann = panoptic_eval::BoxAnnotation::new("flat", (10, 12, 30, 40), 4).unwrap();
    let seg = synthesize_segment(&flat, &ann, &cfg).map_err(|e| e.to_string())?;
    ensure!(
        seg.fallback.is_some() && seg.mask.area() == 20 * 28,
        "flat box did not fall back"
    );
    let out = build_panoptic(&flat, &[ann], &cfg, &cats).map_err(|e| e.to_string())?;
    ensure!(
        out.warnings
            .iter()
            .any(|w| w.kind == WarningKind::WholeBoxFallback && w.annotation == Some(0)),
        "fallback not logged"
    );
    Ok(format!(
        "{good}/{total} boxes at IoU >= 0.7, worst {worst:.3}"
    ))
}

// ---------------------------------------------------------------------------
// 7. Panoptic files round-trip exactly; table cells match the reporting style.

fn format_exactness() -> Outcome {
    let mut r = rng(7);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for case in 0..100 {
        let (w, h) = (r.gen_range(1..48), r.gen_range(1..48));
        let n = r.gen_range(0..12);
        let mut ids: Vec<u32> = Vec::new();
        while ids.len() < n {
            let id = if r.gen_bool(0.5) {
                MAX_ID - r.gen_range(0..300)
            } else {
                r.gen_range(1..MAX_ID)
            };
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        if case == 0 {
            ids = vec![MAX_ID, MAX_ID - 1, 65535, 65536, 70000, 255, 256];
        }
        let pixels: Vec<u32> = (0..w * h)
            .map(|_| {
                if ids.is_empty() || r.gen_bool(0.2) {
                    0
                } else {
                    ids[r.gen_range(0..ids.len())]
                }
            })
            .collect();
        let labels: HashMap<u32, (u32, Option<f64>)> = ids
            .iter()
            .map(|&id| {
                (
                    id,
                    (r.gen_range(1..9), r.gen_bool(0.7).then(|| r.gen::<f64>())),
                )
            })
            .collect();
        let m = PanopticMap::from_id_map(w, h, pixels, &labels).unwrap();
        let path =
            write_panoptic(dir.path(), &format!("m{case}"), &m).map_err(|e| e.to_string())?;
        let back = read_panoptic(&path).map_err(|e| e.to_string())?;
        ensure!(back == m, "map {case} changed in the round trip");
        let bytes = (
            std::fs::read(&path).unwrap(),
            std::fs::read(path.with_extension("json")).unwrap(),
        );
        write_panoptic(dir.path(), &format!("m{case}"), &back).map_err(|e| e.to_string())?;
        let again = (
            std::fs::read(&path).unwrap(),
            std::fs::read(path.with_extension("json")).unwrap(),
        );
        ensure!(bytes == again, "map {case}: rewrite is not byte-identical");
    }

    let mut metrics = BTreeMap::new();
    metrics.insert(
        MetricName::Pq,
        MetricSummary {
            mean: 0.2544,
            std: Some(0.0187),
            n: 5,
        },
    );
    let summary = Summary {
        tau: 0.5,
        folds: 5,
        metrics,
    };
    let csv = summaries_csv(&[("M".into(), summary)]).map_err(|e| e.to_string())?;
    ensure!(csv.contains(",25.44 ± 1.87,"), "cell missing in {csv:?}");
    Ok("100 maps, cell \"25.44 ± 1.87\"".into())
}

// ---------------------------------------------------------------------------
// 8. Grouped folds and aggregation.

fn split_integrity() -> Outcome {
    let mut r = rng(8);
    let mut items: Vec<(String, Option<String>)> = (0..200)
        .map(|g| (format!("item{g:03}"), Some(format!("patient{g:03}"))))
        .collect();
    for i in 200..500 {
        items.push((
            format!("item{i:03}"),
            Some(format!("patient{:03}", r.gen_range(0..200))),
        ));
    }
    let plan = kfold_split(&items, 5, 2024).map_err(|e| e.to_string())?;

    let ids: HashSet<&str> = items.iter().map(|(id, _)| id.as_str()).collect();
    ensure!(
        plan.assignments.len() == 500,
        "{} items assigned",
        plan.assignments.len()
    );
    ensure!(
        plan.assignments.keys().all(|k| ids.contains(k.as_str())),
        "unknown item assigned"
    );
    ensure!(
        plan.assignments.values().all(|&f| f < 5),
        "fold index out of range"
    );
    let mut union = 0;
    for f in 0..5 {
        union += plan.members(f).len();
    }
    ensure!(union == 500, "folds do not partition the items");
    ensure!(
        straddling_groups(&items, &plan).is_empty(),
        "a group straddles folds"
    );
    let mut group_fold: HashMap<&str, usize> = HashMap::new();
    for (id, g) in &items {
        let f = plan.fold_of(id).unwrap();
        if let Some(prev) = group_fold.insert(g.as_deref().unwrap(), f) {
            ensure!(prev == f, "group {g:?} in folds {prev} and {f}");
        }
    }
    let mut groups_per_fold = [0usize; 5];
    for &f in group_fold.values() {
        groups_per_fold[f] += 1;
    }
    let (lo, hi) = (
        groups_per_fold.iter().min().unwrap(),
        groups_per_fold.iter().max().unwrap(),
    );
    ensure!(hi - lo <= 1, "groups per fold {groups_per_fold:?}");
    ensure!(
        plan == kfold_split(&items, 5, 2024).unwrap(),
        "same seed gave a different plan"
    );

    let records: Vec<MetricsRecord> = (1..=5)
        .map(|v| MetricsRecord {
            tau: 0.5,
            rq: 0.5,
            sq: Some(0.5),
            pq: v as f64,
            ap: 0.5,
            dice: 0.5,
            per_class: BTreeMap::new(),
        })
        .collect();
    let (summary, _) = aggregate(&records).map_err(|e| e.to_string())?;
    let pq = summary.get(MetricName::Pq).unwrap();
    ensure!(pq.mean == 3.0, "mean {}", pq.mean);
    ensure!(
        (pq.std.unwrap() - 2.5f64.sqrt()).abs() < 1e-12,
        "std {:?}",
        pq.std
    );
    Ok(format!(
        "groups per fold {groups_per_fold:?}, mean 3, std {:.4}",
        pq.std.unwrap()
    ))
}

// ---------------------------------------------------------------------------
// 9. Throughput and determinism across thread counts.

fn streamed_eval(threads: usize) -> Result<MetricsRecord, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    pool.install(|| {
        use rayon::prelude::*;
        let images = (0..1000u64)
            .into_par_iter()
            .map(|i| {
                let mut r = rng(9_000 + i);
                let (gt, pred) = common::random_pair(&mut r, 512, 512, 10, 3);
                ImageOverlaps::compute(&gt, &pred)
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        evaluate(
            &DatasetOverlaps::new(images),
            &EvalConfig::new(0.5).unwrap(),
        )
        .map_err(|e| e.to_string())
    })
}

fn throughput() -> Outcome {
    let start = Instant::now();
    let four = streamed_eval(4)?;
    let elapsed = start.elapsed();
    ensure!(
        elapsed < Duration::from_secs(30),
        "4 threads took {elapsed:?}"
    );
    let one = streamed_eval(1)?;
    ensure!(one == four, "results differ between 1 and 4 threads");
    let json = |r: &MetricsRecord| serde_json::to_string(r).unwrap();
    ensure!(json(&one) == json(&four), "serialized results differ");
    Ok(format!(
        "1000 pairs of 512x512 in {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("identity suite", identity_suite),
        ("monotonicity suite", monotonicity_suite),
        ("oracle equivalences", oracle_suite),
        ("metric hand values", hand_values),
        ("end-to-end perfection", end_to_end),
        ("synthesis fidelity", synthesis_fidelity),
        ("format exactness", format_exactness),
        ("split integrity", split_integrity),
        ("throughput", throughput),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  criterion {}: {name} ({detail})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {}: {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
