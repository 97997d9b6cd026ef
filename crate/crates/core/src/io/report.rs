//! Human-readable reports. Values are ratios in [0, 1] everywhere except
//! here, where they are printed ×100 with two decimals.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::experiment::{aggregate, MetricSummary, Summary, SweepResult};
use crate::types::{MetricName, MetricsRecord};

/// Placeholder for undefined cells.
pub const UNDEFINED: &str = "—";

pub fn percent(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

pub fn percent_opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), percent)
}

/// `mean ± std` in percent, e.g. `25.44 ± 1.87`.
pub fn summary_cell(s: Option<&MetricSummary>) -> String {
    match s {
        None => UNDEFINED.to_string(),
        Some(MetricSummary {
            mean,
            std: Some(std),
            ..
        }) => format!("{} ± {}", percent(*mean), percent(*std)),
        Some(MetricSummary {
            mean, std: None, ..
        }) => format!("{} ± {UNDEFINED}", percent(*mean)),
    }
}

fn to_csv(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    // Writing to memory cannot fail.
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(r).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn metric_header(first: &str) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain(MetricName::ALL.iter().map(|m| m.label().to_string()))
        .collect()
}

/// One row per record: `tau,RQ,SQ,PQ,AP,Dice`.
pub fn records_csv(records: &[MetricsRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            std::iter::once(format!("{:.2}", r.tau))
                .chain(MetricName::ALL.iter().map(|&m| percent_opt(r.metric(m))))
                .collect()
        })
        .collect();
    Ok(to_csv(&metric_header("tau"), &rows))
}

/// Per-class counts and metrics of one record.
pub fn classes_csv(record: &MetricsRecord) -> String {
    let header: Vec<String> = [
        "category_id",
        "TP",
        "FP",
        "FN",
        "RQ",
        "SQ",
        "PQ",
        "AP",
        "Dice",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = record
        .per_class
        .values()
        .map(|c| {
            vec![
                c.category_id.to_string(),
                c.tp.to_string(),
                c.fp.to_string(),
                c.fn_.to_string(),
                percent(c.rq),
                percent_opt(c.sq),
                percent(c.pq),
                percent_opt(c.ap),
                percent_opt(c.dice),
            ]
        })
        .collect();
    to_csv(&header, &rows)
}

/// One row per named summary, cells as `mean ± std`.
pub fn summaries_csv(rows: &[(String, Summary)]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, s)| {
            std::iter::once(name.clone())
                .chain(MetricName::ALL.iter().map(|&m| summary_cell(s.get(m))))
                .collect()
        })
        .collect();
    Ok(to_csv(&metric_header("method"), &body))
}

/// Aggregates fold records and renders them as a one-row summary table.
pub fn fold_summary_csv(name: &str, records: &[MetricsRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (summary, _) = aggregate(records)?;
    summaries_csv(&[(name.to_string(), summary)])
}

/// Markdown table comparing methods; the best mean of each column is bold.
pub fn comparison_markdown(rows: &[(String, Summary)]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let best: Vec<Option<f64>> = MetricName::ALL
        .iter()
        .map(|&m| {
            rows.iter()
                .filter_map(|(_, s)| s.get(m).map(|x| x.mean))
                .fold(None, |acc: Option<f64>, v| {
                    Some(acc.map_or(v, |a| a.max(v)))
                })
        })
        .collect();
    let mut out = String::new();
    let labels: Vec<&str> = MetricName::ALL.iter().map(|m| m.label()).collect();
    writeln!(out, "| Method | {} |", labels.join(" | ")).unwrap();
    writeln!(out, "|---{}|", "|---:".repeat(labels.len())).unwrap();
    for (name, s) in rows {
        let cells: Vec<String> = MetricName::ALL
            .iter()
            .zip(&best)
            .map(|(&m, b)| {
                let cell = summary_cell(s.get(m));
                match (s.get(m), b) {
                    (Some(x), Some(b)) if x.mean == *b => format!("**{cell}**"),
                    _ => cell,
                }
            })
            .collect();
        writeln!(out, "| {name} | {} |", cells.join(" | ")).unwrap();
    }
    Ok(out)
}

const SERIES: [(MetricName, &str); 3] = [
    (MetricName::Pq, "#1f77b4"),
    (MetricName::Rq, "#ff7f0e"),
    (MetricName::Sq, "#2ca02c"),
];

/// Line chart of PQ, RQ and SQ against the IoU threshold.
pub fn sweep_svg(sweep: &SweepResult) -> Result<String> {
    let rows = &sweep.rows;
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 110.0, 30.0, 50.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let n = rows.len();
    let x_of = |i: usize| {
        if n == 1 {
            left + plot_w / 2.0
        } else {
            left + plot_w * i as f64 / (n - 1) as f64
        }
    };
    let y_of = |v: f64| top + plot_h * (1.0 - v);

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();

    writeln!(s, r##"<g id="y-axis" stroke="#ccc">"##).unwrap();
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let y = y_of(v);
        writeln!(
            s,
            r#"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}"/><text x="{:.2}" y="{:.2}" text-anchor="end" stroke="none" fill="black">{:.0}</text>"#,
            left + plot_w,
            left - 6.0,
            y + 4.0,
            v * 100.0
        )
        .unwrap();
    }
    writeln!(s, "</g>").unwrap();

    writeln!(s, r#"<g id="x-axis">"#).unwrap();
    writeln!(
        s,
        r##"<line x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000"/>"##,
        top + plot_h,
        left + plot_w,
        top + plot_h
    )
    .unwrap();
    for (i, r) in rows.iter().enumerate() {
        let x = x_of(i);
        writeln!(
            s,
            r##"<g class="tick"><line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{:.2}</text></g>"##,
            top + plot_h,
            top + plot_h + 4.0,
            top + plot_h + 16.0,
            r.tau
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">IoU threshold</text>"#,
        left + plot_w / 2.0,
        h - 12.0
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">Score (%)</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    )
    .unwrap();
    writeln!(s, "</g>").unwrap();

    for (k, (metric, color)) in SERIES.iter().enumerate() {
        let label = metric.label();
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.metric(*metric).map(|v| (x_of(i), y_of(v))))
            .collect();
        writeln!(
            s,
            r#"<g class="series" id="series-{label}" stroke="{color}" fill="{color}">"#
        )
        .unwrap();
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke-width="2" points="{}"/>"#,
            path.join(" ")
        )
        .unwrap();
        for (x, y) in &pts {
            writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3"/>"#).unwrap();
        }
        let ly = top + 10.0 + 18.0 * k as f64;
        let lx = left + plot_w + 15.0;
        writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke-width="2"/><text x="{:.2}" y="{:.2}" stroke="none" fill="black">{label}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        )
        .unwrap();
        writeln!(s, "</g>").unwrap();
    }

    if let Some(i) = rows.iter().position(|r| r.tau == sweep.optimal_tau) {
        writeln!(
            s,
            r##"<line id="optimal-tau" x1="{:.2}" y1="{top}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
            x_of(i),
            x_of(i),
            top + plot_h
        )
        .unwrap();
    }
    writeln!(s, "</svg>").unwrap();
    Ok(s)
}
