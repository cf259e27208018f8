//! Writing experiment reports as JSON, a CSV row table, or an SVG chart of
//! per-method means with their intervals.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::experiment::{Aggregate, ExperimentReport};
use crate::harness::io::{read_text, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Json,
    Csv,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "svg" => Ok(ReportFormat::Svg),
            other => Err(Error::invalid(format!("unknown format '{other}'"))),
        }
    }
}

pub fn report_json(report: &ExperimentReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}

/// One line per row, with a header; absent metrics are empty cells.
pub fn report_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &report.rows {
        w.serialize(row).map_err(|e| Error::invalid(format!("csv: {e}")))?;
    }
    if report.rows.is_empty() {
        w.write_record(["split", "problem", "method", "choice", "ari", "loss", "silhouette", "accuracy", "k_hat", "k_star"])
            .map_err(|e| Error::invalid(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(format!("csv: {e}")))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const PANEL_HEIGHT: f64 = 220.0;
const BAR_WIDTH: f64 = 36.0;
const BAR_GAP: f64 = 24.0;
const LEFT: f64 = 60.0;

/// One panel per metric: a bar per method at its mean, with a whisker over
/// the interval.
pub fn report_svg(report: &ExperimentReport) -> String {
    let mut metrics: Vec<&str> = Vec::new();
    for a in &report.aggregates {
        if !metrics.contains(&a.metric.as_str()) {
            metrics.push(&a.metric);
        }
    }
    let widest = metrics
        .iter()
        .map(|m| report.aggregates.iter().filter(|a| a.metric == *m).count())
        .max()
        .unwrap_or(0);
    let width = LEFT + widest as f64 * (BAR_WIDTH + BAR_GAP) + BAR_GAP;
    let height = (metrics.len().max(1) as f64) * (PANEL_HEIGHT + 40.0) + 40.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="10" y="20" font-size="14">{} ({} splits, seed {})</text>"#,
        escape(report.kind.name()),
        report.splits,
        report.seed
    );
    for (p, metric) in metrics.iter().enumerate() {
        let aggs: Vec<&Aggregate> = report.aggregates.iter().filter(|a| a.metric == *metric).collect();
        let top = 40.0 + p as f64 * (PANEL_HEIGHT + 40.0);
        let bottom = top + PANEL_HEIGHT - 30.0;
        let lo = aggs.iter().map(|a| a.ci_low).fold(0.0, f64::min);
        let hi = aggs.iter().map(|a| a.ci_high).fold(f64::MIN_POSITIVE, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let y = |v: f64| bottom - (v - lo) / span * (PANEL_HEIGHT - 50.0);
        let _ = writeln!(svg, r#"<text x="10" y="{:.1}">{}</text>"#, top + 12.0, escape(metric));
        let _ = writeln!(
            svg,
            r#"<line x1="{LEFT}" y1="{:.1}" x2="{width:.0}" y2="{:.1}" stroke="black"/>"#,
            y(0.0),
            y(0.0)
        );
        for (i, a) in aggs.iter().enumerate() {
            let x = LEFT + BAR_GAP / 2.0 + i as f64 * (BAR_WIDTH + BAR_GAP);
            let (y0, ym) = (y(0.0), y(a.mean));
            let _ = writeln!(
                svg,
                r##"<rect x="{x:.1}" y="{:.1}" width="{BAR_WIDTH}" height="{:.1}" fill="#7a9cc6"><title>{} {:.4} [{:.4}, {:.4}]</title></rect>"##,
                ym.min(y0),
                (y0 - ym).abs(),
                escape(&a.method),
                a.mean,
                a.ci_low,
                a.ci_high
            );
            let cx = x + BAR_WIDTH / 2.0;
            let _ = writeln!(
                svg,
                r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                y(a.ci_low),
                y(a.ci_high)
            );
            let _ = writeln!(
                svg,
                r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                bottom + 16.0,
                escape(&a.method)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn render_report(report: &ExperimentReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => report_json(report),
        ReportFormat::Csv => report_csv(report),
        ReportFormat::Svg => Ok(report_svg(report)),
    }
}

pub fn emit_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    write_text(path, &render_report(report, format)?)
}

pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{AlgorithmSpec, Family};
    use crate::harness::experiment::{run_experiment, AlgoSelectExperiment, ExperimentConfig, ExperimentKind};
    use crate::harness::synth::{generate_synthetic, SyntheticSpec};

    fn report() -> ExperimentReport {
        let repo = generate_synthetic(&SyntheticSpec {
            problems: 10,
            n_range: (30, 40),
            d_range: (2, 3),
            ..Default::default()
        })
        .unwrap();
        let cfg = ExperimentConfig {
            bootstrap_resamples: 100,
            algo_select: AlgoSelectExperiment {
                algorithms: vec![
                    AlgorithmSpec::new(Family::Kmeans, false, 2),
                    AlgorithmSpec::new(Family::Ward, true, 2),
                ],
                ..Default::default()
            },
            ..Default::default()
        };
        run_experiment(ExperimentKind::AlgoSelect, &cfg, &repo, 3, 1).unwrap()
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        emit_report(&r, ReportFormat::Json, &path).unwrap();
        assert_eq!(load_report(&path).unwrap(), r);
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let r = report();
        let text = report_csv(&r).unwrap();
        // 3 splits × 2 test problems × (selector + 2 algorithms), plus header.
        assert_eq!(r.rows.len(), 3 * 2 * 3);
        assert_eq!(text.lines().count(), r.rows.len() + 1);
        assert!(text.starts_with("split,problem,method,choice,ari,loss"));
    }

    #[test]
    fn svg_is_well_formed() {
        let svg = report_svg(&report());
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(doc.descendants().filter(|n| n.has_tag_name("rect")).count() >= 3);
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let err = emit_report(&report(), ReportFormat::Csv, &blocker.join("r.csv")).unwrap_err();
        assert!(err.is_io());
    }
}
