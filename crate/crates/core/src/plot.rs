//! Self-contained SVG line charts of result rows: one series per regime,
//! x = swept parameter, error bars at two standard errors.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{read_csv, write_atomic, ResultRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    Sequential,
    Simultaneous,
    BanditFailure,
    Regret,
    Misclassification,
}

impl FigureKind {
    pub const ALL: [FigureKind; 5] = [
        FigureKind::Sequential,
        FigureKind::Simultaneous,
        FigureKind::BanditFailure,
        FigureKind::Regret,
        FigureKind::Misclassification,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigureKind::Sequential => "sequential",
            FigureKind::Simultaneous => "simultaneous",
            FigureKind::BanditFailure => "bandit-failure",
            FigureKind::Regret => "regret",
            FigureKind::Misclassification => "misclassification",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    /// `(kind, metric, title)` of the rows the figure draws.
    fn source(self) -> (&'static str, &'static str, &'static str) {
        match self {
            FigureKind::Sequential => ("hiring-seq", "normalized_performance", "Sequential hiring"),
            FigureKind::Simultaneous => ("hiring-sim", "normalized_performance", "Simultaneous hiring (deferred acceptance)"),
            FigureKind::BanditFailure => ("bandit2", "failure_rate", "Failure to identify the best arm"),
            FigureKind::Regret => ("hiring-bandit", "total_bayesian_regret", "Total Bayesian regret"),
            FigureKind::Misclassification => ("hiring-bandit", "misclassified_arms", "Arms misclassified by an impartial observer"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(x, y, stderr)` sorted by x.
    pub points: Vec<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

/// Groups the rows matching `figure` into series, in order of first appearance.
pub fn chart_from_rows(rows: &[ResultRow], figure: FigureKind, source: &Path) -> Result<Chart> {
    let (kind, metric, title) = figure.source();
    let mut series: Vec<Series> = Vec::new();
    let mut x_label = None;
    for (i, row) in rows.iter().enumerate() {
        if row.kind != kind || row.metric != metric {
            continue;
        }
        let x: f64 = row.param_value.parse().map_err(|_| Error::Parse {
            path: source.to_path_buf(),
            line: i as u64 + 2,
            reason: format!("param_value `{}` is not numeric", row.param_value),
        })?;
        x_label.get_or_insert_with(|| row.param_name.clone());
        let point = (x, row.value, row.stderr);
        match series.iter_mut().find(|s| s.label == row.regime) {
            Some(s) => s.points.push(point),
            None => series.push(Series {
                label: row.regime.clone(),
                points: vec![point],
            }),
        }
    }
    if series.is_empty() {
        return Err(Error::Parse {
            path: source.to_path_buf(),
            line: rows.len() as u64 + 1,
            reason: format!("no `{kind}` rows with metric `{metric}` to plot"),
        });
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(Chart {
        title: title.into(),
        x_label: x_label.unwrap_or_default(),
        y_label: metric.replace('_', " "),
        series,
    })
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::EPSILON);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = start;
    while t <= hi + step * 1e-9 {
        ticks.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    ticks
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(chart: &Chart) -> String {
    let pts = chart.series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y, se) in pts {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y - 2.0 * se);
        y_hi = y_hi.max(y + 2.0 * se);
    }
    if x_hi <= x_lo {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    if y_hi <= y_lo {
        y_lo -= 0.5;
        y_hi += 0.5;
    }
    let pad = (y_hi - y_lo) * 0.05;
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| TOP + (1.0 - (y - y_lo) / (y_hi - y_lo)) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="28" text-anchor="middle" font-size="16">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(&chart.title)
    );
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for t in nice_ticks(x_lo, x_hi, 8) {
        let x = sx(t);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{b2}" stroke="black"/><text x="{x:.2}" y="{ty}" text-anchor="middle">{t}</text>"#,
            b = TOP + plot_h,
            b2 = TOP + plot_h + 5.0,
            ty = TOP + plot_h + 18.0
        );
    }
    for t in nice_ticks(y_lo, y_hi, 6) {
        let y = sy(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{l2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><line x1="{LEFT}" y1="{y:.2}" x2="{r}" y2="{y:.2}" stroke="#ddd"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{t}</text>"##,
            l2 = LEFT - 5.0,
            r = LEFT + plot_w,
            tx = LEFT - 8.0,
            ty = y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0,
        escape(&chart.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{cy}" text-anchor="middle" transform="rotate(-90 20 {cy})">{}</text>"#,
        escape(&chart.y_label),
        cy = TOP + plot_h / 2.0
    );

    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = s.points.iter().map(|&(x, y, _)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for &(x, y, se) in &s.points {
            let (px, lo, hi) = (sx(x), sy(y - 2.0 * se), sy(y + 2.0 * se));
            let _ = writeln!(
                svg,
                r#"<line x1="{px:.2}" y1="{lo:.2}" x2="{px:.2}" y2="{hi:.2}" stroke="{color}"/><line x1="{a:.2}" y1="{lo:.2}" x2="{b:.2}" y2="{lo:.2}" stroke="{color}"/><line x1="{a:.2}" y1="{hi:.2}" x2="{b:.2}" y2="{hi:.2}" stroke="{color}"/><circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{color}"/>"#,
                a = px - 4.0,
                b = px + 4.0,
                py = sy(y)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Reads `csv_path`, renders `figure` and writes the SVG atomically to `out`.
pub fn plot(csv_path: &Path, figure: FigureKind, out: &Path) -> Result<()> {
    let rows = read_csv(csv_path)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            path: csv_path.to_path_buf(),
            line: 2,
            reason: "no data rows".into(),
        });
    }
    let chart = chart_from_rows(&rows, figure, csv_path)?;
    write_atomic(out, render_svg(&chart).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(kind: &str, regime: &str, x: &str, metric: &str, v: f64) -> ResultRow {
        ResultRow {
            kind: kind.into(),
            regime: regime.into(),
            param_name: "firms".into(),
            param_value: x.into(),
            metric: metric.into(),
            value: v,
            stderr: 0.01,
            n_runs: 10,
            seed: 0,
            exact: String::new(),
        }
    }

    #[test]
    fn hiring_rows_make_three_series() {
        let mut rows = Vec::new();
        for x in ["2", "8", "4"] {
            for r in ["mono", "poly", "ensemble"] {
                rows.push(row("hiring-seq", r, x, "normalized_performance", 0.5));
            }
        }
        let chart = chart_from_rows(&rows, FigureKind::Sequential, Path::new("x")).unwrap();
        let labels: Vec<&str> = chart.series.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["mono", "poly", "ensemble"]);
        assert_eq!(chart.series[0].points.iter().map(|p| p.0).collect::<Vec<_>>(), [2.0, 4.0, 8.0]);
        assert_eq!(chart.x_label, "firms");
        let svg = render_svg(&chart);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 3);
    }

    #[test]
    fn bandit_rows_make_one_series_per_k() {
        let rows: Vec<ResultRow> = ["k=1", "k=2", "k=4"]
            .iter()
            .flat_map(|k| ["1", "5"].map(|n0| row("bandit2", k, n0, "failure_rate", 0.1)))
            .collect();
        let chart = chart_from_rows(&rows, FigureKind::BanditFailure, Path::new("x")).unwrap();
        assert_eq!(chart.series.len(), 3);
    }

    #[test]
    fn missing_rows_are_an_error() {
        let rows = vec![row("hiring-seq", "mono", "2", "normalized_performance", 0.5)];
        assert!(chart_from_rows(&rows, FigureKind::Regret, Path::new("x")).is_err());
        let bad = vec![row("hiring-seq", "mono", "two", "normalized_performance", 0.5)];
        assert!(matches!(
            chart_from_rows(&bad, FigureKind::Sequential, Path::new("x")),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_body_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("empty.csv");
        std::fs::write(&csv, crate::experiment::CSV_HEADER.join(",") + "\n").unwrap();
        let out = dir.path().join("fig.svg");
        assert!(plot(&csv, FigureKind::Sequential, &out).is_err());
        assert!(!out.exists());
    }

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(0.0, 1.0, 5);
        assert_eq!(t.first(), Some(&0.0));
        assert!(*t.last().unwrap() >= 0.99);
    }
}
