//! Static SVG 1.1 diagnostics.
//!
//! Output depends only on the inputs: coordinates are printed with two
//! decimals and elements are emitted in curve order.

use std::fmt::Write;

use fdout_core::sample::CurveSample;

use crate::error::{CliError, CliResult};
use crate::report::DetectionReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    Curves,
    Msplot,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 48.0;
const TICKS: usize = 5;
const MUTED: &str = "#9e9e9e";
const HIGHLIGHT: &str = "#d62728";

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        Self {
            x: padded_range(xs),
            y: padded_range(ys),
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn padded_range(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = xs
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * lo.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.04 * (hi - lo);
    (lo - pad, hi + pad)
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
}

fn axes(out: &mut String, frame: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let _ = writeln!(out, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    for k in 0..TICKS {
        let f = k as f64 / (TICKS - 1) as f64;
        let xv = frame.x.0 + f * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + f * (frame.y.1 - frame.y.0);
        let (px, py) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}"/>"#, y0 + 5.0);
        let _ = writeln!(out, r#"<line x1="{x0:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}"/>"#, x0 - 5.0);
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, r#"<g font-family="sans-serif" font-size="11" fill="black">"#);
    for k in 0..TICKS {
        let f = k as f64 / (TICKS - 1) as f64;
        let xv = frame.x.0 + f * (frame.x.1 - frame.x.0);
        let yv = frame.y.0 + f * (frame.y.1 - frame.y.0);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            frame.px(xv),
            y0 + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            frame.py(yv) + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="13">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 10.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" text-anchor="middle" font-size="13" transform="rotate(-90 14 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
    let _ = writeln!(out, "</g>");
}

fn flagged(report: &DetectionReport, n: usize) -> CliResult<Vec<bool>> {
    let mut mask = vec![false; n];
    let all = report.outliers.get("all").map(Vec::as_slice).unwrap_or(&[]);
    for &i in all {
        if i == 0 || i > n {
            return Err(CliError::InconsistentReport(format!(
                "outlier index {i} outside 1..={n}"
            )));
        }
        mask[i - 1] = true;
    }
    Ok(mask)
}

fn check_shape(report: &DetectionReport, sample: &CurveSample) -> CliResult<()> {
    if report.error.is_some() {
        return Err(CliError::InconsistentReport("report records a failed run".into()));
    }
    if report.n != sample.n() || report.p != sample.p() {
        return Err(CliError::InconsistentReport(format!(
            "report describes {}x{} curves, data has {}x{}",
            report.n,
            report.p,
            sample.n(),
            sample.p()
        )));
    }
    Ok(())
}

/// Renders `kind` for `report` over `sample` (the first component when the
/// data are multivariate).
pub fn emit_plot(report: &DetectionReport, sample: &CurveSample, kind: PlotKind) -> CliResult<String> {
    check_shape(report, sample)?;
    match kind {
        PlotKind::Curves => curves_svg(report, sample),
        PlotKind::Msplot => msplot_svg(report, sample.n()),
    }
}

fn curves_svg(report: &DetectionReport, sample: &CurveSample) -> CliResult<String> {
    let n = sample.n();
    let mask = flagged(report, n)?;
    let grid = sample.grid().points();
    let values = sample.values();
    let frame = Frame::new(grid.iter().copied(), values.iter().copied());
    let mut out = String::new();
    header(&mut out, &format!("{}: curves", report.method));
    axes(&mut out, &frame, "t", "value");
    // Inliers first so that outliers are drawn on top.
    for pass in [false, true] {
        let (stroke, width) = if pass { (HIGHLIGHT, 1.6) } else { (MUTED, 0.8) };
        for i in (0..n).filter(|&i| mask[i] == pass) {
            let mut pts = String::new();
            for (t, y) in grid.iter().zip(values.row(i)) {
                if !pts.is_empty() {
                    pts.push(' ');
                }
                let _ = write!(pts, "{:.2},{:.2}", frame.px(*t), frame.py(*y));
            }
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{stroke}" stroke-width="{width}" points="{pts}"><title>curve {}</title></polyline>"#,
                i + 1
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn msplot_svg(report: &DetectionReport, n: usize) -> CliResult<String> {
    let missing = |k: &str| CliError::InconsistentReport(format!("report has no {k:?} diagnostic"));
    let vo = report.diagnostics.get("vo").ok_or_else(|| missing("vo"))?.as_vector();
    let (mo, xlabel) = if report.d <= 1 {
        (report.diagnostics.get("mo").ok_or_else(|| missing("mo"))?.as_vector(), "MO")
    } else {
        (report.diagnostics.get("mo_norm").ok_or_else(|| missing("mo_norm"))?.as_vector(), "||MO||")
    };
    if mo.len() != n || vo.len() != n {
        return Err(CliError::InconsistentReport(format!(
            "diagnostics have {} and {} entries for {n} curves",
            mo.len(),
            vo.len()
        )));
    }
    let mask = flagged(report, n)?;
    let frame = Frame::new(mo.iter().copied(), vo.iter().copied());
    let mut out = String::new();
    header(&mut out, &format!("{}: VO against {xlabel}", report.method));
    axes(&mut out, &frame, xlabel, "VO");
    for pass in [false, true] {
        let fill = if pass { HIGHLIGHT } else { MUTED };
        for i in (0..n).filter(|&i| mask[i] == pass) {
            // Points at infinity cannot be placed.
            if !(mo[i].is_finite() && vo[i].is_finite()) {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{fill}"><title>curve {}</title></circle>"#,
                frame.px(mo[i]),
                frame.py(vo[i]),
                i + 1
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
