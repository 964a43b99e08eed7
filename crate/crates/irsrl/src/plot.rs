//! Learning curves as standalone SVG: per curve, the mean across seeds
//! with a min–max band. Pure function of the input rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::metrics::{read_metrics, MetricsRow};
use crate::HarnessError;

/// Per-episode statistics across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub episode: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

/// Aggregates `mean_snr_db` by episode; non-finite values are skipped.
pub fn aggregate(label: &str, rows: &[MetricsRow]) -> Curve {
    let mut by_ep: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.mean_snr_db.is_finite()) {
        by_ep.entry(r.episode).or_default().push(r.mean_snr_db);
    }
    let points = by_ep
        .into_iter()
        .map(|(episode, v)| CurvePoint {
            episode,
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
            max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
        .collect();
    Curve {
        label: label.to_string(),
        points,
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 52.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

pub fn render_svg(title: &str, curves: &[Curve]) -> Result<String, HarnessError> {
    render_svg_with_x(title, "episode", curves)
}

/// As [`render_svg`], with the `episode` field plotted under `x_label`.
pub fn render_svg_with_x(title: &str, x_label: &str, curves: &[Curve]) -> Result<String, HarnessError> {
    let pts = || curves.iter().flat_map(|c| &c.points);
    if pts().next().is_none() {
        return Err(HarnessError::Metrics("nothing to plot".into()));
    }
    let (x0, x1) = pts().fold((usize::MAX, 0), |(a, b), p| (a.min(p.episode), b.max(p.episode)));
    let (x0, x1) = (x0 as f64, (x1 as f64).max(x0 as f64 + 1.0));
    let (y0, y1) = nice_range(
        pts().map(|p| p.min).fold(f64::INFINITY, f64::min),
        pts().map(|p| p.max).fold(f64::NEG_INFINITY, f64::max),
    );
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + pw / 2.0,
        escape(title)
    );
    // Axes, ticks and grid.
    for i in 0..=5 {
        let y = y0 + (y1 - y0) * i as f64 / 5.0;
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{y:.1}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            py + 4.0
        );
        let x = x0 + (x1 - x0) * i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{x:.0}</text>"#,
            sx(x),
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(16 {:.2}) rotate(-90)" text-anchor="middle">mean SNR (dB)</text>"#,
        TOP + ph / 2.0
    );

    for (i, c) in curves.iter().enumerate() {
        if c.points.is_empty() {
            continue;
        }
        let color = PALETTE[i % PALETTE.len()];
        let upper = c.points.iter().map(|p| format!("{:.2},{:.2}", sx(p.episode as f64), sy(p.max)));
        let lower = c.points.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.episode as f64), sy(p.min)));
        let band: Vec<String> = upper.chain(lower).collect();
        let _ = writeln!(
            s,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = c
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.episode as f64), sy(p.mean)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="mean" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = TOP + 12.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&c.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Curve label for a metrics file: its parent directory name, else the
/// file stem.
pub fn label_for(path: &Path) -> String {
    path.parent()
        .and_then(|p| p.file_name())
        .or_else(|| path.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

pub fn plot_curves(paths: &[&Path], out: &Path) -> Result<(), HarnessError> {
    if paths.is_empty() {
        return Err(HarnessError::Metrics("no metrics files given".into()));
    }
    let curves = paths
        .iter()
        .map(|p| Ok(aggregate(&label_for(p), &read_metrics(p)?)))
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let svg = render_svg("mean SNR per episode (min–max over seeds)", &curves)?;
    crate::checkpoint::write_atomic(out, svg.as_bytes())
}
