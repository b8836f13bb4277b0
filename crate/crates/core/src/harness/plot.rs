//! Minimal SVG line charts: one metric against degree, one series per model.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::models::MetricsRecord;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub fn metric_value(r: &MetricsRecord, metric: &str) -> Result<Option<f64>> {
    Ok(match metric {
        "mse" => r.mse,
        "nll" => r.nll,
        "accuracy" => r.accuracy,
        "risk" => r.risk,
        "seconds" => r.seconds,
        other => return Err(Error::Config(format!("unknown metric `{other}`"))),
    })
}

pub fn svg_line_chart(records: &[MetricsRecord], metric: &str) -> Result<String> {
    let mut series: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        if let Some(v) = metric_value(r, metric)? {
            series.entry(&r.model).or_default().push((r.degree as f64, v));
        }
    }
    let pts: Vec<(f64, f64)> = series.values().flatten().copied().collect();
    if pts.is_empty() {
        return Err(Error::EmptyInput("no values for the requested metric"));
    }
    let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (y0, y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let (xs, ys) = ((x1 - x0).max(1.0), (y1 - y0).max(1e-12));
    let px = |x: f64| MARGIN + (x - x0) / xs * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / ys * (H - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    )
    .unwrap();
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">degree</text>"#, W / 2.0, H - 16.0).unwrap();
    writeln!(s, r#"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{metric}</text>"#, H / 2.0, H / 2.0).unwrap();
    for d in (x0 as usize)..=(x1 as usize) {
        writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{d}</text>"#, px(d as f64), H - MARGIN + 16.0).unwrap();
    }
    for y in [y0, y1] {
        writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{y:.3}</text>"#, MARGIN - 4.0, py(y) + 4.0).unwrap();
    }
    for (i, (name, mut pts)) in series.into_iter().enumerate() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let colour = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
        writeln!(s, r#"<polyline points="{}" stroke="{colour}" stroke-width="2" fill="none"/>"#, path.join(" ")).unwrap();
        let ly = MARGIN + 16.0 * i as f64;
        writeln!(s, r#"<text x="{}" y="{ly}" fill="{colour}">{name}</text>"#, W - MARGIN + 4.0 - 60.0).unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}
