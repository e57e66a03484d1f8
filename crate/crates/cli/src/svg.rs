//! Minimal SVG renderings of DD-plots and quantile fans.

use std::fmt::Write;

use fdspatial::depth::{DDPlotData, Source};
use fdspatial::FunctionalSample;

const W: f64 = 480.0;
const H: f64 = 480.0;
const M: f64 = 48.0;

fn header(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r#"<rect x="{M}" y="{M}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    );
}

/// Maps `[lo, hi]` onto the plot area along one axis.
fn scale(v: f64, lo: f64, hi: f64, vertical: bool) -> f64 {
    let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
    if vertical {
        H - M - t * (H - 2.0 * M)
    } else {
        M + t * (W - 2.0 * M)
    }
}

pub fn ddplot(data: &DDPlotData) -> String {
    let mut s = String::new();
    header(&mut s, "DD-plot");
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#,
        scale(0.0, 0.0, 1.0, false),
        scale(0.0, 0.0, 1.0, true),
        scale(1.0, 0.0, 1.0, false),
        scale(1.0, 0.0, 1.0, true)
    );
    for p in &data.points {
        let x = scale(p.depth_in_sample1, 0.0, 1.0, false);
        let y = scale(p.depth_in_sample2, 0.0, 1.0, true);
        match p.source {
            Source::Sample1 => {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="none" stroke="steelblue"/>"#);
            }
            Source::Sample2 => {
                let _ = writeln!(
                    s,
                    r#"<path d="M{:.2} {:.2}l6 6M{:.2} {:.2}l6 -6" stroke="firebrick"/>"#,
                    x - 3.0,
                    y - 3.0,
                    x - 3.0,
                    y + 3.0
                );
            }
        }
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">depth in A</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">depth in B</text>"#,
        H / 2.0,
        H / 2.0
    );
    let _ = writeln!(s, r#"<circle cx="{}" cy="36" r="3" fill="none" stroke="steelblue"/><text x="{}" y="40">A</text>"#, W - 90.0, W - 82.0);
    let _ = writeln!(s, r#"<path d="M{} 33l6 6M{} 39l6 -6" stroke="firebrick"/><text x="{}" y="40">B</text>"#, W - 53.0, W - 53.0, W - 42.0);
    s.push_str("</svg>\n");
    s
}

/// Quantile curves; the first one (the median) is drawn heavier.
pub fn fan(curves: &FunctionalSample, labels: &[String]) -> String {
    let pts = curves.grid().points();
    let (x0, x1) = (pts[0], pts[pts.len() - 1]);
    let flat = curves.as_flat();
    let lo = flat.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = flat.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = String::new();
    header(&mut s, "Spatial quantiles");
    for (i, row) in curves.rows().enumerate() {
        let median = labels.get(i).is_some_and(|l| l == "median");
        let mut d = String::new();
        for (j, (&t, &v)) in pts.iter().zip(row).enumerate() {
            let _ = write!(d, "{}{:.2} {:.2}", if j == 0 { "M" } else { "L" }, scale(t, x0, x1, false), scale(v, lo, hi, true));
        }
        let (stroke, width) = if median { ("black", 2.5) } else { ("steelblue", 1.0) };
        let label = labels.get(i).map(String::as_str).unwrap_or("");
        let _ = writeln!(s, r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{width}"><title>{label}</title></path>"#);
    }
    let _ = writeln!(s, r#"<text x="{M}" y="{}">{x0}</text><text x="{}" y="{}" text-anchor="end">{x1}</text>"#, H - M + 16.0, W - M, H - M + 16.0);
    s.push_str("</svg>\n");
    s
}
