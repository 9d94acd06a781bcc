//! Minimal deterministic SVG plots. Coordinates are printed with two
//! decimals so output is stable text.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        esc(title)
    );
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Square heat map of values in `[0, 1]`, e.g. an absolute correlation
/// matrix.
pub fn heat_map(matrix: &[Vec<f64>], labels: &[String], title: &str) -> String {
    let n = matrix.len().max(1) as f64;
    let cell = ((W - 2.0 * MARGIN) / n).min(40.0);
    let left = MARGIN + 80.0;
    let top = MARGIN;
    let width = left + cell * n + MARGIN;
    let height = top + cell * n + MARGIN + 80.0;
    let mut out = String::new();
    header(&mut out, width, height, title);
    for (i, row) in matrix.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let v = v.clamp(0.0, 1.0);
            let shade = (255.0 * (1.0 - v)).round() as u8;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb(255,{shade},{shade})"><title>{:.4}</title></rect>"#,
                left + j as f64 * cell,
                top + i as f64 * cell,
                v
            );
        }
    }
    for (i, l) in labels.iter().enumerate() {
        let c = i as f64 * cell + cell / 2.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            left - 4.0,
            top + c,
            esc(l)
        );
        let (x, y) = (left + c, top + cell * n + 6.0);
        let _ = writeln!(
            out,
            r#"<text x="{x:.2}" y="{y:.2}" transform="rotate(60 {x:.2} {y:.2})">{}</text>"#,
            esc(l)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Line chart with optional vertical marker at `marker_x`.
pub fn line_chart(series: &[Series], title: &str, x_label: &str, y_label: &str, marker_x: Option<f64>) -> String {
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut out = String::new();
    header(&mut out, W, H, title);
    let _ = writeln!(
        out,
        r#"<path d="M{m:.2},{t:.2} V{b:.2} H{r:.2}" fill="none" stroke="black"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for (v, y) in [(y0, H - MARGIN), (y1, MARGIN)] {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}" text-anchor="end">{v:.3}</text>"#, MARGIN - 4.0);
    }
    for (v, x) in [(x0, MARGIN), (x1, W - MARGIN)] {
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{v:.3}</text>"#, H - MARGIN + 14.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 15.0,
        esc(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(y_label)
    );
    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut d = String::new();
        for (i, (x, y)) in s.points.iter().filter(|p| p.1.is_finite()).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, sx(*x), sy(*y));
        }
        let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{colour}">{}</text>"#,
            W - MARGIN + 4.0,
            MARGIN + 14.0 * k as f64,
            esc(&s.name)
        );
    }
    if let Some(m) = marker_x {
        let x = sx(m);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 3"/>"#,
            MARGIN,
            H - MARGIN
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Horizontal bars, drawn in the given order from the top.
pub fn bar_chart(items: &[(String, f64)], title: &str, x_label: &str) -> String {
    let bar = 18.0;
    let left = MARGIN + 120.0;
    let height = MARGIN * 2.0 + bar * items.len().max(1) as f64 * 1.4;
    let (lo, hi) = bounds(items.iter().map(|i| i.1).chain([0.0]));
    let sx = |x: f64| left + (x - lo) / (hi - lo) * (W - left - MARGIN);
    let mut out = String::new();
    header(&mut out, W, height, title);
    let zero = sx(0.0);
    for (i, (name, v)) in items.iter().enumerate() {
        let y = MARGIN + i as f64 * bar * 1.4;
        let (a, b) = if *v >= 0.0 { (zero, sx(*v)) } else { (sx(*v), zero) };
        let _ = writeln!(
            out,
            r##"<rect x="{a:.2}" y="{y:.2}" width="{:.2}" height="{bar:.2}" fill="#1f77b4"><title>{v:.6}</title></rect>"##,
            (b - a).max(0.0)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" dominant-baseline="middle">{}</text>"#,
            left - 4.0,
            y + bar / 2.0,
            esc(name)
        );
    }
    let _ = writeln!(
        out,
        r#"<line x1="{zero:.2}" y1="{:.2}" x2="{zero:.2}" y2="{:.2}" stroke="black"/>"#,
        MARGIN - 4.0,
        height - MARGIN
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + W - MARGIN) / 2.0,
        height - 20.0,
        esc(x_label)
    );
    out.push_str("</svg>\n");
    out
}
