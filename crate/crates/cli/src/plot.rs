//! Minimal static SVG charts.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str, xlabel: &str, ylabel: &str, frame: &Frame) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let (l, r, b, t) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(svg, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let fx = frame.x0 + (frame.x1 - frame.x0) * k as f64 / 4.0;
        let fy = frame.y0 + (frame.y1 - frame.y0) * k as f64 / 4.0;
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, frame.px(fx), b + 16.0, tick(fx));
        let _ = writeln!(svg, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, l - 6.0, frame.py(fy) + 4.0, tick(fy));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 14.0, escape(xlabel));
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(ylabel)
    );
    svg
}

fn tick(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-2 || x.abs() >= 1e4) {
        format!("{x:.1e}")
    } else {
        format!("{}", (x * 100.0).round() / 100.0)
    }
}

fn legend(svg: &mut String, names: &[&str]) {
    for (k, name) in names.iter().enumerate() {
        let y = MARGIN + 14.0 * k as f64;
        let x = WIDTH - MARGIN - 150.0;
        let _ = writeln!(svg, r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/>"#, x + 18.0, COLORS[k % COLORS.len()]);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, x + 24.0, y + 4.0, escape(name));
    }
}

fn polyline(svg: &mut String, frame: &Frame, points: &[(f64, f64)], color: &str) {
    let coords: Vec<String> = points
        .iter()
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
        .collect();
    let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, coords.join(" "));
}

fn padded_max(values: impl Iterator<Item = f64>) -> f64 {
    let m = values.filter(|v| v.is_finite()).fold(0.0, f64::max);
    if m > 0.0 {
        1.1 * m
    } else {
        1.0
    }
}

/// Bars for `densities` over `edges` plus one line per reference density
/// sampled at the bin centers.
pub fn histogram(title: &str, xlabel: &str, edges: &[f64], densities: &[f64], references: &[(&str, Vec<f64>)]) -> String {
    let frame = Frame {
        x0: edges[0],
        x1: edges[edges.len() - 1],
        y0: 0.0,
        y1: padded_max(densities.iter().copied().chain(references.iter().flat_map(|r| r.1.iter().copied()))),
    };
    let mut svg = open(title, xlabel, "density", &frame);
    for (k, &d) in densities.iter().enumerate() {
        let (x, w) = (frame.px(edges[k]), frame.px(edges[k + 1]) - frame.px(edges[k]));
        let y = frame.py(d);
        let _ = writeln!(
            svg,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{:.2}" fill="#bbbbbb" stroke="white" stroke-width="0.5"/>"##,
            frame.py(0.0) - y
        );
    }
    let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    for (k, (_, values)) in references.iter().enumerate() {
        let points: Vec<(f64, f64)> = centers.iter().copied().zip(values.iter().copied()).collect();
        polyline(&mut svg, &frame, &points, COLORS[(k + 1) % COLORS.len()]);
    }
    let mut names = vec!["data"];
    names.extend(references.iter().map(|r| r.0));
    legend(&mut svg, &names);
    svg.push_str("</svg>\n");
    svg
}

/// One polyline per series.
pub fn lines(title: &str, xlabel: &str, ylabel: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    let xs = || series.iter().flat_map(|s| s.1.iter().map(|p| p.0));
    let x0 = xs().fold(f64::INFINITY, f64::min);
    let x1 = xs().fold(f64::NEG_INFINITY, f64::max);
    let frame = Frame {
        x0: if x0.is_finite() { x0 } else { 0.0 },
        x1: if x1 > x0 { x1 } else { x0 + 1.0 },
        y0: 0.0,
        y1: padded_max(series.iter().flat_map(|s| s.1.iter().map(|p| p.1))),
    };
    let mut svg = open(title, xlabel, ylabel, &frame);
    for (k, (_, points)) in series.iter().enumerate() {
        polyline(&mut svg, &frame, points, COLORS[k % COLORS.len()]);
    }
    legend(&mut svg, &series.iter().map(|s| s.0).collect::<Vec<_>>());
    svg.push_str("</svg>\n");
    svg
}
