//! Standalone SVG charts: line plots and a heat strip.

use std::fmt::Write as _;

use crate::boundstate::BoundarySample;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: [f64; 4] = [50.0, 20.0, 50.0, 70.0]; // top, right, bottom, left
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<[f64; 2]>,
}

struct Axis {
    lo: f64,
    hi: f64,
    ticks: Vec<f64>,
}

impl Axis {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo <= 1e-12 * hi.abs().max(1.0) {
            let pad = 0.5 * hi.abs().max(1.0);
            (lo, hi) = (lo - pad, hi + pad);
        }
        let step = nice_step((hi - lo) / 5.0);
        let lo = (lo / step).floor() * step;
        let hi = (hi / step).ceil() * step;
        let count = ((hi - lo) / step).round() as usize;
        let ticks = (0..=count).map(|i| lo + step * i as f64).collect();
        Self { lo, hi, ticks }
    }

    fn map(&self, v: f64, a: f64, b: f64) -> f64 {
        a + (v - self.lo) / (self.hi - self.lo) * (b - a)
    }
}

fn nice_step(raw: f64) -> f64 {
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f <= 1.0 {
        1.0
    } else if f <= 2.0 {
        2.0
    } else if f <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn label(v: f64) -> String {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        "0".into()
    } else if r.abs() >= 1e4 || r.abs() < 1e-3 {
        format!("{r:.2e}")
    } else {
        let s = format!("{r:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, xa: &Axis, ya: &Axis) -> [f64; 4] {
    let [top, right, bottom, left] = MARGIN;
    let (x0, x1, y0, y1) = (left, WIDTH - right, HEIGHT - bottom, top);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(out, r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for &t in &xa.ticks {
        let x = xa.map(t, x0, x1);
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##, y0 + 5.0, y0 + 18.0, label(t));
    }
    for &t in &ya.ticks {
        let y = ya.map(t, y0, y1);
        let _ = writeln!(out, r##"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##, x0 - 5.0, x0 - 8.0, y + 4.0, label(t));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
    [x0, x1, y0, y1]
}

/// Line chart of one or more series on shared axes.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xa = Axis::new(series.iter().flat_map(|s| s.points.iter().map(|p| p[0])));
    let ya = Axis::new(series.iter().flat_map(|s| s.points.iter().map(|p| p[1])));
    let mut out = String::new();
    let [x0, x1, y0, y1] = frame(&mut out, title, x_label, y_label, &xa, &ya);
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p[0].is_finite() && p[1].is_finite())
            .map(|p| format!("{:.2},{:.2}", xa.map(p[0], x0, x1), ya.map(p[1], y0, y1)))
            .collect();
        let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#, pts.join(" "));
        let ly = y1 + 16.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            x1 - 150.0,
            x1 - 130.0,
            x1 - 125.0,
            ly + 4.0,
            escape(s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn heat_color(t: f64) -> String {
    // blue -> white -> red
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (40.0 + 215.0 * u, 90.0 + 165.0 * u, 200.0 + 55.0 * u)
    } else {
        let u = (t - 0.5) / 0.5;
        (255.0, 255.0 - 190.0 * u, 255.0 - 205.0 * u)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// Heat strip of `F` over the side `|y| = R` of the linking box: the polar
/// angle of `y` across, `h` upward. `threshold` is drawn as a marked contour
/// level in the legend.
pub fn boundary_strip(title: &str, samples: &[BoundarySample], threshold: Option<f64>) -> String {
    let angle = |s: &BoundarySample| s.y[1].atan2(s.y[0]);
    let mut angles: Vec<f64> = samples.iter().map(angle).collect();
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    let mut hs: Vec<f64> = samples.iter().map(|s| s.h).collect();
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    let xa = Axis::new(angles.iter().copied());
    let ya = Axis::new(hs.iter().copied());
    let (vmin, vmax) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.value), b.max(s.value)));
    let mut out = String::new();
    let [x0, x1, y0, y1] = frame(&mut out, title, "angle of y on |y| = R", "h", &xa, &ya);
    let cell = |v: f64, grid: &[f64], axis: &Axis, a: f64, b: f64| -> (f64, f64) {
        let i = grid.partition_point(|&g| g < v);
        let lo = if i == 0 { v } else { 0.5 * (grid[i - 1] + v) };
        let hi = if i + 1 >= grid.len() { v } else { 0.5 * (grid[i + 1] + v) };
        let (p, q) = (axis.map(lo, a, b), axis.map(hi, a, b));
        (p.min(q), (q - p).abs().max(1.0))
    };
    for s in samples {
        let (x, w) = cell(angle(s), &angles, &xa, x0, x1);
        let (y, h) = cell(s.h, &hs, &ya, y0, y1);
        let t = if vmax > vmin { (s.value - vmin) / (vmax - vmin) } else { 0.5 };
        let _ = writeln!(out, r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{}"/>"#, heat_color(t));
    }
    let mut legend = format!("min {} / max {}", label(vmin), label(vmax));
    if let Some(th) = threshold {
        let _ = write!(legend, " / m_c + eps {}", label(th));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x1, y1 - 6.0, escape(&legend));
    out.push_str("</svg>\n");
    out
}
