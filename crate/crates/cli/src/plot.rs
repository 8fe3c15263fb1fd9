//! Minimal SVG charts: line plots with optional shaded bands, and boxplots.

use std::fmt::Write;

use quadtune::metrics::BoxStats;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 44.0;

#[derive(Debug, Clone)]
pub struct Line {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
    pub width: f64,
    pub opacity: f64,
}

impl Line {
    pub fn new(label: impl Into<String>, color: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            color: color.to_string(),
            points,
            width: 1.5,
            opacity: 1.0,
        }
    }
}

/// Filled region between `lower` and `upper`, sampled at the same x values.
#[derive(Debug, Clone)]
pub struct Band {
    pub color: String,
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub lines: Vec<Line>,
    pub bands: Vec<Band>,
    /// Horizontal reference lines.
    pub references: Vec<f64>,
    pub legend: bool,
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    x: f64,
    y: f64,
    w: f64,
    h: f64,
}

#[derive(Debug, Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
}

impl Scale {
    fn covering(values: impl Iterator<Item = f64>) -> Self {
        let (lo, hi) = values
            .filter(|v| v.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            return Self { lo: 0.0, hi: 1.0 };
        }
        if hi - lo < 1e-12 {
            let pad = if lo.abs() > 1e-12 { lo.abs() * 0.1 } else { 1.0 };
            return Self {
                lo: lo - pad,
                hi: hi + pad,
            };
        }
        let pad = 0.05 * (hi - lo);
        Self {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn map(&self, v: f64, from: f64, to: f64) -> f64 {
        from + (v - self.lo) / (self.hi - self.lo) * (to - from)
    }
}

/// Tick positions at 1/2/5 multiples of a power of ten.
pub fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / target.max(1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .into_iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64 * 1.25)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" \
         font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn axes(svg: &mut String, f: Frame, xs: Scale, ys: Scale, title: &str, x_label: &str, y_label: &str) {
    let (px0, px1) = (f.x + MARGIN_LEFT, f.x + f.w - MARGIN_RIGHT);
    let (py0, py1) = (f.y + f.h - MARGIN_BOTTOM, f.y + MARGIN_TOP);
    let _ = writeln!(
        svg,
        "<rect x=\"{px0:.1}\" y=\"{py1:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"#333\"/>",
        px1 - px0,
        py0 - py1
    );
    let x_ticks = if xs.hi > xs.lo { nice_ticks(xs.lo, xs.hi, 6) } else { Vec::new() };
    for t in x_ticks {
        let x = xs.map(t, px0, px1);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.1}\" y1=\"{py0:.1}\" x2=\"{x:.1}\" y2=\"{py1:.1}\" stroke=\"#e5e5e5\"/>\
             <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            py0 + 14.0,
            fmt_tick(t)
        );
    }
    for t in nice_ticks(ys.lo, ys.hi, 5) {
        let y = ys.map(t, py0, py1);
        let _ = writeln!(
            svg,
            "<line x1=\"{px0:.1}\" y1=\"{y:.1}\" x2=\"{px1:.1}\" y2=\"{y:.1}\" stroke=\"#e5e5e5\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            px0 - 4.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"13\">{}</text>",
        (px0 + px1) / 2.0,
        f.y + 18.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        (px0 + px1) / 2.0,
        f.y + f.h - 8.0,
        escape(x_label)
    );
    let cy = (py0 + py1) / 2.0;
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{cy:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 {:.1} {cy:.1})\">{}</text>",
        f.x + 14.0,
        f.x + 14.0,
        escape(y_label)
    );
}

impl Chart {
    fn render(&self, svg: &mut String, f: Frame) {
        let xs = Scale::covering(
            self.lines
                .iter()
                .flat_map(|l| l.points.iter().map(|p| p.0))
                .chain(self.bands.iter().flat_map(|b| b.x.iter().copied())),
        );
        let ys = Scale::covering(
            self.lines
                .iter()
                .flat_map(|l| l.points.iter().map(|p| p.1))
                .chain(self.bands.iter().flat_map(|b| b.lower.iter().chain(&b.upper).copied()))
                .chain(self.references.iter().copied()),
        );
        axes(svg, f, xs, ys, &self.title, &self.x_label, &self.y_label);
        let (px0, px1) = (f.x + MARGIN_LEFT, f.x + f.w - MARGIN_RIGHT);
        let (py0, py1) = (f.y + f.h - MARGIN_BOTTOM, f.y + MARGIN_TOP);
        let pt = |x: f64, y: f64| format!("{:.2},{:.2}", xs.map(x, px0, px1), ys.map(y, py0, py1));

        for b in &self.bands {
            let mut pts: Vec<String> = b.x.iter().zip(&b.upper).map(|(x, y)| pt(*x, *y)).collect();
            pts.extend(b.x.iter().zip(&b.lower).rev().map(|(x, y)| pt(*x, *y)));
            let _ = writeln!(
                svg,
                "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"none\"/>",
                pts.join(" "),
                b.color
            );
        }
        for r in &self.references {
            let y = ys.map(*r, py0, py1);
            let _ = writeln!(
                svg,
                "<line x1=\"{px0:.1}\" y1=\"{y:.1}\" x2=\"{px1:.1}\" y2=\"{y:.1}\" stroke=\"#555\" stroke-dasharray=\"4 3\"/>"
            );
        }
        for l in &self.lines {
            let pts: Vec<String> = l
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| pt(*x, *y))
                .collect();
            if pts.is_empty() {
                continue;
            }
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" stroke-opacity=\"{}\"/>",
                pts.join(" "),
                l.color,
                l.width,
                l.opacity
            );
        }
        if self.legend {
            let mut seen = Vec::new();
            for l in &self.lines {
                if !l.label.is_empty() && !seen.iter().any(|(s, _): &(String, String)| *s == l.label) {
                    seen.push((l.label.clone(), l.color.clone()));
                }
            }
            for (i, (label, color)) in seen.iter().enumerate() {
                let y = py1 + 14.0 + 14.0 * i as f64;
                let _ = writeln!(
                    svg,
                    "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\
                     <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
                    px1 - 110.0,
                    y - 4.0,
                    px1 - 92.0,
                    y - 4.0,
                    px1 - 88.0,
                    y,
                    escape(label)
                );
            }
        }
    }

    pub fn to_svg(&self, width: f64, height: f64) -> String {
        grid(std::slice::from_ref(self), 1, width, height)
    }
}

/// Lays charts out row by row, `cols` per row.
pub fn grid(charts: &[Chart], cols: usize, cell_w: f64, cell_h: f64) -> String {
    let cols = cols.max(1);
    let rows = charts.len().div_ceil(cols).max(1);
    let mut svg = header(cell_w * cols as f64, cell_h * rows as f64);
    for (i, c) in charts.iter().enumerate() {
        let frame = Frame {
            x: (i % cols) as f64 * cell_w,
            y: (i / cols) as f64 * cell_h,
            w: cell_w,
            h: cell_h,
        };
        c.render(&mut svg, frame);
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Debug, Clone)]
pub struct BoxGroup {
    pub label: String,
    pub color: String,
    pub stats: BoxStats,
    pub whiskers: (f64, f64),
}

#[derive(Debug, Clone, Default)]
pub struct BoxChart {
    pub title: String,
    pub y_label: String,
    pub groups: Vec<BoxGroup>,
}

impl BoxChart {
    fn render(&self, svg: &mut String, f: Frame) {
        let ys = Scale::covering(
            self.groups
                .iter()
                .flat_map(|g| [g.stats.min, g.stats.max, g.whiskers.0, g.whiskers.1]),
        );
        let n = self.groups.len().max(1) as f64;
        let xs = Scale { lo: 0.0, hi: n };
        axes(svg, f, Scale { lo: 0.0, hi: 0.0 }, ys, &self.title, "", &self.y_label);
        let (px0, px1) = (f.x + MARGIN_LEFT, f.x + f.w - MARGIN_RIGHT);
        let (py0, py1) = (f.y + f.h - MARGIN_BOTTOM, f.y + MARGIN_TOP);
        let y = |v: f64| ys.map(v, py0, py1);
        let slot = (px1 - px0) / n;
        for (i, g) in self.groups.iter().enumerate() {
            let cx = xs.map(i as f64 + 0.5, px0, px1);
            let half = 0.25 * slot;
            let s = &g.stats;
            let (w0, w1) = g.whiskers;
            let _ = writeln!(
                svg,
                "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\
                 <line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>",
                y(w0),
                y(s.q1),
                y(s.q3),
                y(w1)
            );
            for w in [w0, w1] {
                let _ = writeln!(
                    svg,
                    "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>",
                    cx - half / 2.0,
                    y(w),
                    cx + half / 2.0,
                    y(w)
                );
            }
            let top = y(s.q3);
            let height = (y(s.q1) - top).max(1.0);
            let _ = writeln!(
                svg,
                "<rect x=\"{:.1}\" y=\"{top:.1}\" width=\"{:.1}\" height=\"{height:.1}\" fill=\"{}\" fill-opacity=\"0.45\" stroke=\"#333\"/>\
                 <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#000\" stroke-width=\"2\"/>",
                cx - half,
                2.0 * half,
                g.color,
                cx - half,
                y(s.median),
                cx + half,
                y(s.median)
            );
            for o in &s.outliers {
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{cx:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"none\" stroke=\"#333\"/>",
                    y(*o)
                );
            }
            let _ = writeln!(
                svg,
                "<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
                py0 + 14.0,
                escape(&g.label)
            );
        }
    }
}

/// Boxplot panels side by side.
pub fn box_panels(charts: &[BoxChart], cell_w: f64, cell_h: f64) -> String {
    let mut svg = header(cell_w * charts.len().max(1) as f64, cell_h);
    for (i, c) in charts.iter().enumerate() {
        c.render(
            &mut svg,
            Frame {
                x: i as f64 * cell_w,
                y: 0.0,
                w: cell_w,
                h: cell_h,
            },
        );
    }
    svg.push_str("</svg>\n");
    svg
}
