//! Minimal SVG output: scatter/line plots, histograms and box plots.

use std::fmt::Write;

use lgst_core::experiments::BoxStats;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite() && (!log || *v > 0.0)) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return Self { lo: if log { 1e-3 } else { 0.0 }, hi: 1.0, log };
        }
        if log {
            let (l, h) = (lo.log10().floor(), hi.log10().ceil());
            return Self { lo: 10f64.powf(l), hi: 10f64.powf(if h > l { h } else { l + 1.0 }), log };
        }
        if hi == lo {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            return Self { lo: lo - pad, hi: hi + pad, log };
        }
        let pad = (hi - lo) * 0.05;
        Self { lo: lo - pad, hi: hi + pad, log }
    }

    fn frac(&self, v: f64) -> f64 {
        if self.log {
            (v.max(self.lo).log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
        } else {
            (v - self.lo) / (self.hi - self.lo)
        }
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (a, b) = (self.lo.log10().round() as i32, self.hi.log10().round() as i32);
            let step = ((b - a) / 6).max(1);
            return (a..=b).step_by(step as usize).map(|e| 10f64.powi(e)).collect();
        }
        (0..=5).map(|i| self.lo + (self.hi - self.lo) * i as f64 / 5.0).collect()
    }
}

fn px(a: &Axis, v: f64) -> f64 {
    LEFT + a.frac(v) * (W - LEFT - RIGHT)
}

fn py(a: &Axis, v: f64) -> f64 {
    H - BOTTOM - a.frac(v) * (H - TOP - BOTTOM)
}

fn label(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-2 && v.abs() < 1e4 {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(out: &mut String, title: &str, xlabel: &str, ylabel: &str, manifest: &str) {
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(out, "<!-- manifest {manifest} -->");
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 15.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{y}" text-anchor="middle" transform="rotate(-90 18 {y})">{}</text>"#,
        escape(ylabel),
        y = (TOP + H - BOTTOM) / 2.0
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
}

fn y_ticks(out: &mut String, ya: &Axis) {
    for t in ya.ticks() {
        let y = py(ya, t);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/>"#, LEFT - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, label(t));
    }
}

fn x_ticks(out: &mut String, xa: &Axis) {
    for t in xa.ticks() {
        let x = px(xa, t);
        let _ = writeln!(out, r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="black"/>"#, H - BOTTOM, H - BOTTOM + 4.0);
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 18.0, label(t));
    }
}

fn legend(out: &mut String, names: &[&str]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 14.0 + 16.0 * i as f64;
        let c = PALETTE[i % PALETTE.len()];
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{c}"/>"#, LEFT + 10.0, y - 9.0);
        let _ = writeln!(out, r#"<text x="{}" y="{y}">{}</text>"#, LEFT + 25.0, escape(name));
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Connect the points in order.
    pub line: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Plot {
    pub title: String,
    pub xlabel: String,
    pub ylabel: String,
    pub log_x: bool,
    pub log_y: bool,
    /// Draw `y = x`.
    pub diagonal: bool,
    /// Horizontal dashed reference lines.
    pub hlines: Vec<f64>,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn render(&self, manifest: &str) -> String {
        let all = || self.series.iter().flat_map(|s| s.points.iter());
        let mut xa = Axis::fit(all().map(|p| p.0), self.log_x);
        let mut ya = Axis::fit(all().map(|p| p.1).chain(self.hlines.iter().copied()), self.log_y);
        if self.diagonal {
            let lo = xa.lo.min(ya.lo);
            let hi = xa.hi.max(ya.hi);
            xa = Axis { lo, hi, log: self.log_x };
            ya = Axis { lo, hi, log: self.log_y };
        }
        let mut out = String::new();
        frame(&mut out, &self.title, &self.xlabel, &self.ylabel, manifest);
        x_ticks(&mut out, &xa);
        y_ticks(&mut out, &ya);
        if self.diagonal {
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="gray" stroke-dasharray="4 3"/>"#,
                px(&xa, xa.lo),
                py(&ya, ya.lo),
                px(&xa, xa.hi),
                py(&ya, ya.hi)
            );
        }
        for &h in &self.hlines {
            let y = py(&ya, h);
            let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="gray" stroke-dasharray="2 3"/>"#, W - RIGHT);
        }
        for (i, s) in self.series.iter().enumerate() {
            let c = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| (px(&xa, x), py(&ya, y)))
                .collect();
            if s.line && pts.len() > 1 {
                let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
                let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{c}"/>"#, path.join(" "));
            }
            for (x, y) in pts {
                let _ = writeln!(out, r#"<circle cx="{x:.1}" cy="{y:.1}" r="2" fill="{c}" fill-opacity="0.7"/>"#);
            }
        }
        let names: Vec<&str> = self.series.iter().map(|s| s.name.as_str()).collect();
        legend(&mut out, &names);
        out.push_str("</svg>\n");
        out
    }
}

/// Overlaid step histograms sharing bin `edges` (log-spaced x axis).
pub fn histogram(title: &str, xlabel: &str, edges: &[f64], series: &[(&str, &[usize])], manifest: &str) -> String {
    let xa = Axis { lo: edges[0], hi: edges[edges.len() - 1], log: true };
    let top = series.iter().flat_map(|s| s.1.iter()).copied().max().unwrap_or(1).max(1);
    let ya = Axis { lo: 0.0, hi: top as f64 * 1.05, log: false };
    let mut out = String::new();
    frame(&mut out, title, xlabel, "count", manifest);
    x_ticks(&mut out, &xa);
    y_ticks(&mut out, &ya);
    for (i, (_, counts)) in series.iter().enumerate() {
        let c = PALETTE[i % PALETTE.len()];
        let mut path = format!("{:.1},{:.1}", px(&xa, edges[0]), py(&ya, 0.0));
        for (b, &n) in counts.iter().enumerate() {
            let y = py(&ya, n as f64);
            let _ = write!(path, " {:.1},{y:.1} {:.1},{y:.1}", px(&xa, edges[b]), px(&xa, edges[b + 1]));
        }
        let _ = write!(path, " {:.1},{:.1}", px(&xa, edges[edges.len() - 1]), py(&ya, 0.0));
        let _ = writeln!(out, r#"<polyline points="{path}" fill="{c}" fill-opacity="0.25" stroke="{c}"/>"#);
    }
    let names: Vec<&str> = series.iter().map(|s| s.0).collect();
    legend(&mut out, &names);
    out.push_str("</svg>\n");
    out
}

/// One box (quartiles, whiskers at min and max) per labelled group.
pub fn boxplot(title: &str, xlabel: &str, ylabel: &str, boxes: &[(String, BoxStats)], reference: Option<f64>, manifest: &str) -> String {
    let vals = boxes.iter().flat_map(|(_, b)| [b.min, b.max]).chain(reference);
    let ya = Axis::fit(vals, true);
    let mut out = String::new();
    frame(&mut out, title, xlabel, ylabel, manifest);
    y_ticks(&mut out, &ya);
    let slot = (W - LEFT - RIGHT) / boxes.len().max(1) as f64;
    let half = (slot * 0.3).min(20.0);
    for (i, (name, b)) in boxes.iter().enumerate() {
        let x = LEFT + slot * (i as f64 + 0.5);
        let c = PALETTE[0];
        let _ = writeln!(out, r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="{c}"/>"#, py(&ya, b.min), py(&ya, b.max));
        let _ = writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="white" stroke="{c}"/>"#,
            x - half,
            py(&ya, b.q3),
            2.0 * half,
            (py(&ya, b.q1) - py(&ya, b.q3)).max(0.5)
        );
        let y = py(&ya, b.median);
        let _ = writeln!(out, r#"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="black" stroke-width="2"/>"#, x - half, x + half);
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 18.0, escape(name));
    }
    if let Some(r) = reference {
        let y = py(&ya, r);
        let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="gray" stroke-dasharray="4 3"/>"#, W - RIGHT);
    }
    out.push_str("</svg>\n");
    out
}
