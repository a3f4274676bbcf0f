//! Small hand-rolled SVG charts. Coordinates are rounded to two decimals so
//! output is stable across platforms.

use super::model::AuditReport;
use std::collections::BTreeMap;
use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PALETTE: [&str; 6] = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Svg(String);

impl Svg {
    fn new(title: &str) -> Self {
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            esc(title)
        );
        Svg(s)
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str, dash: bool) {
        let d = if dash { r#" stroke-dasharray="4 3""# } else { "" };
        let _ = writeln!(
            self.0,
            r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}"{d}/>"#
        );
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.0,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{h:.2}" fill="{fill}"/>"#
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, s: &str) {
        let _ = writeln!(
            self.0,
            r#"<text x="{x:.2}" y="{y:.2}" text-anchor="{anchor}">{}</text>"#,
            esc(s)
        );
    }

    fn empty(mut self) -> String {
        self.text(W / 2.0, H / 2.0, "middle", "no data");
        self.finish()
    }

    fn finish(mut self) -> String {
        self.0.push_str("</svg>\n");
        self.0
    }
}

struct Bar {
    label: String,
    value: f64,
    lo: f64,
    hi: f64,
}

/// Vertical bars with CI whiskers and a dashed reference line.
fn bar_chart(title: &str, bars: &[Bar], y_min: f64, y_max: f64, reference: f64) -> String {
    let mut svg = Svg::new(title);
    if bars.is_empty() {
        return svg.empty();
    }
    let (left, right, top, bottom) = (60.0, W - 20.0, 40.0, H - 70.0);
    let y = |v: f64| bottom - (v.clamp(y_min, y_max) - y_min) / (y_max - y_min) * (bottom - top);
    svg.line(left, top, left, bottom, "black", false);
    for i in 0..=4 {
        let v = y_min + (y_max - y_min) * i as f64 / 4.0;
        svg.line(left - 4.0, y(v), left, y(v), "black", false);
        svg.text(left - 6.0, y(v) + 4.0, "end", &format!("{v:.0}"));
    }
    let slot = (right - left) / bars.len() as f64;
    for (i, b) in bars.iter().enumerate() {
        let cx = left + slot * (i as f64 + 0.5);
        let bw = slot * 0.6;
        let (y0, y1) = (y(reference.max(y_min)), y(b.value));
        svg.rect(cx - bw / 2.0, y0.min(y1), bw, (y0 - y1).abs(), PALETTE[i % PALETTE.len()]);
        svg.line(cx, y(b.lo), cx, y(b.hi), "black", false);
        svg.line(cx - bw / 6.0, y(b.lo), cx + bw / 6.0, y(b.lo), "black", false);
        svg.line(cx - bw / 6.0, y(b.hi), cx + bw / 6.0, y(b.hi), "black", false);
        svg.text(cx, bottom + 16.0, "middle", &b.label);
        svg.text(cx, y(b.hi) - 4.0, "middle", &format!("{:.2}", b.value));
    }
    svg.line(left, y(reference), right, y(reference), "#555", true);
    svg.finish()
}

fn selection_plot(report: &AuditReport) -> String {
    let bars: Vec<Bar> = report
        .rewards
        .iter()
        .flat_map(|r| &r.models)
        .map(|m| Bar {
            label: m.name.clone(),
            value: m.selection.rate,
            lo: m.selection.ci_low,
            hi: m.selection.ci_high,
        })
        .collect();
    bar_chart("Selection rate with bootstrap CI", &bars, 0.0, 100.0, 50.0)
}

fn disparity_plot(report: &AuditReport) -> String {
    let bars: Vec<Bar> = report
        .generations
        .iter()
        .flat_map(|g| &g.models)
        .filter_map(|m| {
            m.disparity.as_ref().map(|d| Bar {
                label: m.name.clone(),
                value: d.difference,
                lo: d.ci_low,
                hi: d.ci_high,
            })
        })
        .collect();
    let extent = bars
        .iter()
        .map(|b| b.lo.abs().max(b.hi.abs()))
        .fold(5.0f64, f64::max)
        .ceil();
    bar_chart("Negative regard difference (TGNB - binary)", &bars, -extent, extent, 0.0)
}

fn agreement_plot(report: &AuditReport) -> String {
    let mut svg = Svg::new("Selection agreement (Cohen's kappa)");
    let Some(r) = &report.rewards else { return svg.empty() };
    if r.models.len() < 2 {
        return svg.empty();
    }
    let names: Vec<&str> = r.models.iter().map(|m| m.name.as_str()).collect();
    let mut k: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for a in &r.agreement {
        k.insert((&a.model_a, &a.model_b), a.kappa);
        k.insert((&a.model_b, &a.model_a), a.kappa);
    }
    let n = names.len() as f64;
    let (left, top) = (140.0, 40.0);
    let cell = ((W - left - 20.0) / n).min((H - top - 90.0) / n);
    for (i, a) in names.iter().enumerate() {
        svg.text(left - 6.0, top + cell * (i as f64 + 0.5) + 4.0, "end", a);
        svg.text(left + cell * (i as f64 + 0.5), top + cell * n + 16.0, "middle", a);
        for (j, b) in names.iter().enumerate() {
            let v = if i == j { Some(1.0) } else { k.get(&(*a, *b)).copied() };
            let (x, y) = (left + cell * j as f64, top + cell * i as f64);
            match v {
                Some(v) => {
                    // white at kappa 0, blue towards 1, red towards -1
                    let t = v.clamp(-1.0, 1.0);
                    let c = (255.0 * (1.0 - t.abs())).round() as u8;
                    let fill = if t >= 0.0 { format!("#{c:02x}{c:02x}ff") } else { format!("#ff{c:02x}{c:02x}") };
                    svg.rect(x, y, cell, cell, &fill);
                    svg.text(x + cell / 2.0, y + cell / 2.0 + 4.0, "middle", &format!("{v:.2}"));
                }
                None => {
                    svg.rect(x, y, cell, cell, "#eeeeee");
                    svg.text(x + cell / 2.0, y + cell / 2.0 + 4.0, "middle", "n/a");
                }
            }
        }
    }
    svg.finish()
}

fn theme_radar(report: &AuditReport) -> String {
    let mut svg = Svg::new("Theme distribution");
    let series: Vec<(String, Vec<(String, f64)>)> = report
        .generations
        .iter()
        .flat_map(|g| &g.comparisons)
        .filter_map(|c| {
            c.themes.as_ref().map(|t| {
                (
                    c.aligned.clone(),
                    t.shares.iter().map(|s| (s.theme.clone(), s.pct)).collect(),
                )
            })
        })
        .collect();
    let Some((_, axes)) = series.first() else { return svg.empty() };
    let n = axes.len();
    if n < 3 {
        return svg.empty();
    }
    let (cx, cy, radius) = (W / 2.0 - 60.0, H / 2.0 + 10.0, 140.0);
    let max = series
        .iter()
        .flat_map(|(_, v)| v.iter().map(|(_, p)| *p))
        .fold(10.0f64, f64::max);
    let point = |i: usize, frac: f64| {
        let a = std::f64::consts::TAU * i as f64 / n as f64 - std::f64::consts::FRAC_PI_2;
        (cx + radius * frac * a.cos(), cy + radius * frac * a.sin())
    };
    for ring in 1..=4 {
        let pts: Vec<String> = (0..n)
            .map(|i| {
                let (x, y) = point(i, ring as f64 / 4.0);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(svg.0, r##"<polygon points="{}" fill="none" stroke="#ccc"/>"##, pts.join(" "));
    }
    for (i, (name, _)) in axes.iter().enumerate() {
        let (x, y) = point(i, 1.0);
        svg.line(cx, cy, x, y, "#ccc", false);
        let (lx, ly) = point(i, 1.15);
        svg.text(lx, ly + 4.0, "middle", name);
    }
    for (k, (label, values)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, (_, p))| {
                let (x, y) = point(i, p / max);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            svg.0,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="{color}"/>"#,
            pts.join(" ")
        );
        svg.rect(W - 150.0, 50.0 + 18.0 * k as f64, 10.0, 10.0, color);
        svg.text(W - 135.0, 59.0 + 18.0 * k as f64, "start", label);
    }
    svg.finish()
}

pub(crate) fn render_all(report: &AuditReport) -> Vec<(&'static str, String)> {
    vec![
        ("selection_rates.svg", selection_plot(report)),
        ("disparity.svg", disparity_plot(report)),
        ("agreement.svg", agreement_plot(report)),
        ("themes.svg", theme_radar(report)),
    ]
}
