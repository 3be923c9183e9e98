//! Minimal SVG bar and line charts.
//!
//! Bars are emitted as `<rect class="bar">` elements whose `height` is
//! proportional to the value, so charts can be checked by parsing.

use std::fmt::Write as _;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 360.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 80.0;
const PALETTE: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948"];

/// Height of the plotting area in pixels.
pub const PLOT_HEIGHT: f64 = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, title: &str, y_label: &str) {
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"##
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##);
    let _ = writeln!(
        out,
        r##"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"##,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        out,
        r##"<text x="16" y="{}" transform="rotate(-90 16 {})" text-anchor="middle">{}</text>"##,
        MARGIN_TOP + PLOT_HEIGHT / 2.0,
        MARGIN_TOP + PLOT_HEIGHT / 2.0,
        escape(y_label)
    );
}

fn axes(out: &mut String, max: f64) {
    let base = MARGIN_TOP + PLOT_HEIGHT;
    let _ = writeln!(
        out,
        r##"<line x1="{MARGIN_LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="#333"/>"##,
        WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(out, r##"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{base}" stroke="#333"/>"##);
    for k in 0..=4 {
        let v = max * k as f64 / 4.0;
        let y = base - PLOT_HEIGHT * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            MARGIN_LEFT - 6.0,
            y + 4.0,
            tick(v)
        );
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{:.0}", v)
    } else if v.abs() >= 1.0 {
        format!("{:.1}", v)
    } else {
        format!("{:.3}", v)
    }
}

fn scale_max(values: impl Iterator<Item = f64>) -> f64 {
    let m = values.filter(|v| v.is_finite()).fold(0.0, f64::max);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// One bar per label.
pub fn bar_chart(title: &str, y_label: &str, labels: &[String], values: &[f64]) -> String {
    let series = vec![(String::new(), values.iter().map(|&v| Some(v)).collect())];
    grouped_bar_chart(title, y_label, labels, &series)
}

/// Bars grouped by category, one color per series; `None` leaves a gap.
pub fn grouped_bar_chart(title: &str, y_label: &str, categories: &[String], series: &[(String, Vec<Option<f64>>)]) -> String {
    let mut out = String::new();
    header(&mut out, title, y_label);
    let max = scale_max(series.iter().flat_map(|(_, v)| v.iter().flatten().copied()));
    axes(&mut out, max);
    let base = MARGIN_TOP + PLOT_HEIGHT;
    let slot = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / categories.len().max(1) as f64;
    let bar_w = slot * 0.8 / series.len().max(1) as f64;
    for (c, label) in categories.iter().enumerate() {
        let x0 = MARGIN_LEFT + slot * c as f64 + slot * 0.1;
        for (s, (name, values)) in series.iter().enumerate() {
            let Some(v) = values.get(c).copied().flatten() else { continue };
            let h = PLOT_HEIGHT * v.max(0.0) / max;
            let _ = writeln!(
                out,
                r##"<rect class="bar" data-series="{}" data-label="{}" data-value="{}" x="{:.3}" y="{:.6}" width="{:.3}" height="{:.6}" fill="{}"/>"##,
                escape(name),
                escape(label),
                v,
                x0 + bar_w * s as f64,
                base - h,
                bar_w,
                h,
                PALETTE[s % PALETTE.len()]
            );
        }
        let cx = x0 + slot * 0.4;
        let _ = writeln!(
            out,
            r##"<text x="{cx:.2}" y="{:.2}" transform="rotate(45 {cx:.2} {:.2})" text-anchor="start">{}</text>"##,
            base + 14.0,
            base + 14.0,
            escape(label)
        );
    }
    legend(&mut out, series.iter().map(|(n, _)| n.as_str()));
    out.push_str("</svg>\n");
    out
}

/// One polyline per series over a shared index axis.
pub fn line_chart(title: &str, y_label: &str, x_label: &str, series: &[(String, Vec<f64>)]) -> String {
    let mut out = String::new();
    header(&mut out, title, y_label);
    let max = scale_max(series.iter().flat_map(|(_, v)| v.iter().copied()));
    axes(&mut out, max);
    let base = MARGIN_TOP + PLOT_HEIGHT;
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    let span = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / (n.max(2) - 1) as f64;
    for (s, (name, values)) in series.iter().enumerate() {
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(k, v)| format!("{:.3},{:.3}", MARGIN_LEFT + span * k as f64, base - PLOT_HEIGHT * v.max(0.0) / max))
            .collect();
        let _ = writeln!(
            out,
            r##"<polyline class="series" data-series="{}" fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"##,
            escape(name),
            PALETTE[s % PALETTE.len()],
            points.join(" ")
        );
    }
    let _ = writeln!(
        out,
        r##"<text x="{}" y="{}" text-anchor="middle">{}</text>"##,
        MARGIN_LEFT + (WIDTH - MARGIN_LEFT - MARGIN_RIGHT) / 2.0,
        HEIGHT - 20.0,
        escape(x_label)
    );
    legend(&mut out, series.iter().map(|(n, _)| n.as_str()));
    out.push_str("</svg>\n");
    out
}

fn legend<'a>(out: &mut String, names: impl Iterator<Item = &'a str>) {
    for (k, name) in names.enumerate().filter(|(_, n)| !n.is_empty()) {
        let x = WIDTH - MARGIN_RIGHT - 120.0;
        let y = MARGIN_TOP + 14.0 * k as f64;
        let _ = writeln!(
            out,
            r##"<rect x="{x}" y="{}" width="10" height="10" fill="{}"/><text x="{}" y="{}">{}</text>"##,
            y - 9.0,
            PALETTE[k % PALETTE.len()],
            x + 14.0,
            y,
            escape(name)
        );
    }
}
