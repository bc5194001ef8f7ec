//! Minimal SVG output: line plots of 1D fields and bar charts of audit margins.

use std::fmt::Write;

use crate::value::InequalityAudit;

const WIDTH: f64 = 640.0;
const PANEL: f64 = 240.0;
const PAD: f64 = 40.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One plotted curve.
pub struct Series<'a> {
    pub label: &'a str,
    pub y: &'a [f64],
}

/// One panel of a figure.
pub enum Panel<'a> {
    Lines {
        title: String,
        x: &'a [f64],
        series: Vec<Series<'a>>,
    },
    Margins {
        title: String,
        audits: &'a [InequalityAudit],
    },
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn lines(out: &mut String, top: f64, title: &str, x: &[f64], series: &[Series<'_>]) {
    let (x0, x1) = range(x.iter().cloned());
    let (y0, y1) = range(series.iter().flat_map(|s| s.y.iter().cloned()));
    let w = WIDTH - 2.0 * PAD;
    let h = PANEL - 2.0 * PAD;
    let px = |v: f64| PAD + (v - x0) / (x1 - x0) * w;
    let py = |v: f64| top + PAD + (1.0 - (v - y0) / (y1 - y0)) * h;
    let _ = writeln!(
        out,
        r##"<rect x="{PAD}" y="{}" width="{w}" height="{h}" fill="none" stroke="#888"/>"##,
        top + PAD
    );
    let _ = writeln!(out, r#"<text x="{PAD}" y="{}" font-size="13">{}</text>"#, top + PAD - 8.0, escape(title));
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-size="10">x in [{x0:.3}, {x1:.3}], y in [{y0:.3e}, {y1:.3e}]</text>"#,
        top + PANEL - 8.0
    );
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut pts = String::new();
        for (xv, yv) in x.iter().zip(s.y) {
            if yv.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", px(*xv), py(*yv));
            }
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.trim_end()
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            WIDTH - PAD - 120.0,
            top + PAD + 14.0 * (k + 1) as f64,
            escape(s.label)
        );
    }
}

/// Bars of `margin / max(1, |rhs|)`, green when the audit passed.
fn margins(out: &mut String, top: f64, title: &str, audits: &[InequalityAudit]) {
    let rel: Vec<f64> = audits.iter().map(|a| a.margin / a.rhs.abs().max(1.0)).collect();
    let m = rel.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let w = WIDTH - 2.0 * PAD;
    let h = PANEL - 2.0 * PAD;
    let mid = top + PAD + h / 2.0;
    let _ = writeln!(out, r#"<text x="{PAD}" y="{}" font-size="13">{}</text>"#, top + PAD - 8.0, escape(title));
    let _ = writeln!(
        out,
        r##"<line x1="{PAD}" y1="{mid}" x2="{}" y2="{mid}" stroke="#888"/>"##,
        PAD + w
    );
    let bw = w / audits.len().max(1) as f64;
    for (i, (a, r)) in audits.iter().zip(&rel).enumerate() {
        let len = r / m * h / 2.0;
        let (y, bh) = if len >= 0.0 { (mid - len, len) } else { (mid, -len) };
        let color = if a.pass { "#2ca02c" } else { "#d62728" };
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{y:.2}" width="{:.2}" height="{bh:.2}" fill="{color}"><title>{}</title></rect>"#,
            PAD + i as f64 * bw + 0.1 * bw,
            0.8 * bw,
            escape(&a.name)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-size="10">relative margins, full scale {m:.3e}</text>"#,
        top + PANEL - 8.0
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Stacks the panels vertically in one SVG document.
pub fn render(panels: &[Panel<'_>]) -> String {
    let height = PANEL * panels.len().max(1) as f64;
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" viewBox=\"0 0 {WIDTH} {height}\">\n"
    );
    for (i, p) in panels.iter().enumerate() {
        let top = i as f64 * PANEL;
        match p {
            Panel::Lines { title, x, series } => lines(&mut out, top, title, x, series),
            Panel::Margins { title, audits } => margins(&mut out, top, title, audits),
        }
    }
    out.push_str("</svg>\n");
    out
}
