//! Deterministic SVG rendering of force–contraction curves.
//!
//! The renderer is self-contained (no plotting dependency) so byte-identical
//! inputs always produce byte-identical files: no timestamps, no random ids,
//! a fixed 800×600 canvas, and tick positions derived only from the data.
//! Each series' raw samples are embedded in an XML comment so a rendered
//! file still carries its numbers.

use std::fs;
use std::path::Path;

use crate::state::Curve;
use crate::types::{Error, Result};

/// Canvas width in user units (fixed).
pub const CANVAS_W: f64 = 800.0;
/// Canvas height in user units (fixed).
pub const CANVAS_H: f64 = 600.0;

const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 64.0;

/// Fixed series palette (repeats after six).
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// One named polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// Sample points in axis units (x, y); non-finite points are skipped.
    pub points: Vec<(f64, f64)>,
}

/// A 2-D line plot with labelled axes rendering to SVG.
#[derive(Debug, Clone)]
pub struct Plot {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
}

impl Plot {
    /// An empty plot with the given title and axis labels.
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            series: Vec::new(),
        }
    }

    /// The standard force-vs-contraction axes: percent on x, newtons on y.
    pub fn force_curve(title: &str) -> Self {
        Plot::new(title, "contraction ratio [%]", "output force [N]")
    }

    /// Add an arbitrary series in axis units.
    pub fn add_series(&mut self, label: &str, points: Vec<(f64, f64)>) {
        self.series.push(Series { label: label.to_string(), points });
    }

    /// Add a traced curve as a series, converting the contraction ratio to
    /// percent for the x axis.
    pub fn add_curve(&mut self, label: &str, curve: &Curve) {
        let pts = curve
            .points
            .iter()
            .map(|p| (100.0 * p.contraction_ratio_cr, p.output_force_f))
            .collect();
        self.add_series(label, pts);
    }

    /// Render the plot as a complete SVG document.
    pub fn to_svg(&self) -> String {
        let mut svg = String::with_capacity(16 * 1024);
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {CANVAS_W} {CANVAS_H}\" \
             width=\"{CANVAS_W}\" height=\"{CANVAS_H}\">\n"
        ));
        svg.push_str("<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n");

        // Raw data, embedded so the file is self-describing.
        for s in &self.series {
            let body: Vec<String> = s
                .points
                .iter()
                .map(|(x, y)| format!("{x},{y}"))
                .collect();
            svg.push_str(&format!(
                "<!-- data series={} points={} {} -->\n",
                comment_safe(&s.label),
                s.points.len(),
                body.join("; ")
            ));
        }

        let (x0, x1) = (MARGIN_LEFT, CANVAS_W - MARGIN_RIGHT);
        let (y0, y1) = (CANVAS_H - MARGIN_BOTTOM, MARGIN_TOP);

        let finite: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();

        if finite.is_empty() {
            svg.push_str(&format!(
                "<text x=\"400\" y=\"300\" text-anchor=\"middle\" font-family=\"sans-serif\" \
                 font-size=\"16\" fill=\"#666\">no data</text>\n"
            ));
            svg.push_str(&format!(
                "<text x=\"400\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" \
                 font-size=\"17\" fill=\"#111\">{}</text>\n",
                xml_escape(&self.title)
            ));
            svg.push_str("</svg>\n");
            return svg;
        }

        let (xmin, xmax) = padded_range(finite.iter().map(|p| p.0));
        let (ymin, ymax) = padded_range(finite.iter().map(|p| p.1));
        let sx = |x: f64| x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
        let sy = |y: f64| y0 - (y - ymin) / (ymax - ymin) * (y0 - y1);

        // Grid and ticks.
        let xticks = nice_ticks(xmin, xmax, 8);
        let yticks = nice_ticks(ymin, ymax, 8);
        for &t in &xticks {
            let px = sx(t);
            svg.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{y0:.2}\" x2=\"{px:.2}\" y2=\"{y1:.2}\" \
                 stroke=\"#e3e3e3\" stroke-width=\"1\"/>\n"
            ));
            svg.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{y0:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" \
                 stroke=\"#333\" stroke-width=\"1\"/>\n",
                y0 + 5.0
            ));
            svg.push_str(&format!(
                "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" \
                 font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">{}</text>\n",
                y0 + 20.0,
                fmt_tick(t)
            ));
        }
        for &t in &yticks {
            let py = sy(t);
            svg.push_str(&format!(
                "<line x1=\"{x0:.2}\" y1=\"{py:.2}\" x2=\"{x1:.2}\" y2=\"{py:.2}\" \
                 stroke=\"#e3e3e3\" stroke-width=\"1\"/>\n"
            ));
            svg.push_str(&format!(
                "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{x0:.2}\" y2=\"{py:.2}\" \
                 stroke=\"#333\" stroke-width=\"1\"/>\n",
                x0 - 5.0
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" \
                 font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">{}</text>\n",
                x0 - 9.0,
                py + 4.0,
                fmt_tick(t)
            ));
        }

        // Zero line on the force axis, when in range.
        if ymin < 0.0 && ymax > 0.0 {
            let py = sy(0.0);
            svg.push_str(&format!(
                "<line x1=\"{x0:.2}\" y1=\"{py:.2}\" x2=\"{x1:.2}\" y2=\"{py:.2}\" \
                 stroke=\"#999\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n"
            ));
        }

        // Frame.
        svg.push_str(&format!(
            "<rect x=\"{x0:.2}\" y=\"{y1:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"none\" stroke=\"#333\" stroke-width=\"1.5\"/>\n",
            x1 - x0,
            y0 - y1
        ));

        // Series polylines.
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<String> = s
                .points
                .iter()
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            if pts.is_empty() {
                continue;
            }
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" \
                 stroke-width=\"2\" stroke-linejoin=\"round\"/>\n",
                pts.join(" ")
            ));
        }

        // Legend (top-right corner of the frame).
        let mut ly = y1 + 16.0;
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let lx = x1 - 190.0;
            svg.push_str(&format!(
                "<line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
                 stroke=\"{color}\" stroke-width=\"2\"/>\n",
                ly - 4.0,
                lx + 26.0,
                ly - 4.0
            ));
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{ly:.2}\" font-family=\"sans-serif\" \
                 font-size=\"12\" fill=\"#111\">{}</text>\n",
                lx + 32.0,
                xml_escape(&s.label)
            ));
            ly += 18.0;
        }

        // Title and axis labels.
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"17\" fill=\"#111\">{}</text>\n",
            (x0 + x1) / 2.0,
            xml_escape(&self.title)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"14\" fill=\"#111\">{}</text>\n",
            (x0 + x1) / 2.0,
            CANVAS_H - 18.0,
            xml_escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"14\" fill=\"#111\" transform=\"rotate(-90 20 {:.2})\">{}</text>\n",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            xml_escape(&self.y_label)
        ));

        svg.push_str("</svg>\n");
        svg
    }

    /// Render and write the SVG file.
    pub fn write_svg(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_svg())
            .map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))
    }
}

/// Pad a data range by 5% on each side; degenerate ranges get a unit span.
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if lo == hi {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// At most `target` ticks at 1–2–5 × 10^k spacing, snapped to exact
/// multiples of the step so labels have no float noise.
fn nice_ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    assert!(max > min && target >= 2);
    let raw_step = (max - min) / target as f64;
    let mag = 10f64.powf(raw_step.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| (max - min) / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let k0 = (min / step).ceil() as i64;
    let k1 = (max / step).floor() as i64;
    (k0..=k1).map(|k| k as f64 * step).collect()
}

/// Short decimal form of a tick value (float noise clipped at 6 decimals).
fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// XML comments must not contain `--`; labels are sanitized before embedding.
fn comment_safe(s: &str) -> String {
    xml_escape(s).replace("--", "‑‑")
}
