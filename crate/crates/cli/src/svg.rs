//! Hand-rolled SVG plots: a line plot for time series and a bar chart for
//! per-group comparisons. Coordinates are written with two decimals and
//! every numeric label goes through the shared significant-digit formatter,
//! so output is byte-stable across runs.

use crate::output::format_sig;

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn px(v: f64) -> String {
    format!("{v:.2}")
}

struct Axis {
    min: f64,
    max: f64,
}

impl Axis {
    fn from_values(values: impl Iterator<Item = f64>) -> Axis {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            return Axis { min: 0.0, max: 1.0 };
        }
        if min == max {
            // Widen a degenerate range so the single value sits mid-axis.
            let pad = if min == 0.0 { 1.0 } else { min.abs() * 0.1 };
            return Axis { min: min - pad, max: max + pad };
        }
        Axis { min, max }
    }

    fn ticks(&self) -> Vec<f64> {
        (0..=TICKS)
            .map(|i| self.min + (self.max - self.min) * i as f64 / TICKS as f64)
            .collect()
    }
}

fn header(config: &serde_json::Value, title: &str) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str(&format!("<!-- config: {config} -->\n"));
    s.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"28\" font-family=\"sans-serif\" font-size=\"18\" \
         text-anchor=\"middle\">{}</text>\n",
        px(WIDTH / 2.0),
        xml_escape(title)
    ));
    s
}

fn axis_labels(s: &mut String, x_label: &str, y_label: &str) {
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\">{}</text>\n",
        px((MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0),
        px(HEIGHT - 14.0),
        xml_escape(x_label)
    ));
    s.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
         text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        px((MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0),
        px((MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0),
        xml_escape(y_label)
    ));
}

/// One named polyline on a shared pair of axes.
pub struct LineSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const LINE_COLORS: [&str; 8] = [
    "#e6194b", "#3cb44b", "#9b8300", "#0082c8", "#f58231", "#911eb4", "#46a4a4", "#c02890",
];

/// Render series as polylines with axes, ticks and a legend.
pub fn line_plot(
    config: &serde_json::Value,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[LineSeries],
) -> String {
    let xs = Axis::from_values(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let ys = Axis::from_values(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - xs.min) / (xs.max - xs.min) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN_BOTTOM - (y - ys.min) / (ys.max - ys.min) * plot_h;

    let mut s = header(config, title);
    for t in xs.ticks() {
        let x = sx(t);
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#dddddd\"/>\n",
            px(x),
            px(MARGIN_TOP),
            px(HEIGHT - MARGIN_BOTTOM)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>\n",
            px(x),
            px(HEIGHT - MARGIN_BOTTOM + 18.0),
            format_sig(t)
        ));
    }
    for t in ys.ticks() {
        let y = sy(t);
        s.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#dddddd\"/>\n",
            px(y),
            px(MARGIN_LEFT),
            px(WIDTH - MARGIN_RIGHT)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{}</text>\n",
            px(MARGIN_LEFT - 8.0),
            px(y + 4.0),
            format_sig(t)
        ));
    }
    s.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\"/>\n",
        px(MARGIN_LEFT),
        px(MARGIN_TOP),
        px(plot_w),
        px(plot_h)
    ));
    for (i, line) in series.iter().enumerate() {
        let color = LINE_COLORS[i % LINE_COLORS.len()];
        let pts: Vec<String> = line
            .points
            .iter()
            .map(|&(x, y)| format!("{},{}", px(sx(x)), px(sy(y))))
            .collect();
        s.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
        let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        s.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\" \
             stroke-width=\"3\"/>\n",
            px(WIDTH - MARGIN_RIGHT - 150.0),
            px(ly),
            px(WIDTH - MARGIN_RIGHT - 126.0)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            px(WIDTH - MARGIN_RIGHT - 120.0),
            px(ly + 4.0),
            xml_escape(&line.label)
        ));
    }
    axis_labels(&mut s, x_label, y_label);
    s.push_str("</svg>\n");
    s
}

/// Render labeled bars with a zero-based value axis.
pub fn bar_chart(
    config: &serde_json::Value,
    title: &str,
    y_label: &str,
    bars: &[(String, f64)],
) -> String {
    let top = bars.iter().map(|b| b.1).fold(0.0_f64, f64::max);
    let ys = Axis {
        min: 0.0,
        max: if top > 0.0 { top } else { 1.0 },
    };
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sy = |y: f64| HEIGHT - MARGIN_BOTTOM - (y - ys.min) / (ys.max - ys.min) * plot_h;

    let mut s = header(config, title);
    for t in ys.ticks() {
        let y = sy(t);
        s.push_str(&format!(
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#dddddd\"/>\n",
            px(y),
            px(MARGIN_LEFT),
            px(WIDTH - MARGIN_RIGHT)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{}</text>\n",
            px(MARGIN_LEFT - 8.0),
            px(y + 4.0),
            format_sig(t)
        ));
    }
    let n = bars.len().max(1) as f64;
    let slot = plot_w / n;
    let bar_w = slot * 0.6;
    for (i, (label, value)) in bars.iter().enumerate() {
        let x = MARGIN_LEFT + slot * i as f64 + (slot - bar_w) / 2.0;
        let y = sy(*value);
        s.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#0082c8\"/>\n",
            px(x),
            px(y),
            px(bar_w),
            px(HEIGHT - MARGIN_BOTTOM - y)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>\n",
            px(x + bar_w / 2.0),
            px(y - 6.0),
            format_sig(*value)
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{}</text>\n",
            px(x + bar_w / 2.0),
            px(HEIGHT - MARGIN_BOTTOM + 18.0),
            xml_escape(label)
        ));
    }
    s.push_str(&format!(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333333\"/>\n",
        px(MARGIN_LEFT),
        px(MARGIN_TOP),
        px(plot_w),
        px(plot_h)
    ));
    axis_labels(&mut s, "", y_label);
    s.push_str("</svg>\n");
    s
}
