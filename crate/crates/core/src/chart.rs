//! Static SVG line charts with no external rendering dependencies.
//!
//! Output is plain deterministic text: fixed canvas, two-decimal
//! coordinates, one polyline per series. Series may start at an x offset
//! so a forecast can continue where the historical curve ends.

use chrono::NaiveDate;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 80.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 56.0;

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"];

/// One polyline; `start` is the x index of its first point.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub start: usize,
    pub values: Vec<f64>,
}

impl Series {
    pub fn new(label: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            start: 0,
            values,
        }
    }

    pub fn starting_at(label: impl Into<String>, start: usize, values: Vec<f64>) -> Self {
        Self {
            label: label.into(),
            start,
            values,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LineChart {
    pub title: String,
    pub y_label: String,
    /// Calendar labels for the shared x axis; indices are used when absent.
    pub dates: Option<Vec<NaiveDate>>,
    pub series: Vec<Series>,
}

impl LineChart {
    pub fn new(title: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            y_label: y_label.into(),
            dates: None,
            series: Vec::new(),
        }
    }

    pub fn with_dates(mut self, dates: Vec<NaiveDate>) -> Self {
        self.dates = Some(dates);
        self
    }

    pub fn push_series(&mut self, series: Series) {
        self.series.push(series);
    }

    fn x_extent(&self) -> usize {
        self.series
            .iter()
            .map(|s| s.start + s.values.len())
            .max()
            .unwrap_or(0)
    }

    fn y_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for series in &self.series {
            for &v in &series.values {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() || !hi.is_finite() {
            return (0.0, 1.0);
        }
        if lo > 0.0 {
            lo = 0.0; // anchor count axes at zero
        }
        if (hi - lo).abs() < f64::EPSILON {
            hi = lo + 1.0;
        }
        (lo, hi)
    }

    /// Renders the chart to an SVG document string.
    pub fn render(&self) -> String {
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let n = self.x_extent();
        let (y_lo, y_hi) = self.y_bounds();

        let x_pos = |i: usize| {
            if n <= 1 {
                MARGIN_LEFT
            } else {
                MARGIN_LEFT + plot_w * i as f64 / (n - 1) as f64
            }
        };
        let y_pos = |v: f64| MARGIN_TOP + plot_h * (1.0 - (v - y_lo) / (y_hi - y_lo));

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
        ));
        svg.push_str(&format!(
            "  <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // Horizontal grid plus y tick labels.
        const Y_TICKS: usize = 5;
        for tick in 0..=Y_TICKS {
            let value = y_lo + (y_hi - y_lo) * tick as f64 / Y_TICKS as f64;
            let y = y_pos(value);
            svg.push_str(&format!(
                "  <line x1=\"{MARGIN_LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
                 stroke=\"#dddddd\"/>\n",
                WIDTH - MARGIN_RIGHT
            ));
            svg.push_str(&format!(
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                MARGIN_LEFT - 6.0,
                y + 4.0,
                format_tick(value)
            ));
        }

        // X tick labels: ISO dates when available, indices otherwise.
        if n > 0 {
            const X_TICKS: usize = 6;
            let last = n - 1;
            let mut seen = usize::MAX;
            for tick in 0..=X_TICKS {
                let idx = last * tick / X_TICKS;
                if idx == seen {
                    continue;
                }
                seen = idx;
                let label = match &self.dates {
                    Some(dates) if idx < dates.len() => dates[idx].to_string(),
                    _ => idx.to_string(),
                };
                svg.push_str(&format!(
                    "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
                    x_pos(idx),
                    HEIGHT - MARGIN_BOTTOM + 18.0,
                    label
                ));
            }
        }

        // Axes.
        svg.push_str(&format!(
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_BOTTOM
        ));
        svg.push_str(&format!(
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            HEIGHT - MARGIN_BOTTOM,
            WIDTH - MARGIN_RIGHT,
            HEIGHT - MARGIN_BOTTOM
        ));
        svg.push_str(&format!(
            "  <text x=\"18\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\" \
             transform=\"rotate(-90 18 {:.2})\">{}</text>\n",
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(&self.y_label)
        ));

        // Series polylines and legend.
        for (series_idx, series) in self.series.iter().enumerate() {
            let color = PALETTE[series_idx % PALETTE.len()];
            if !series.values.is_empty() {
                let points: Vec<String> = series
                    .values
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| format!("{:.2},{:.2}", x_pos(series.start + i), y_pos(v)))
                    .collect();
                svg.push_str(&format!(
                    "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
                    points.join(" ")
                ));
            }
            let legend_y = MARGIN_TOP + 16.0 * series_idx as f64;
            svg.push_str(&format!(
                "  <rect x=\"{:.2}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
                MARGIN_LEFT + 8.0,
                legend_y
            ));
            svg.push_str(&format!(
                "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>\n",
                MARGIN_LEFT + 22.0,
                legend_y + 9.0,
                escape(&series.label)
            ));
        }

        svg.push_str("</svg>\n");
        svg
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn format_tick(value: f64) -> String {
    if value.abs() >= 1000.0 {
        format!("{:.0}", value)
    } else if value == value.trunc() {
        format!("{:.0}", value)
    } else {
        format!("{:.2}", value)
    }
}
