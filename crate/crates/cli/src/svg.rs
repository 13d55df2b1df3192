//! Minimal native SVG line charts; CSV stays the canonical output.

use std::fmt::Write;

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

pub struct LineChart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;
const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

impl LineChart {
    pub fn render(&self) -> String {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for s in &self.series {
            for &(x, y) in &s.points {
                let y = if self.log_y { y.max(1e-300).log10() } else { y };
                if x.is_finite() && y.is_finite() {
                    pts.push((x, y));
                }
            }
        }
        let (x_min, x_max) = min_max(pts.iter().map(|p| p.0));
        let (y_min, y_max) = min_max(pts.iter().map(|p| p.1));
        let x_span = (x_max - x_min).max(1e-12);
        let y_span = (y_max - y_min).max(1e-12);
        let to_px = |x: f64, y: f64| {
            let px = MARGIN_L + (x - x_min) / x_span * (WIDTH - MARGIN_L - MARGIN_R);
            let py = HEIGHT - MARGIN_B - (y - y_min) / y_span * (HEIGHT - MARGIN_T - MARGIN_B);
            (px, py)
        };

        let mut svg = String::new();
        let _ = write!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        );
        let _ = write!(svg, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n");
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        );
        // Axes.
        let (x0, y0) = (MARGIN_L, HEIGHT - MARGIN_B);
        let _ = write!(
            svg,
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>\n",
            WIDTH - MARGIN_R
        );
        let _ = write!(
            svg,
            "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{MARGIN_T}\" stroke=\"black\"/>\n"
        );
        // Tick labels at the extremes plus midpoints.
        for frac in [0.0, 0.5, 1.0] {
            let xv = x_min + frac * x_span;
            let (px, _) = to_px(xv, y_min);
            let _ = write!(
                svg,
                "<text x=\"{px}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{:.3e}</text>\n",
                HEIGHT - MARGIN_B + 20.0,
                xv
            );
            let yv = y_min + frac * y_span;
            let (_, py) = to_px(x_min, yv);
            let label = if self.log_y {
                format!("1e{yv:.1}")
            } else {
                format!("{yv:.3e}")
            };
            let _ = write!(
                svg,
                "<text x=\"{}\" y=\"{py}\" font-size=\"12\" text-anchor=\"end\">{label}</text>\n",
                MARGIN_L - 8.0
            );
        }
        let _ = write!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
            (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = write!(
            svg,
            "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
            escape(&self.y_label)
        );
        // Series.
        for (i, s) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let mut path = String::new();
            for &(x, y) in &s.points {
                let y = if self.log_y { y.max(1e-300).log10() } else { y };
                if !x.is_finite() || !y.is_finite() {
                    continue;
                }
                let (px, py) = to_px(x, y);
                if path.is_empty() {
                    let _ = write!(path, "M{px:.2},{py:.2}");
                } else {
                    let _ = write!(path, " L{px:.2},{py:.2}");
                }
            }
            let _ = write!(
                svg,
                "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
            );
            let ly = MARGIN_T + 16.0 * i as f64;
            let _ = write!(
                svg,
                "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"3\"/>\n",
                WIDTH - 200.0,
                WIDTH - 170.0
            );
            let _ = write!(
                svg,
                "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
                WIDTH - 164.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
