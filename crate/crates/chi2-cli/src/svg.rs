//! Minimal standalone SVG line plots: linear or log axes, polylines, point
//! markers, legend. No external assets. Coordinates are written with fixed
//! precision so identical data yields identical bytes.

use std::fmt::Write as _;

pub const PALETTE: [&str; 8] = [
    "#1b6ca8", "#d1495b", "#3a7d44", "#8c5383", "#e0a020", "#3d3d3d", "#11867d", "#b3541e",
];

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 76.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 58.0;

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub dashed: bool,
    pub markers: bool,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Tick positions (in transformed coordinates) with their labels.
fn ticks(min: f64, max: f64, log: bool) -> Vec<(f64, String)> {
    if log {
        let lo = min.ceil() as i64;
        let hi = max.floor() as i64;
        let decades: Vec<(f64, String)> = (lo..=hi).map(|k| (k as f64, format!("1e{k}"))).collect();
        if !decades.is_empty() {
            return decades;
        }
        // Less than one decade visible; fall back to the endpoints.
        return vec![
            (min, format!("{:.3e}", 10f64.powf(min))),
            (max, format!("{:.3e}", 10f64.powf(max))),
        ];
    }
    (0..=4)
        .map(|i| {
            let t = min + (max - min) * i as f64 / 4.0;
            (t, format!("{t:.3}"))
        })
        .collect()
}

impl Plot {
    fn keep(&self, (x, y): (f64, f64)) -> bool {
        x.is_finite() && y.is_finite() && (!self.log_x || x > 0.0) && (!self.log_y || y > 0.0)
    }

    fn transform(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (
            if self.log_x { x.log10() } else { x },
            if self.log_y { y.log10() } else { y },
        )
    }

    pub fn render(&self) -> String {
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().copied())
            .filter(|&p| self.keep(p))
            .map(|p| self.transform(p))
            .collect();
        let range = |vals: Vec<f64>| -> (f64, f64) {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in vals {
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if lo > hi {
                return (0.0, 1.0);
            }
            if lo == hi {
                return (lo - 0.5, hi + 0.5);
            }
            let pad = 0.04 * (hi - lo);
            (lo - pad, hi + pad)
        };
        let (x_min, x_max) = range(pts.iter().map(|p| p.0).collect());
        let (y_min, y_max) = range(pts.iter().map(|p| p.1).collect());

        let px = |t: f64| {
            MARGIN_LEFT + (t - x_min) / (x_max - x_min) * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
        };
        let py = |t: f64| {
            HEIGHT
                - MARGIN_BOTTOM
                - (t - y_min) / (y_max - y_min) * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
        };

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
        );
        let _ = writeln!(
            svg,
            "<rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"26\" font-family=\"monospace\" font-size=\"15\" text-anchor=\"middle\">{}</text>",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            escape(&self.title)
        );

        for (t, label) in ticks(x_min, x_max, self.log_x) {
            let x = px(t);
            let _ = writeln!(
                svg,
                "<line x1=\"{x:.2}\" y1=\"{:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
                MARGIN_TOP,
                HEIGHT - MARGIN_BOTTOM
            );
            let _ = writeln!(
                svg,
                "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
                HEIGHT - MARGIN_BOTTOM + 16.0,
                escape(&label)
            );
        }
        for (t, label) in ticks(y_min, y_max, self.log_y) {
            let y = py(t);
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>",
                MARGIN_LEFT,
                WIDTH - MARGIN_RIGHT
            );
            let _ = writeln!(
                svg,
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">{}</text>",
                MARGIN_LEFT - 6.0,
                y + 4.0,
                escape(&label)
            );
        }

        let _ = writeln!(
            svg,
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>",
            WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
            HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
            (MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            svg,
            "<text x=\"20\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">{}</text>",
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            (MARGIN_TOP + HEIGHT - MARGIN_BOTTOM) / 2.0,
            escape(&self.y_label)
        );

        for series in &self.series {
            let kept: Vec<(f64, f64)> = series
                .points
                .iter()
                .copied()
                .filter(|&p| self.keep(p))
                .map(|p| self.transform(p))
                .map(|(x, y)| (px(x), py(y)))
                .collect();
            if kept.is_empty() {
                continue;
            }
            let dash = if series.dashed {
                " stroke-dasharray=\"6 4\""
            } else {
                ""
            };
            if kept.len() > 1 {
                let mut path = String::new();
                for (i, (x, y)) in kept.iter().enumerate() {
                    let cmd = if i == 0 { 'M' } else { 'L' };
                    let _ = write!(path, "{cmd}{x:.2} {y:.2} ");
                }
                let _ = writeln!(
                    svg,
                    "<path d=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>",
                    path.trim_end(),
                    series.color
                );
            }
            if series.markers || kept.len() == 1 {
                for (x, y) in &kept {
                    let _ = writeln!(
                        svg,
                        "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2.6\" fill=\"{}\"/>",
                        series.color
                    );
                }
            }
        }

        let legend_x = WIDTH - MARGIN_RIGHT - 264.0;
        let legend_y = MARGIN_TOP + 10.0;
        let _ = writeln!(
            svg,
            "<rect x=\"{legend_x:.2}\" y=\"{legend_y:.2}\" width=\"256\" height=\"{:.2}\" fill=\"#ffffff\" fill-opacity=\"0.92\" stroke=\"#999999\" stroke-width=\"1\"/>",
            10.0 + 18.0 * self.series.len() as f64
        );
        for (i, series) in self.series.iter().enumerate() {
            let y = legend_y + 18.0 * (i as f64 + 1.0) - 5.0;
            let dash = if series.dashed {
                " stroke-dasharray=\"6 4\""
            } else {
                ""
            };
            let _ = writeln!(
                svg,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{}\" stroke-width=\"1.6\"{dash}/>",
                legend_x + 8.0,
                y - 4.0,
                legend_x + 32.0,
                y - 4.0,
                series.color
            );
            let _ = writeln!(
                svg,
                "<text x=\"{:.2}\" y=\"{y:.2}\" font-family=\"monospace\" font-size=\"11\">{}</text>",
                legend_x + 38.0,
                escape(&series.label)
            );
        }

        svg.push_str("</svg>\n");
        svg
    }
}
