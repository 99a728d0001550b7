//! Minimal self-contained SVG log-log plots.
//!
//! Plots never feed back into any numeric check; they are a human-facing
//! convenience. Nonpositive or non-finite points are dropped since both
//! axes are logarithmic.

use std::io;
use std::path::Path;

use super::csv::write_atomic;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 560.0;
const MARGIN_L: f64 = 72.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 56.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

fn positive(points: &[(f64, f64)]) -> impl Iterator<Item = (f64, f64)> + '_ {
    points
        .iter()
        .copied()
        .filter(|(x, y)| x.is_finite() && y.is_finite() && *x > 0.0 && *y > 0.0)
}

/// Renders `series` on log10/log10 axes and writes the file atomically.
pub fn write_log_log_plot(
    path: &Path,
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[Series<'_>],
) -> io::Result<()> {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in series {
        for (x, y) in positive(s.points) {
            x_min = x_min.min(x);
            x_max = x_max.max(x);
            y_min = y_min.min(y);
            y_max = y_max.max(y);
        }
    }
    let mut svg = String::with_capacity(16 * 1024);
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    ));
    if !(x_min.is_finite() && y_min.is_finite()) {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\" \
             text-anchor=\"middle\">no positive data to plot</text>\n</svg>\n",
            WIDTH / 2.0,
            HEIGHT / 2.0
        ));
        return write_atomic(path, svg.as_bytes());
    }
    // Pad the log range a little so extreme points stay off the frame edge.
    let (lx0, lx1) = padded(x_min.log10(), x_max.log10());
    let (ly0, ly1) = padded(y_min.log10(), y_max.log10());
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + (x.log10() - lx0) / (lx1 - lx0) * plot_w;
    let py = |y: f64| MARGIN_T + (ly1 - y.log10()) / (ly1 - ly0) * plot_h;

    // Frame.
    svg.push_str(&format!(
        "<rect x=\"{MARGIN_L}\" y=\"{MARGIN_T}\" width=\"{plot_w}\" height=\"{plot_h}\" \
         fill=\"none\" stroke=\"#222\" stroke-width=\"1\"/>\n"
    ));
    // Decade gridlines and tick labels.
    for (d, keep) in decades(lx0, lx1) {
        let x = MARGIN_L + (d - lx0) / (lx1 - lx0) * plot_w;
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{MARGIN_T}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
             stroke=\"#ddd\" stroke-width=\"1\"/>\n",
            MARGIN_T + plot_h
        ));
        if keep {
            svg.push_str(&format!(
                "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"middle\">1e{}</text>\n",
                MARGIN_T + plot_h + 16.0,
                d as i64
            ));
        }
    }
    for (d, keep) in decades(ly0, ly1) {
        let y = MARGIN_T + (ly1 - d) / (ly1 - ly0) * plot_h;
        svg.push_str(&format!(
            "<line x1=\"{MARGIN_L}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" \
             stroke=\"#ddd\" stroke-width=\"1\"/>\n",
            MARGIN_L + plot_w
        ));
        if keep {
            svg.push_str(&format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" \
                 text-anchor=\"end\">1e{}</text>\n",
                MARGIN_L - 6.0,
                y + 4.0,
                d as i64
            ));
        }
    }
    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 14.0,
        escape(x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {})\">{}</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
        escape(y_label)
    ));
    // Series polylines and legend.
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut coords = String::new();
        for (x, y) in positive(s.points) {
            coords.push_str(&format!("{:.2},{:.2} ", px(x), py(y)));
        }
        if !coords.is_empty() {
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                coords.trim_end()
            ));
        }
        let ly = MARGIN_T + 16.0 + 18.0 * i as f64;
        let lx = MARGIN_L + plot_w - 180.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 22.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            lx + 28.0,
            ly + 4.0,
            escape(s.label)
        ));
    }
    svg.push_str("</svg>\n");
    write_atomic(path, svg.as_bytes())
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-9 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = (hi - lo) * 0.03;
        (lo - pad, hi + pad)
    }
}

/// Integer decades inside `[lo, hi]`, with a flag thinning labels to at most
/// roughly twelve.
fn decades(lo: f64, hi: f64) -> Vec<(f64, bool)> {
    let first = lo.ceil() as i64;
    let last = hi.floor() as i64;
    if first > last {
        return Vec::new();
    }
    let count = (last - first + 1) as usize;
    let stride = count.div_ceil(12).max(1);
    (first..=last)
        .map(|d| (d as f64, ((d - first) as usize).is_multiple_of(stride)))
        .collect()
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_contains_series_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gap.svg");
        let pts: Vec<(f64, f64)> = (1..200).map(|k| (k as f64, 1.0 / (k * k) as f64)).collect();
        let bound: Vec<(f64, f64)> = (1..200).map(|k| (k as f64, 4.0 / (k * k) as f64)).collect();
        write_log_log_plot(
            &path,
            "objective gap",
            "k",
            "f(y_k) - f*",
            &[
                Series {
                    label: "measured",
                    points: &pts,
                },
                Series {
                    label: "envelope",
                    points: &bound,
                },
            ],
        )
        .unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.starts_with("<svg"));
        assert!(body.contains("measured"));
        assert!(body.contains("envelope"));
        assert_eq!(body.matches("<polyline").count(), 2);
    }

    #[test]
    fn empty_data_still_writes_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.svg");
        write_log_log_plot(
            &path,
            "nothing",
            "x",
            "y",
            &[Series {
                label: "none",
                points: &[],
            }],
        )
        .unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.contains("no positive data"));
    }

    #[test]
    fn nonpositive_points_are_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mixed.svg");
        let pts = [
            (1.0, 1.0),
            (2.0, -1.0),
            (3.0, 0.0),
            (4.0, f64::NAN),
            (5.0, 1e-8),
        ];
        write_log_log_plot(
            &path,
            "t",
            "x",
            "y",
            &[Series {
                label: "s",
                points: &pts,
            }],
        )
        .unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(body.matches("<polyline").count(), 1);
    }
}
