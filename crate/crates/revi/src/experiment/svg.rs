//! Minimal self-contained SVG line plots for convergence traces.
//!
//! Output is deterministic: fixed canvas, fixed palette, coordinates rounded
//! to two decimals.

use std::path::Path;

use crate::error::{Error, Result};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 600.0;
const PLOT_LEFT: f64 = 72.0;
const PLOT_RIGHT: f64 = 760.0;
const PLOT_TOP: f64 = 44.0;
const PLOT_BOTTOM: f64 = 548.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#7f7f7f",
];

/// One labelled curve.
#[derive(Debug, Clone)]
pub struct PlotSeries {
    pub label: String,
    /// `(x, y)` pairs; non-finite points are skipped, and non-positive `y`
    /// breaks the curve on a logarithmic axis.
    pub points: Vec<(f64, f64)>,
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(value: f64) -> String {
    let a = value.abs();
    if value == 0.0 {
        "0".to_string()
    } else if a >= 1e5 || a < 1e-3 {
        format!("{value:.0e}")
    } else if a >= 10.0 {
        format!("{value:.0}")
    } else {
        let s = format!("{value:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn project(&self, v: f64, lo_px: f64, hi_px: f64) -> f64 {
        let (v, lo, hi) = if self.log {
            (v.log10(), self.lo.log10(), self.hi.log10())
        } else {
            (v, self.lo, self.hi)
        };
        let t = (v - lo) / (hi - lo);
        lo_px + t * (hi_px - lo_px)
    }

    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let lo_exp = self.lo.log10().floor() as i64;
            let hi_exp = self.hi.log10().ceil() as i64;
            let span = (hi_exp - lo_exp).max(1);
            let step = (span + 9) / 10;
            (0..=span / step)
                .map(|i| 10f64.powi((lo_exp + i * step) as i32))
                .collect()
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let mag = 10f64.powf(raw.log10().floor());
            let norm = raw / mag;
            let step = mag
                * if norm <= 1.0 {
                    1.0
                } else if norm <= 2.0 {
                    2.0
                } else if norm <= 5.0 {
                    5.0
                } else {
                    10.0
                };
            let first = (self.lo / step).ceil() as i64;
            let last = (self.hi / step).floor() as i64;
            (first..=last).map(|i| i as f64 * step).collect()
        }
    }
}

/// Renders the curves to an SVG document.
///
/// With `log_y` the vertical axis uses decades and drops non-positive values;
/// if no series has a positive value the axis falls back to linear.
pub fn render_line_plot(series: &[PlotSeries], title: &str, log_y: bool) -> Result<String> {
    if series.is_empty() {
        return Err(Error::Misuse("nothing to plot: no series".into()));
    }
    let usable = |x: f64, y: f64, log: bool| x.is_finite() && y.is_finite() && (!log || y > 0.0);
    let log = log_y
        && series
            .iter()
            .any(|s| s.points.iter().any(|&(x, y)| usable(x, y, true)));

    let mut x_lo = f64::INFINITY;
    let mut x_hi = f64::NEG_INFINITY;
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in series {
        for &(x, y) in &s.points {
            if usable(x, y, log) {
                x_lo = x_lo.min(x);
                x_hi = x_hi.max(x);
                y_lo = y_lo.min(y);
                y_hi = y_hi.max(y);
            }
        }
    }
    if !x_lo.is_finite() {
        return Err(Error::Misuse("nothing to plot: no finite points".into()));
    }
    if x_lo == x_hi {
        x_lo -= 0.5;
        x_hi += 0.5;
    }
    if log {
        if y_lo == y_hi {
            y_lo /= 10.0;
            y_hi *= 10.0;
        }
    } else {
        if y_lo == y_hi {
            y_lo -= 0.5;
            y_hi += 0.5;
        }
        let pad = 0.04 * (y_hi - y_lo);
        y_lo -= pad;
        y_hi += pad;
    }
    let x_axis = Axis { lo: x_lo, hi: x_hi, log: false };
    let y_axis = Axis { lo: y_lo, hi: y_hi, log };

    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"Helvetica, Arial, sans-serif\">\n"
    ));
    out.push_str(&format!(
        "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"#ffffff\"/>\n"
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        (PLOT_LEFT + PLOT_RIGHT) / 2.0,
        escape_xml(title)
    ));

    for tick in y_axis.ticks() {
        let y = y_axis.project(tick, PLOT_BOTTOM, PLOT_TOP);
        out.push_str(&format!(
            "<line x1=\"{PLOT_LEFT:.2}\" y1=\"{y:.2}\" x2=\"{PLOT_RIGHT:.2}\" y2=\"{y:.2}\" \
             stroke=\"#dddddd\" stroke-width=\"1\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
            PLOT_LEFT - 6.0,
            y + 4.0,
            fmt_tick(tick)
        ));
    }
    for tick in x_axis.ticks() {
        let x = x_axis.project(tick, PLOT_LEFT, PLOT_RIGHT);
        out.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{PLOT_TOP:.2}\" x2=\"{x:.2}\" y2=\"{PLOT_BOTTOM:.2}\" \
             stroke=\"#eeeeee\" stroke-width=\"1\"/>\n"
        ));
        out.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n",
            PLOT_BOTTOM + 16.0,
            fmt_tick(tick)
        ));
    }
    out.push_str(&format!(
        "<rect x=\"{PLOT_LEFT:.2}\" y=\"{PLOT_TOP:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
         fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
        PLOT_RIGHT - PLOT_LEFT,
        PLOT_BOTTOM - PLOT_TOP
    ));
    out.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">iteration</text>\n",
        (PLOT_LEFT + PLOT_RIGHT) / 2.0,
        PLOT_BOTTOM + 36.0
    ));

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |segment: &mut Vec<String>, out: &mut String| {
            if segment.len() >= 2 {
                out.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" \
                     points=\"{}\"/>\n",
                    segment.join(" ")
                ));
            } else if segment.len() == 1 {
                let (x, y) = segment[0].split_once(',').expect("formatted pair");
                out.push_str(&format!(
                    "<circle cx=\"{x}\" cy=\"{y}\" r=\"2\" fill=\"{color}\"/>\n"
                ));
            }
            segment.clear();
        };
        for &(x, y) in &s.points {
            if usable(x, y, log) {
                let px = x_axis.project(x, PLOT_LEFT, PLOT_RIGHT);
                let py = y_axis.project(y, PLOT_BOTTOM, PLOT_TOP);
                segment.push(format!("{px:.2},{py:.2}"));
            } else {
                flush(&mut segment, &mut out);
            }
        }
        flush(&mut segment, &mut out);

        let ly = PLOT_TOP + 10.0 + 18.0 * i as f64;
        out.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{color}\" \
             stroke-width=\"2\"/>\n",
            PLOT_RIGHT + 12.0,
            PLOT_RIGHT + 34.0
        ));
        let mut label = s.label.clone();
        if label.len() > 24 {
            label.truncate(23);
            label.push('…');
        }
        out.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>\n",
            PLOT_RIGHT + 40.0,
            ly + 4.0,
            escape_xml(&label)
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn write_plot(path: &Path, svg: &str) -> Result<()> {
    std::fs::write(path, svg)
        .map_err(|e| Error::Misuse(format!("cannot write {}: {e}", path.display())))
}

/// Builds one curve per `(solver, metric)` pair found in the given trace
/// files and renders them to `out`.
pub fn plot_csv_files(inputs: &[std::path::PathBuf], out: &Path, log_y: bool) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::Config("no csv inputs given".into()));
    }
    let multiple_files = inputs.len() > 1;
    let mut series: Vec<(String, PlotSeries)> = Vec::new();
    let mut metric_names: Vec<String> = Vec::new();
    for path in inputs {
        let rows = crate::experiment::csv::read_rows(path)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        for row in rows {
            if !metric_names.contains(&row.metric_name) {
                metric_names.push(row.metric_name.clone());
            }
            let key = format!("{stem}\u{1}{}\u{1}{}", row.solver, row.metric_name);
            let entry = match series.iter_mut().find(|(k, _)| *k == key) {
                Some((_, s)) => s,
                None => {
                    series.push((
                        key,
                        PlotSeries {
                            label: String::new(),
                            points: Vec::new(),
                        },
                    ));
                    &mut series.last_mut().expect("just pushed").1
                }
            };
            entry.points.push((row.iter as f64, row.metric_value));
        }
        for (key, s) in series.iter_mut() {
            if s.label.is_empty() {
                let mut parts = key.split('\u{1}');
                let (file, solver, metric) = (
                    parts.next().unwrap_or(""),
                    parts.next().unwrap_or(""),
                    parts.next().unwrap_or(""),
                );
                let mut label = solver.to_string();
                if metric_names.len() > 1 {
                    label = format!("{label}/{metric}");
                }
                if multiple_files {
                    label = format!("{label} [{file}]");
                }
                s.label = label;
            }
        }
    }
    let curves: Vec<PlotSeries> = series.into_iter().map(|(_, s)| s).collect();
    let title = if metric_names.len() == 1 {
        metric_names[0].clone()
    } else {
        metric_names.join(", ")
    };
    let svg = render_line_plot(&curves, &title, log_y)?;
    write_plot(out, &svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay_series(label: &str, rate: f64) -> PlotSeries {
        PlotSeries {
            label: label.into(),
            points: (0..50).map(|k| (k as f64, rate.powi(k))).collect(),
        }
    }

    #[test]
    fn log_plot_contains_curves_legend_and_decade_ticks() {
        let svg = render_line_plot(
            &[decay_series("fast", 0.5), decay_series("slow", 0.9)],
            "distance",
            true,
        )
        .unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains(">fast</text>"));
        assert!(svg.contains(">slow</text>"));
        assert!(svg.contains(">1e-15<") || svg.contains(">1e-14<"), "decade labels\n{svg}");
    }

    #[test]
    fn nonpositive_points_break_curves_on_log_axis() {
        let series = PlotSeries {
            label: "gap".into(),
            points: vec![(0.0, 1.0), (1.0, 0.1), (2.0, 0.0), (3.0, 0.01), (4.0, 0.001)],
        };
        let svg = render_line_plot(&[series], "gap", true).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2, "curve splits at the zero");
    }

    #[test]
    fn all_nonpositive_falls_back_to_linear() {
        let series = PlotSeries {
            label: "flatline".into(),
            points: vec![(0.0, 0.0), (1.0, -1.0), (2.0, -2.0)],
        };
        let svg = render_line_plot(&[series], "t", true).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains(">-1<") || svg.contains(">-1.5<"), "linear ticks\n{svg}");
    }

    #[test]
    fn empty_inputs_error() {
        assert!(render_line_plot(&[], "t", true).is_err());
        let series = PlotSeries {
            label: "nan".into(),
            points: vec![(0.0, f64::NAN)],
        };
        assert!(render_line_plot(&[series], "t", false).is_err());
    }

    #[test]
    fn rendering_is_deterministic() {
        let series = [decay_series("a", 0.7), decay_series("b", 0.8)];
        let one = render_line_plot(&series, "repeat", true).unwrap();
        let two = render_line_plot(&series, "repeat", true).unwrap();
        assert_eq!(one, two);
    }

    #[test]
    fn labels_are_escaped() {
        let series = PlotSeries {
            label: "a<b&c".into(),
            points: vec![(0.0, 1.0), (1.0, 2.0)],
        };
        let svg = render_line_plot(&[series], "x<y", false).unwrap();
        assert!(svg.contains("a&lt;b&amp;c"));
        assert!(svg.contains("x&lt;y"));
        assert!(!svg.contains("a<b"));
    }
}
