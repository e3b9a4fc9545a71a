//! SVG line charts from CSV tables.
//!
//! Output depends on the input only: no timestamps, fixed float formatting.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::format::significant;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// What to draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub x: String,
    pub y: Vec<String>,
    /// Logarithmic y axis. Points with `y ≤ 0` are left out.
    pub log_y: bool,
}

/// One named polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Extracts one series per y column, in row order.
pub fn read_series<R: Read>(input: R, options: &PlotOptions) -> Result<Vec<Series>> {
    if options.y.is_empty() {
        return Err(Error::Config("no y column given".into()));
    }
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("CSV has no column {name:?}")))
    };
    let x = column(&options.x)?;
    let ys = options.y.iter().map(|y| column(y)).collect::<Result<Vec<_>>>()?;
    let mut series: Vec<Series> = options
        .y
        .iter()
        .map(|name| Series {
            name: name.clone(),
            points: Vec::new(),
        })
        .collect();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Config(format!("CSV row {}: {e}", r + 2)))?;
        let value = |c: usize| -> Result<f64> {
            let s = record.get(c).unwrap_or("");
            s.parse().map_err(|_| {
                Error::Config(format!("CSV row {}, column {} ({}): not a number: {s:?}", r + 2, c + 1, &header[c]))
            })
        };
        let xv = value(x)?;
        for (s, &c) in series.iter_mut().zip(&ys) {
            let yv = value(c)?;
            if xv.is_finite() && yv.is_finite() && (!options.log_y || yv > 0.0) {
                s.points.push((xv, yv));
            }
        }
    }
    Ok(series)
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64> + Clone, log: bool) -> Self {
        let t = |v: f64| if log { v.log10() } else { v };
        let lo = values.clone().map(t).fold(f64::INFINITY, f64::min);
        let hi = values.map(t).fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = match (lo.is_finite(), lo < hi) {
            (false, _) => (0.0, 1.0),
            (true, true) => (lo, hi),
            (true, false) => (lo - 0.5, hi + 0.5),
        };
        let (lo, hi) = if log { (lo.floor(), hi.ceil()) } else { (lo, hi) };
        Axis { lo, hi, log }
    }

    /// Position in `[0, 1]`.
    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        let span = self.hi - self.lo;
        if self.log {
            let decades = span as i64;
            let stride = (decades + TICKS as i64 - 2) / (TICKS as i64 - 1);
            (0..=decades)
                .step_by(stride.max(1) as usize)
                .map(|k| (k as f64 / span, format!("1e{}", self.lo as i64 + k)))
                .collect()
        } else {
            (0..TICKS)
                .map(|k| {
                    let u = k as f64 / (TICKS - 1) as f64;
                    (u, significant(self.lo + u * span, 3))
                })
                .collect()
        }
    }
}

/// Renders the chart.
pub fn render_svg(series: &[Series], options: &PlotOptions) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1));
    let ax = Axis::fit(xs, false);
    let ay = Axis::fit(ys, options.log_y);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + ax.unit(x) * pw;
    let py = |y: f64| TOP + (1.0 - ay.unit(y)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{LEFT} {TOP} V{} H{}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    for (u, label) in ax.ticks() {
        let x = LEFT + u * pw;
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0
        );
    }
    for (u, label) in ay.ticks() {
        let y = TOP + (1.0 - u) * ph;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
            LEFT - 5.0,
            LEFT - 8.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(&options.x)
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if !s.points.is_empty() {
            let points: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                points.join(" ")
            );
        }
        let ly = TOP + 15.0 + 18.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 25.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Reads `csv_path` and writes the chart to `svg_path`.
pub fn emit_plot(csv_path: &Path, svg_path: &Path, options: &PlotOptions) -> Result<()> {
    let series = read_series(std::fs::File::open(csv_path)?, options)?;
    std::fs::write(svg_path, render_svg(&series, options))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(log_y: bool) -> PlotOptions {
        PlotOptions {
            x: "R".into(),
            y: vec!["p_hat".into(), "ci_high".into()],
            log_y,
        }
    }

    const SWEEP: &str = "R,p_hat,ci_high\n0.1,0,0.01\n0.2,0.001,0.02\n0.3,0.01,0.05\n0.4,0.2,0.3\n0.5,0.9,0.95\n";

    #[test]
    fn one_polyline_per_column() {
        let series = read_series(SWEEP.as_bytes(), &opts(false)).unwrap();
        assert_eq!(series.len(), 2);
        assert!(series.iter().all(|s| s.points.len() == 5));
        let svg = render_svg(&series, &opts(false));
        assert_eq!(svg.matches("<polyline").count(), 2);
        let first = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
        assert_eq!(first.split(' ').count(), 5);
    }

    #[test]
    fn log_axis_drops_zeros() {
        let series = read_series(SWEEP.as_bytes(), &opts(true)).unwrap();
        assert_eq!(series[0].points.len(), 4);
        let svg = render_svg(&series, &opts(true));
        assert!(svg.contains(">1e-3<") && svg.contains(">1e0<"));
    }

    #[test]
    fn empty_data_gives_axes_only() {
        let series = read_series("R,p_hat,ci_high\n".as_bytes(), &opts(false)).unwrap();
        let svg = render_svg(&series, &opts(false));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("<path d="));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn deterministic() {
        let a = render_svg(&read_series(SWEEP.as_bytes(), &opts(false)).unwrap(), &opts(false));
        let b = render_svg(&read_series(SWEEP.as_bytes(), &opts(false)).unwrap(), &opts(false));
        assert_eq!(a, b);
    }

    #[test]
    fn malformed_input_names_row_and_column() {
        let bad = "R,p_hat,ci_high\n0.1,0,0.01\n0.2,x,0.02\n";
        let err = read_series(bad.as_bytes(), &opts(false)).unwrap_err().to_string();
        assert!(err.contains("row 3, column 2 (p_hat)"), "{err}");
        let err = read_series("R,q\n1,2\n".as_bytes(), &opts(false)).unwrap_err().to_string();
        assert!(err.contains("\"p_hat\""), "{err}");
        let ragged = "R,p_hat,ci_high\n0.1,0\n";
        assert!(read_series(ragged.as_bytes(), &opts(false)).unwrap_err().to_string().contains("row 2"));
    }
}
