use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::experiments::{Summary, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvgMetric {
    UnderestimationScore,
    DisparateImpact,
    BalancedAccuracy,
}

impl SvgMetric {
    pub const ALL: [SvgMetric; 3] = [
        SvgMetric::UnderestimationScore,
        SvgMetric::DisparateImpact,
        SvgMetric::BalancedAccuracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SvgMetric::UnderestimationScore => "us_s",
            SvgMetric::DisparateImpact => "di_s",
            SvgMetric::BalancedAccuracy => "balanced_accuracy",
        }
    }

    pub fn pick(self, s: &Summary) -> Option<f64> {
        match self {
            SvgMetric::UnderestimationScore => s.us_s,
            SvgMetric::DisparateImpact => s.di_s,
            SvgMetric::BalancedAccuracy => s.balanced_accuracy,
        }
    }

    fn colour(self) -> &'static str {
        match self {
            SvgMetric::UnderestimationScore => "#1f4e9a",
            SvgMetric::DisparateImpact => "#c2461b",
            SvgMetric::BalancedAccuracy => "#2e8540",
        }
    }
}

impl FromStr for SvgMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "us_s" | "us" => Ok(SvgMetric::UnderestimationScore),
            "di_s" | "di" => Ok(SvgMetric::DisparateImpact),
            "balanced_accuracy" | "ba" => Ok(SvgMetric::BalancedAccuracy),
            other => Err(Error::InvalidArgument(format!("unknown metric `{other}`"))),
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

const DARK: [f64; 3] = [8.0, 48.0, 107.0];
const LIGHT: [f64; 3] = [247.0, 251.0, 255.0];

/// Every channel rises with `t`, so luminance is strictly increasing.
fn ramp(t: f64) -> [u8; 3] {
    std::array::from_fn(|c| (DARK[c] + t.clamp(0.0, 1.0) * (LIGHT[c] - DARK[c])).round() as u8)
}

fn hex(rgb: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2])
}

const CELL_W: f64 = 80.0;
const CELL_H: f64 = 48.0;
const LEFT: f64 = 120.0;
const TOP: f64 = 60.0;

/// Grid of median `metric` values, first axis down the rows and second
/// across the columns. Lower values are darker; the legend maps the shades
/// back to numbers.
pub fn render_heatmap(r: &SweepResult, metric: SvgMetric, path: impl AsRef<Path>) -> Result<()> {
    if r.axes.len() != 2 {
        return Err(Error::NotTwoDimensional(r.axes.len()));
    }
    let (rows, cols) = (&r.axes[0], &r.axes[1]);
    let values: Vec<Option<f64>> = r.cells.iter().map(|c| metric.pick(&c.summary)).collect();
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    let lo = defined.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shade = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };

    let grid_w = CELL_W * cols.levels.len() as f64;
    let grid_h = CELL_H * rows.levels.len() as f64;
    let legend_x = LEFT + grid_w + 40.0;
    let width = legend_x + 110.0;
    let height = TOP + grid_h + 70.0;

    let mut s = String::new();
    writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"##
    )
    .unwrap();
    writeln!(
        s,
        r##"<text x="{}" y="24" font-size="15" text-anchor="middle">median {} ({} learner, {} repeats)</text>"##,
        LEFT + grid_w / 2.0,
        metric.name(),
        r.learner,
        r.repeats
    )
    .unwrap();

    for cell in &r.cells {
        let (i, j) = (cell.coords[0], cell.coords[1]);
        let (x, y) = (LEFT + j as f64 * CELL_W, TOP + i as f64 * CELL_H);
        match metric.pick(&cell.summary) {
            Some(v) => {
                let t = shade(v);
                let ink = if t < 0.5 { "#ffffff" } else { "#000000" };
                writeln!(
                    s,
                    r##"<rect class="cell" data-row="{i}" data-col="{j}" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{}" stroke="#ffffff"/>"##,
                    hex(ramp(t))
                )
                .unwrap();
                writeln!(
                    s,
                    r##"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{v:.3}</text>"##,
                    x + CELL_W / 2.0,
                    y + CELL_H / 2.0 + 4.0
                )
                .unwrap();
            }
            None => {
                writeln!(
                    s,
                    r##"<rect class="cell" data-row="{i}" data-col="{j}" x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="#d9d9d9" stroke="#ffffff"/>"##
                )
                .unwrap();
                writeln!(
                    s,
                    r##"<text x="{}" y="{}" text-anchor="middle">n/a</text>"##,
                    x + CELL_W / 2.0,
                    y + CELL_H / 2.0 + 4.0
                )
                .unwrap();
            }
        }
    }

    for (i, level) in rows.levels.iter().enumerate() {
        writeln!(
            s,
            r##"<text x="{}" y="{}" text-anchor="end">{}</text>"##,
            LEFT - 8.0,
            TOP + (i as f64 + 0.5) * CELL_H + 4.0,
            escape(&level.to_string())
        )
        .unwrap();
    }
    for (j, level) in cols.levels.iter().enumerate() {
        writeln!(
            s,
            r##"<text x="{}" y="{}" text-anchor="middle">{}</text>"##,
            LEFT + (j as f64 + 0.5) * CELL_W,
            TOP + grid_h + 18.0,
            escape(&level.to_string())
        )
        .unwrap();
    }
    writeln!(
        s,
        r##"<text class="axis-label" x="{}" y="{}" text-anchor="middle">{}</text>"##,
        LEFT + grid_w / 2.0,
        TOP + grid_h + 42.0,
        escape(&cols.name)
    )
    .unwrap();
    writeln!(
        s,
        r##"<text class="axis-label" x="24" y="{y}" text-anchor="middle" transform="rotate(-90 24 {y})">{}</text>"##,
        escape(&rows.name),
        y = TOP + grid_h / 2.0
    )
    .unwrap();

    // Legend: top is the highest value, bottom the lowest.
    let steps = 10;
    let bar_h = grid_h.max(CELL_H) / steps as f64;
    for k in 0..steps {
        let t = 1.0 - (k as f64 + 0.5) / steps as f64;
        writeln!(
            s,
            r##"<rect class="legend" x="{legend_x}" y="{}" width="18" height="{bar_h}" fill="{}"/>"##,
            TOP + k as f64 * bar_h,
            hex(ramp(t))
        )
        .unwrap();
    }
    let (top_label, bottom_label) = if defined.is_empty() {
        ("n/a".to_string(), "n/a".to_string())
    } else {
        (format!("{hi:.3}"), format!("{lo:.3}"))
    };
    writeln!(
        s,
        r##"<text class="legend-max" x="{}" y="{}">{top_label}</text>"##,
        legend_x + 24.0,
        TOP + 10.0
    )
    .unwrap();
    writeln!(
        s,
        r##"<text class="legend-min" x="{}" y="{}">{bottom_label}</text>"##,
        legend_x + 24.0,
        TOP + steps as f64 * bar_h
    )
    .unwrap();
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}

/// Medians of all three metrics along a one-axis sweep, with dashed
/// reference lines at 1 (parity) and 0.8 (the four-fifths rule).
pub fn render_curve(r: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    if r.axes.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "a curve needs exactly one sweep axis, found {}",
            r.axes.len()
        )));
    }
    let axis = &r.axes[0];
    let n = axis.levels.len();
    let (plot_w, plot_h) = (70.0 * n.max(2) as f64, 260.0);
    let (left, top) = (70.0, 50.0);
    let y_max = r
        .cells
        .iter()
        .flat_map(|c| SvgMetric::ALL.map(|m| m.pick(&c.summary)))
        .flatten()
        .fold(1.2f64, f64::max);
    let px = |i: usize| left + (i as f64 + 0.5) * plot_w / n as f64;
    let py = |v: f64| top + plot_h * (1.0 - v / y_max);
    let width = left + plot_w + 190.0;
    let height = top + plot_h + 70.0;

    let mut s = String::new();
    writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"##
    )
    .unwrap();
    writeln!(
        s,
        r##"<text x="{}" y="24" font-size="15" text-anchor="middle">{} sweep ({} learner, {} repeats)</text>"##,
        left + plot_w / 2.0,
        r.kind.name(),
        r.learner,
        r.repeats
    )
    .unwrap();
    writeln!(
        s,
        r##"<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#000000"/>"##
    )
    .unwrap();
    for (v, label) in [(1.0, "1.0"), (0.8, "0.8")] {
        writeln!(
            s,
            r##"<line x1="{left}" x2="{}" y1="{y}" y2="{y}" stroke="#888888" stroke-dasharray="4 3"/>"##,
            left + plot_w,
            y = py(v)
        )
        .unwrap();
        writeln!(s, r##"<text x="{}" y="{}" text-anchor="end">{label}</text>"##, left - 6.0, py(v) + 4.0).unwrap();
    }
    writeln!(s, r##"<text x="{}" y="{}" text-anchor="end">0</text>"##, left - 6.0, py(0.0) + 4.0).unwrap();
    for (i, level) in axis.levels.iter().enumerate() {
        writeln!(
            s,
            r##"<text x="{}" y="{}" text-anchor="middle">{}</text>"##,
            px(i),
            top + plot_h + 18.0,
            escape(&level.to_string())
        )
        .unwrap();
    }
    writeln!(
        s,
        r##"<text class="axis-label" x="{}" y="{}" text-anchor="middle">{}</text>"##,
        left + plot_w / 2.0,
        top + plot_h + 42.0,
        escape(&axis.name)
    )
    .unwrap();

    for (k, m) in SvgMetric::ALL.into_iter().enumerate() {
        // Undefined medians break the line into separate segments.
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (i, c) in r.cells.iter().enumerate() {
            match m.pick(&c.summary) {
                Some(v) => segments.last_mut().unwrap().push((px(i), py(v))),
                None => segments.push(Vec::new()),
            }
        }
        for seg in segments.iter().filter(|seg| !seg.is_empty()) {
            let points: Vec<String> = seg.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            writeln!(
                s,
                r##"<polyline class="{}" points="{}" fill="none" stroke="{}" stroke-width="2"/>"##,
                m.name(),
                points.join(" "),
                m.colour()
            )
            .unwrap();
            for (x, y) in seg {
                writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{}"/>"##, m.colour()).unwrap();
            }
        }
        let ly = top + 16.0 + 20.0 * k as f64;
        let lx = left + plot_w + 20.0;
        writeln!(
            s,
            r##"<line x1="{lx}" x2="{}" y1="{ly}" y2="{ly}" stroke="{}" stroke-width="2"/>"##,
            lx + 24.0,
            m.colour()
        )
        .unwrap();
        writeln!(s, r##"<text x="{}" y="{}">{}</text>"##, lx + 30.0, ly + 4.0, m.name()).unwrap();
    }
    s.push_str("</svg>\n");
    std::fs::write(path, s)?;
    Ok(())
}
