//! Self-contained SVG line charts. Output is a pure function of the input
//! files, so figures can be diffed.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{HarnessError, Result};
use crate::records;

pub const MOVING_AVERAGE_WINDOW: usize = 50;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    TrainingCurve,
    RateVsBandwidth,
    EnergyVsTime,
}

impl FromStr for PlotKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "training-curve" => Ok(PlotKind::TrainingCurve),
            "rate-vs-bandwidth" => Ok(PlotKind::RateVsBandwidth),
            "energy-vs-time" => Ok(PlotKind::EnergyVsTime),
            other => Err(HarnessError::Usage(format!(
                "unknown plot kind {other:?}; expected training-curve, rate-vs-bandwidth or energy-vs-time"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: usize,
    /// Drawn thin and translucent underneath the smoothed curves.
    pub faint: bool,
    pub markers: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference lines `(y, label)`.
    pub references: Vec<(f64, String)>,
}

/// Trailing mean over at most `window` points.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        sum += x;
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

/// "1, 2, 2.5, 5, 10" tick spacing covering `[lo, hi]` with four to eight ticks.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 8.0;
    let exp = raw.log10().floor() as i32;
    let mag = 10f64.powi(exp);
    let m = [1.0, 2.0, 2.5, 5.0, 10.0]
        .into_iter()
        .find(|m| m * mag >= raw)
        .unwrap_or(10.0);
    let step = m * mag;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    // i·m is exact; dividing by an exact power of ten rounds once
    let at = |i: i64| {
        if exp < 0 {
            i as f64 * m / 10f64.powi(-exp)
        } else {
            i as f64 * m * mag
        }
    };
    (first..=last).map(at).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

impl Chart {
    fn bounds(&self) -> (f64, f64, f64, f64) {
        let xs = self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| p.1))
            .chain(self.references.iter().map(|r| r.0));
        let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        let (x0, x1) = if x0.is_finite() { (x0, x1) } else { (0.0, 1.0) };
        let (y0, y1) = if y0.is_finite() { (y0, y1) } else { (0.0, 1.0) };
        let pad = |a: f64, b: f64| if b - a < 1e-12 { (a - 0.5, b + 0.5) } else { (a, b) };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        let margin = 0.05 * (y1 - y0);
        (x0, x1, y0 - margin, y1 + margin)
    }

    pub fn to_svg(&self) -> String {
        let (x0, x1, y0, y1) = self.bounds();
        let pw = WIDTH - MARGIN_L - MARGIN_R;
        let ph = HEIGHT - MARGIN_T - MARGIN_B;
        let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| MARGIN_T + (y1 - y) / (y1 - y0) * ph;
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            MARGIN_L + pw / 2.0,
            escape(&self.title)
        );
        for t in ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(
                s,
                r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#e5e5e5"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                MARGIN_T,
                MARGIN_T + ph,
                MARGIN_T + ph + 16.0,
                fmt_tick(t)
            );
        }
        for t in ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(
                s,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e5e5e5"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                MARGIN_L,
                MARGIN_L + pw,
                MARGIN_L - 6.0,
                y + 4.0,
                fmt_tick(t)
            );
        }
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            MARGIN_L + pw / 2.0,
            HEIGHT - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            MARGIN_T + ph / 2.0,
            MARGIN_T + ph / 2.0,
            escape(&self.y_label)
        );
        for (y, label) in &self.references {
            let _ = writeln!(
                s,
                r##"<line class="reference" data-y="{}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#444" stroke-dasharray="6 4"/><text x="{:.2}" y="{:.2}" fill="#444">{}</text>"##,
                fmt_tick(*y),
                MARGIN_L,
                sy(*y),
                MARGIN_L + pw,
                sy(*y),
                MARGIN_L + 4.0,
                sy(*y) - 4.0,
                escape(label)
            );
        }
        for series in &self.series {
            let color = PALETTE[series.color % PALETTE.len()];
            let pts: Vec<String> = series.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let (width, opacity) = if series.faint { (1.0, 0.3) } else { (2.0, 1.0) };
            let _ = writeln!(
                s,
                r#"<polyline class="series" data-label="{}" fill="none" stroke="{color}" stroke-width="{width}" stroke-opacity="{opacity}" points="{}"/>"#,
                escape(&series.label),
                pts.join(" ")
            );
            if series.markers {
                for p in &pts {
                    let (x, y) = p.split_once(',').expect("formatted pair");
                    let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
                }
            }
        }
        let lx = MARGIN_L + pw + 12.0;
        for (i, series) in self.series.iter().enumerate() {
            let y = MARGIN_T + 10.0 + 18.0 * i as f64;
            let color = PALETTE[series.color % PALETTE.len()];
            let opacity = if series.faint { 0.3 } else { 1.0 };
            let _ = writeln!(
                s,
                r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2" stroke-opacity="{opacity}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                lx + 20.0,
                lx + 26.0,
                y + 4.0,
                escape(&series.label)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

/// Legend label: the parent directory for generic file names.
fn label_for(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("series");
    let generic = matches!(stem, "metrics" | "trace" | "sweep");
    match (generic, path.parent().and_then(|p| p.file_name()).and_then(|s| s.to_str())) {
        (true, Some(dir)) => dir.to_string(),
        _ => stem.to_string(),
    }
}

pub fn training_curve(paths: &[&Path]) -> Result<Chart> {
    let mut series = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let rows = records::read_metrics(path)?;
        let rewards: Vec<f64> = rows.iter().map(|m| m.reward_mean).collect();
        let xs = rows.iter().map(|m| m.episode as f64);
        let label = label_for(path);
        series.push(Series {
            label: format!("{label} (raw)"),
            points: xs.clone().zip(rewards.iter().cloned()).collect(),
            color: i,
            faint: true,
            markers: false,
        });
        series.push(Series {
            label: format!("{label} ({MOVING_AVERAGE_WINDOW}-ep avg)"),
            points: xs.zip(moving_average(&rewards, MOVING_AVERAGE_WINDOW)).collect(),
            color: i,
            faint: false,
            markers: false,
        });
    }
    Ok(Chart {
        title: "Training curve".into(),
        x_label: "Episode".into(),
        y_label: "Average reward".into(),
        series,
        references: Vec::new(),
    })
}

pub fn rate_vs_bandwidth(paths: &[&Path]) -> Result<Chart> {
    let mut series = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let rows = records::read_sweep(path)?;
        let scale = |r: &records::SweepRow| if r.param == "env.bandwidth" { r.value / 1e6 } else { r.value };
        let agent = rows.first().map_or("", |r| r.summary.agent.as_str());
        series.push(Series {
            label: if agent.is_empty() { label_for(path) } else { format!("{} ({agent})", label_for(path)) },
            points: rows.iter().map(|r| (scale(r), r.summary.mean_rate_mbps)).collect(),
            color: i,
            faint: false,
            markers: true,
        });
    }
    Ok(Chart {
        title: "Average transmission rate versus bandwidth".into(),
        x_label: "Bandwidth (MHz)".into(),
        y_label: "Average sum rate (Mbps)".into(),
        series,
        references: Vec::new(),
    })
}

pub fn energy_vs_time(paths: &[&Path]) -> Result<Chart> {
    let mut series = Vec::new();
    let mut budget = None;
    for (i, path) in paths.iter().enumerate() {
        let trace = records::read_trace(path)?;
        budget = budget.or(trace.footer_real("energy_budget"));
        let ma = trace.energy_moving_average();
        let agent = trace.footer.get("agent").cloned().unwrap_or_default();
        series.push(Series {
            label: if agent.is_empty() { label_for(path) } else { format!("{} ({agent})", label_for(path)) },
            points: ma.iter().enumerate().map(|(t, &e)| ((t + 1) as f64, e)).collect(),
            color: i,
            faint: false,
            markers: false,
        });
    }
    let references = budget
        .map(|b| vec![(b, format!("budget {} J", fmt_tick(b)))])
        .unwrap_or_default();
    Ok(Chart {
        title: "Propulsion energy versus time (moving average)".into(),
        x_label: "Time slot".into(),
        y_label: "Energy per slot (J)".into(),
        series,
        references,
    })
}

pub fn emit_plot(paths: &[&Path], kind: PlotKind, out: &Path) -> Result<()> {
    if paths.is_empty() {
        return Err(HarnessError::Usage("plot needs at least one CSV".into()));
    }
    let chart = match kind {
        PlotKind::TrainingCurve => training_curve(paths)?,
        PlotKind::RateVsBandwidth => rate_vs_bandwidth(paths)?,
        PlotKind::EnergyVsTime => energy_vs_time(paths)?,
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(out, chart.to_svg()).map_err(|e| HarnessError::io(out, e))
}
