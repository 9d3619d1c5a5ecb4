//! CSV schemas for training metrics, evaluation traces and sweep
//! summaries, with writers and validating readers.
//!
//! All files are UTF-8, comma-separated, with a header row. Lines starting
//! with `#` are comments; evaluation traces end with a `# key = value`
//! summary footer.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use lyapgdm_core::env::{EnvConfig, SlotInfo};
use lyapgdm_core::trainer::EpisodeMetrics;

use crate::error::{HarnessError, Result};

pub const METRICS_HEADER: [&str; 10] = [
    "episode",
    "reward_mean",
    "dpp_mean",
    "rate_mean_mbps",
    "energy_mean_j",
    "queue_final",
    "actor_loss",
    "critic_loss",
    "steps",
    "wall_ms",
];

pub const SWEEP_HEADER: [&str; 9] = [
    "param",
    "value",
    "agent",
    "episodes",
    "mean_rate_mbps",
    "mean_energy_j",
    "final_queue",
    "max_final_queue",
    "reward_mean",
];

/// Trace header for `n` devices.
pub fn trace_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = ["episode", "t", "x", "y", "vx", "vy"].map(String::from).to_vec();
    h.extend((1..=n).map(|i| format!("b{i}")));
    h.extend(["rate_mbps", "energy_j", "queue", "reward"].map(String::from));
    h
}

/// One evaluation slot. `t` counts completed slots, so the last row of an
/// episode has `t = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub episode: usize,
    pub t: usize,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ratios: Vec<f64>,
    pub rate_mbps: f64,
    pub energy_j: f64,
    pub queue: f64,
    pub reward: f64,
}

impl TraceRow {
    pub fn from_slot(episode: usize, s: &SlotInfo) -> Self {
        Self {
            episode,
            t: s.t + 1,
            x: s.position.x,
            y: s.position.y,
            vx: s.velocity.x,
            vy: s.velocity.y,
            ratios: s.bandwidth_ratios.clone(),
            rate_mbps: s.sum_rate_mbps,
            energy_j: s.energy_j,
            queue: s.queue,
            reward: s.reward,
        }
    }
}

/// Aggregate of an evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub agent: String,
    pub episodes: usize,
    pub mean_rate_mbps: f64,
    /// Mean per-slot energy over all episodes: the final value of the
    /// cumulative moving average.
    pub mean_energy_j: f64,
    /// Final queue value averaged over episodes.
    pub final_queue: f64,
    pub max_final_queue: f64,
    pub reward_mean: f64,
}

/// Row of a sweep file.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub summary: EvalSummary,
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer cannot fail")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

fn csv_err(path: &Path, row: usize) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |e| HarnessError::Csv {
        path: path.to_path_buf(),
        row,
        message: e.to_string(),
    }
}

pub fn metrics_csv(rows: &[EpisodeMetrics]) -> Vec<u8> {
    let mut w = writer();
    w.write_record(METRICS_HEADER).expect("in-memory");
    for m in rows {
        w.write_record([
            m.episode.to_string(),
            m.reward_mean.to_string(),
            m.dpp_mean.to_string(),
            m.rate_mean_mbps.to_string(),
            m.energy_mean_j.to_string(),
            m.queue_final.to_string(),
            m.actor_loss.to_string(),
            m.critic_loss.to_string(),
            m.steps.to_string(),
            m.wall_ms.to_string(),
        ])
        .expect("in-memory");
    }
    finish(w)
}

pub fn write_metrics(path: &Path, rows: &[EpisodeMetrics]) -> Result<()> {
    write_file(path, &metrics_csv(rows))
}

/// Trace body plus summary footer. The footer also records the scenario
/// limits the reader checks rows against.
pub fn trace_csv(rows: &[TraceRow], summary: &EvalSummary, env: &EnvConfig) -> Vec<u8> {
    let mut w = writer();
    w.write_record(trace_header(env.num_devices())).expect("in-memory");
    for r in rows {
        let mut rec = vec![
            r.episode.to_string(),
            r.t.to_string(),
            r.x.to_string(),
            r.y.to_string(),
            r.vx.to_string(),
            r.vy.to_string(),
        ];
        rec.extend(r.ratios.iter().map(|b| b.to_string()));
        rec.extend([r.rate_mbps, r.energy_j, r.queue, r.reward].map(|v| v.to_string()));
        w.write_record(&rec).expect("in-memory");
    }
    let mut out = finish(w);
    let footer = [
        ("agent", summary.agent.clone()),
        ("episodes", summary.episodes.to_string()),
        ("mean_rate_mbps", summary.mean_rate_mbps.to_string()),
        ("mean_energy_j", summary.mean_energy_j.to_string()),
        ("final_queue", summary.final_queue.to_string()),
        ("max_final_queue", summary.max_final_queue.to_string()),
        ("reward_mean", summary.reward_mean.to_string()),
        ("energy_budget", env.energy_budget.to_string()),
        ("horizon", env.horizon.to_string()),
        ("v_max", env.v_max.to_string()),
        ("area_x", env.area_x.to_string()),
        ("area_y", env.area_y.to_string()),
    ];
    for (k, v) in footer {
        out.extend_from_slice(format!("# {k} = {v}\n").as_bytes());
    }
    out
}

pub fn write_trace(path: &Path, rows: &[TraceRow], summary: &EvalSummary, env: &EnvConfig) -> Result<()> {
    write_file(path, &trace_csv(rows, summary, env))
}

pub fn sweep_csv(rows: &[SweepRow]) -> Vec<u8> {
    let mut w = writer();
    w.write_record(SWEEP_HEADER).expect("in-memory");
    for r in rows {
        let s = &r.summary;
        w.write_record([
            r.param.clone(),
            r.value.to_string(),
            s.agent.clone(),
            s.episodes.to_string(),
            s.mean_rate_mbps.to_string(),
            s.mean_energy_j.to_string(),
            s.final_queue.to_string(),
            s.max_final_queue.to_string(),
            s.reward_mean.to_string(),
        ])
        .expect("in-memory");
    }
    finish(w)
}

pub fn write_sweep(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_file(path, &sweep_csv(rows))
}

/// Parsed file: header, data records (with 1-based file line numbers) and
/// `# key = value` comment lines.
struct Table {
    header: Vec<String>,
    records: Vec<(usize, csv::StringRecord)>,
    footer: BTreeMap<String, String>,
}

fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr.headers().map_err(csv_err(path, 1))?.iter().map(String::from).collect();
    if header.iter().all(|h| h.is_empty()) {
        return Err(HarnessError::Csv {
            path: path.to_path_buf(),
            row: 1,
            message: "missing header".into(),
        });
    }
    let mut records = Vec::new();
    for rec in rdr.records() {
        let line = rec.as_ref().ok().and_then(|r| r.position()).map_or(0, |p| p.line() as usize);
        records.push((line, rec.map_err(csv_err(path, line))?));
    }
    let footer = text
        .lines()
        .filter_map(|l| l.strip_prefix('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    Ok(Table {
        header,
        records,
        footer,
    })
}

/// Field accessor that reports the file row on failure.
struct Fields<'a> {
    path: &'a Path,
    line: usize,
    rec: &'a csv::StringRecord,
}

impl Fields<'_> {
    fn fail(&self, message: String) -> HarnessError {
        HarnessError::Csv {
            path: self.path.to_path_buf(),
            row: self.line,
            message,
        }
    }

    fn str(&self, i: usize) -> Result<&str> {
        self.rec.get(i).ok_or_else(|| self.fail(format!("missing column {}", i + 1)))
    }

    fn real(&self, i: usize) -> Result<f64> {
        let s = self.str(i)?;
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.fail(format!("column {}: {s:?} is not a finite number", i + 1)))
    }

    fn int(&self, i: usize) -> Result<usize> {
        let s = self.str(i)?;
        s.parse().map_err(|_| self.fail(format!("column {}: {s:?} is not an integer", i + 1)))
    }
}

fn expect_header(path: &Path, found: &[String], expected: &[String]) -> Result<()> {
    if found != expected {
        return Err(HarnessError::Csv {
            path: path.to_path_buf(),
            row: 1,
            message: format!("header {found:?} does not match {expected:?}"),
        });
    }
    Ok(())
}

fn strings(h: &[&str]) -> Vec<String> {
    h.iter().map(|s| s.to_string()).collect()
}

pub fn read_metrics(path: &Path) -> Result<Vec<EpisodeMetrics>> {
    let t = read_table(path)?;
    expect_header(path, &t.header, &strings(&METRICS_HEADER))?;
    let mut out: Vec<EpisodeMetrics> = Vec::with_capacity(t.records.len());
    for (line, rec) in &t.records {
        let f = Fields { path, line: *line, rec };
        let m = EpisodeMetrics {
            episode: f.int(0)?,
            reward_mean: f.real(1)?,
            dpp_mean: f.real(2)?,
            rate_mean_mbps: f.real(3)?,
            energy_mean_j: f.real(4)?,
            queue_final: f.real(5)?,
            actor_loss: f.real(6)?,
            critic_loss: f.real(7)?,
            steps: f.int(8)?,
            wall_ms: f.int(9)? as u64,
        };
        if m.episode != out.len() {
            return Err(f.fail(format!("episode {} out of sequence", m.episode)));
        }
        if m.queue_final < 0.0 || m.energy_mean_j < 0.0 || m.rate_mean_mbps < 0.0 {
            return Err(f.fail("negative rate, energy or queue".into()));
        }
        if (m.reward_mean + m.dpp_mean).abs() > 1e-9 * m.dpp_mean.abs().max(1.0) {
            return Err(f.fail("reward_mean is not -dpp_mean".into()));
        }
        if out.last().is_some_and(|p| p.steps > m.steps) {
            return Err(f.fail("steps decreased".into()));
        }
        out.push(m);
    }
    Ok(out)
}

/// Evaluation trace with its footer values.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub footer: BTreeMap<String, String>,
}

impl Trace {
    pub fn footer_real(&self, key: &str) -> Option<f64> {
        self.footer.get(key).and_then(|v| v.parse().ok())
    }

    /// Per-slot energy averaged across episodes, then cumulatively
    /// averaged over time: point `i` is the mean energy of slots `1..=i+1`.
    pub fn energy_moving_average(&self) -> Vec<f64> {
        let horizon = self.rows.iter().map(|r| r.t).max().unwrap_or(0);
        let mut sum = vec![0.0; horizon];
        let mut n = vec![0usize; horizon];
        for r in &self.rows {
            sum[r.t - 1] += r.energy_j;
            n[r.t - 1] += 1;
        }
        let mut acc = 0.0;
        sum.iter()
            .zip(&n)
            .enumerate()
            .map(|(i, (s, &c))| {
                acc += s / c.max(1) as f64;
                acc / (i + 1) as f64
            })
            .collect()
    }
}

/// Reads a trace and checks every row against the environment invariants
/// recorded in the footer.
pub fn read_trace(path: &Path) -> Result<Trace> {
    let t = read_table(path)?;
    let n = t.header.len().saturating_sub(10);
    expect_header(path, &t.header, &trace_header(n))?;
    if n == 0 {
        return Err(HarnessError::Csv {
            path: path.to_path_buf(),
            row: 1,
            message: "no bandwidth columns".into(),
        });
    }
    let limit = |k: &str| t.footer.get(k).and_then(|v| v.parse::<f64>().ok());
    let (v_max, area_x, area_y, horizon) = (limit("v_max"), limit("area_x"), limit("area_y"), limit("horizon"));
    let mut rows = Vec::with_capacity(t.records.len());
    for (line, rec) in &t.records {
        let f = Fields { path, line: *line, rec };
        if rec.len() != n + 10 {
            return Err(f.fail(format!("expected {} columns, found {}", n + 10, rec.len())));
        }
        let ratios = (0..n).map(|i| f.real(6 + i)).collect::<Result<Vec<_>>>()?;
        let row = TraceRow {
            episode: f.int(0)?,
            t: f.int(1)?,
            x: f.real(2)?,
            y: f.real(3)?,
            vx: f.real(4)?,
            vy: f.real(5)?,
            ratios,
            rate_mbps: f.real(6 + n)?,
            energy_j: f.real(7 + n)?,
            queue: f.real(8 + n)?,
            reward: f.real(9 + n)?,
        };
        if row.t == 0 || horizon.is_some_and(|h| row.t as f64 > h) {
            return Err(f.fail(format!("slot {} outside the horizon", row.t)));
        }
        if row.ratios.iter().any(|&b| b < 0.0) || (row.ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(f.fail("bandwidth ratios are not a distribution".into()));
        }
        if row.rate_mbps < 0.0 || row.energy_j <= 0.0 || row.queue < 0.0 {
            return Err(f.fail("negative rate, non-positive energy or negative queue".into()));
        }
        if v_max.is_some_and(|v| row.vx.hypot(row.vy) > v * (1.0 + 1e-12)) {
            return Err(f.fail("speed exceeds v_max".into()));
        }
        let outside = |p: f64, hi: Option<f64>| p < 0.0 || hi.is_some_and(|h| p > h);
        if outside(row.x, area_x) || outside(row.y, area_y) {
            return Err(f.fail("position outside the area".into()));
        }
        rows.push(row);
    }
    Ok(Trace { rows, footer: t.footer })
}

pub fn read_sweep(path: &Path) -> Result<Vec<SweepRow>> {
    let t = read_table(path)?;
    expect_header(path, &t.header, &strings(&SWEEP_HEADER))?;
    t.records
        .iter()
        .map(|(line, rec)| {
            let f = Fields { path, line: *line, rec };
            Ok(SweepRow {
                param: f.str(0)?.to_string(),
                value: f.real(1)?,
                summary: EvalSummary {
                    agent: f.str(2)?.to_string(),
                    episodes: f.int(3)?,
                    mean_rate_mbps: f.real(4)?,
                    mean_energy_j: f.real(5)?,
                    final_queue: f.real(6)?,
                    max_final_queue: f.real(7)?,
                    reward_mean: f.real(8)?,
                },
            })
        })
        .collect()
}
