use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::experiment::RunRecord;
use crate::metrics::{summarize, Metric, SeriesPoint};

const HEADER: [&str; 12] = [
    "set_id",
    "policy",
    "budget",
    "seed",
    "output_loss",
    "output_arm",
    "output_rank",
    "optimum",
    "initial_loss",
    "regret",
    "allocation",
    "error",
];

#[derive(Serialize, Deserialize)]
struct Row {
    set_id: String,
    policy: String,
    budget: usize,
    seed: u64,
    output_loss: f64,
    output_arm: usize,
    output_rank: usize,
    optimum: f64,
    initial_loss: f64,
    regret: Option<f64>,
    /// Epochs per arm, `;`-separated.
    allocation: String,
    error: Option<String>,
}

impl From<&RunRecord> for Row {
    fn from(r: &RunRecord) -> Self {
        Row {
            set_id: r.set_id.clone(),
            policy: r.policy.clone(),
            budget: r.budget,
            seed: r.seed,
            output_loss: r.output_loss,
            output_arm: r.output_arm,
            output_rank: r.output_rank,
            optimum: r.optimum,
            initial_loss: r.initial_loss,
            regret: r.regret,
            allocation: r.allocation.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
            error: r.error.clone(),
        }
    }
}

impl TryFrom<Row> for RunRecord {
    type Error = BenchError;

    fn try_from(row: Row) -> Result<Self> {
        let allocation = if row.allocation.is_empty() {
            Vec::new()
        } else {
            row.allocation
                .split(';')
                .map(|s| s.parse().map_err(|_| BenchError::Record(format!("bad allocation {:?}", row.allocation))))
                .collect::<Result<_>>()?
        };
        Ok(RunRecord {
            set_id: row.set_id,
            policy: row.policy,
            budget: row.budget,
            seed: row.seed,
            output_loss: row.output_loss,
            output_arm: row.output_arm,
            output_rank: row.output_rank,
            optimum: row.optimum,
            initial_loss: row.initial_loss,
            regret: row.regret,
            allocation,
            wall_clock_ms: 0.0,
            error: row.error,
        })
    }
}

/// Writes one row per record. Wall-clock time is left out so that reruns
/// produce identical bytes; see [`emit_timing`].
pub fn write_csv<W: Write>(records: &[RunRecord], writer: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(HEADER)?;
    for r in records {
        w.serialize(Row::from(r))?;
    }
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| BenchError::Io { path: path.into(), source })
}

pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    write_csv(records, create(path)?).map_err(|source| BenchError::Csv { path: path.into(), source })
}

/// Reads records written by [`emit_csv`]; wall-clock times come back as 0.
pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let csv_err = |source| BenchError::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize::<Row>().map(|row| RunRecord::try_from(row.map_err(csv_err)?)).collect()
}

/// Per-run wall-clock times.
pub fn emit_timing(records: &[RunRecord], path: &Path) -> Result<()> {
    let csv_err = |source| BenchError::Csv { path: path.into(), source };
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["set_id", "policy", "budget", "seed", "wall_clock_ms"]).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.set_id.clone(),
            r.policy.clone(),
            r.budget.to_string(),
            r.seed.to_string(),
            format!("{:.3}", r.wall_clock_ms),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| BenchError::Io { path: path.into(), source })
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders `metric` against budget as a standalone SVG document: one line
/// per policy with a ±1 standard deviation band, plus the plotted numbers in
/// a comment block.
pub fn render_plot(records: &[RunRecord], metric: Metric) -> String {
    let points = summarize(records, metric);
    let mut policies: Vec<&str> = points.iter().map(|p| p.policy.as_str()).collect();
    policies.dedup();

    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for p in &points {
        x0 = x0.min(p.budget as f64);
        x1 = x1.max(p.budget as f64);
        y0 = y0.min(p.mean - p.std);
        y1 = y1.max(p.mean + p.std);
    }
    if points.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        (x0, x1) = (x0 - 1.0, x1 + 1.0);
    }
    if y1 <= y0 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, "<!-- data\npolicy,budget,mean,std,n");
    for p in &points {
        let _ = writeln!(s, "{},{},{},{},{}", p.policy.replace("--", "- -"), p.budget, p.mean, p.std, p.n);
    }
    let _ = writeln!(s, "-->");
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>"##
    );
    for i in 0..=4 {
        let y = y0 + (y1 - y0) * i as f64 / 4.0;
        let py = sy(y);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{y:.3}</text>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            py + 4.0
        );
    }
    let mut budgets: Vec<usize> = points.iter().map(|p| p.budget).collect();
    budgets.sort_unstable();
    budgets.dedup();
    for b in &budgets {
        let px = sx(*b as f64);
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{b}</text>"#,
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">budget</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + plot_h / 2.0,
        escape(&metric.label())
    );

    for (i, policy) in policies.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let series: Vec<&SeriesPoint> = points.iter().filter(|p| p.policy == *policy).collect();
        let upper: Vec<String> =
            series.iter().map(|p| format!("{:.2},{:.2}", sx(p.budget as f64), sy(p.mean + p.std))).collect();
        let lower: Vec<String> =
            series.iter().rev().map(|p| format!("{:.2},{:.2}", sx(p.budget as f64), sy(p.mean - p.std))).collect();
        let _ = writeln!(
            s,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> =
            series.iter().map(|p| format!("{:.2},{:.2}", sx(p.budget as f64), sy(p.mean))).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        for p in &series {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                sx(p.budget as f64),
                sy(p.mean)
            );
        }
        let ly = TOP + 14.0 + 20.0 * i as f64;
        let lx = LEFT + plot_w + 14.0;
        let _ = writeln!(
            s,
            r#"<g class="legend"><line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(policy)
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_plot(records: &[RunRecord], metric: Metric, path: &Path) -> Result<()> {
    std::fs::write(path, render_plot(records, metric)).map_err(|source| BenchError::Io { path: path.into(), source })
}
