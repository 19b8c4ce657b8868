use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bhpt::synthgen::sample_curveset;
use bhpt::SynthSpec;
use bhpt_bench::{
    budget_fraction_on_output, emit_csv, emit_plot, emit_timing, hit_rate_at_k, read_csv, run_experiment, summarize,
    ExperimentSpec, Metric, OUTPUT_DIR_ENV,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "bhpt", version, about = "Budgeted hyper-parameter tuning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep and write records, timings and plots.
    Run {
        /// Experiment config (TOML).
        #[arg(long)]
        spec: PathBuf,
        /// Output directory; overrides the config's `output_dir`.
        #[arg(long, env = OUTPUT_DIR_ENV)]
        out: Option<PathBuf>,
        /// Top-k used for the hit-rate plot.
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Generate synthetic curve sets as curve files.
    Gen {
        /// Generator config (TOML): synthetic-set fields plus an optional
        /// `count` of consecutive seeds.
        #[arg(long)]
        synth: PathBuf,
        #[arg(long, env = OUTPUT_DIR_ENV)]
        out: PathBuf,
    },
    /// Plot one metric from a records file.
    Report {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// SVG file to write.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Regret,
    Hitrate,
    Allocation,
}

impl MetricArg {
    fn metric(self, k: usize) -> Metric {
        match self {
            MetricArg::Regret => Metric::Regret,
            MetricArg::Hitrate => Metric::HitRate(k),
            MetricArg::Allocation => Metric::Allocation,
        }
    }
}

#[derive(Deserialize)]
struct GenConfig {
    #[serde(default = "one")]
    count: u64,
    #[serde(flatten)]
    spec: SynthSpec,
}

fn one() -> u64 {
    1
}

fn print_table(records: &[bhpt_bench::RunRecord], metric: Metric) {
    println!("{}", metric.label());
    println!("{:<16} {:>8} {:>10} {:>10} {:>6}", "policy", "budget", "mean", "std", "n");
    for p in summarize(records, metric) {
        println!("{:<16} {:>8} {:>10.4} {:>10.4} {:>6}", p.policy, p.budget, p.mean, p.std, p.n);
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { spec, out, k } => {
            let spec = ExperimentSpec::load(&spec)?;
            let dir = out.or_else(|| spec.output_dir.clone()).unwrap_or_else(|| PathBuf::from("bhpt-out"));
            ensure_dir(&dir)?;
            let records = run_experiment(&spec)?;
            let failed = records.iter().filter(|r| !r.is_ok()).count();
            emit_csv(&records, &dir.join("records.csv"))?;
            emit_timing(&records, &dir.join("timing.csv"))?;
            emit_plot(&records, Metric::Regret, &dir.join("regret.svg"))?;
            emit_plot(&records, Metric::HitRate(k), &dir.join("hitrate.svg"))?;
            emit_plot(&records, Metric::Allocation, &dir.join("allocation.svg"))?;
            print_table(&records, Metric::Regret);
            println!("{} runs ({failed} failed) written to {}", records.len(), dir.display());
        }
        Command::Gen { synth, out } => {
            let text = std::fs::read_to_string(&synth).with_context(|| format!("reading {}", synth.display()))?;
            let cfg: GenConfig = toml::from_str(&text).with_context(|| format!("parsing {}", synth.display()))?;
            if cfg.count == 0 {
                bail!("count must be at least 1");
            }
            ensure_dir(&out)?;
            for i in 0..cfg.count {
                let spec = SynthSpec { seed: cfg.spec.seed + i, ..cfg.spec };
                let path = out.join(format!("synth-{}.csv", spec.seed));
                sample_curveset(&spec)?.save(&path)?;
                println!("{}", path.display());
            }
        }
        Command::Report { records, metric, k, out } => {
            let recs = read_csv(&records)?;
            if recs.is_empty() {
                bail!("{} has no records", records.display());
            }
            let metric = metric.metric(k);
            emit_plot(&recs, metric, &out)?;
            print_table(&recs, metric);
            println!(
                "overall: hit rate @ top {k} = {:.4}, budget fraction on output = {:.4}",
                hit_rate_at_k(&recs, k),
                budget_fraction_on_output(&recs)
            );
        }
    }
    Ok(())
}
