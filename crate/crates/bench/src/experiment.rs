use std::path::{Path, PathBuf};
use std::time::Instant;

use bhpt::curve_env::{load_curves, normalized_regret, optimal_loss};
use bhpt::synthgen::sample_curveset;
use bhpt::{run_tuning, CurveSet, PolicySpec, SynthSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

/// Where the curve sets of an experiment come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Curve files, each one set.
    Files { paths: Vec<PathBuf> },
    /// One generated set per entry.
    Synthetic { sets: Vec<SynthSpec> },
    /// `count` generated sets sharing `base`, with seeds `base.seed`,
    /// `base.seed + 1`, ...
    SyntheticSweep { base: SynthSpec, count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub data: DataSource,
    pub budgets: Vec<usize>,
    pub policies: Vec<PolicySpec>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io { path: path.into(), source })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_sweep()?;
        let empty = match &self.data {
            DataSource::Files { paths } => paths.is_empty(),
            DataSource::Synthetic { sets } => sets.is_empty(),
            DataSource::SyntheticSweep { count, .. } => *count == 0,
        };
        if empty {
            return Err(BenchError::Config("data source has no sets".into()));
        }
        Ok(())
    }

    fn validate_sweep(&self) -> Result<()> {
        if self.budgets.is_empty() || self.policies.is_empty() || self.seeds.is_empty() {
            return Err(BenchError::Config("budgets, policies and seeds must be non-empty".into()));
        }
        if self.budgets.contains(&0) {
            return Err(BenchError::Config("budgets must be at least 1".into()));
        }
        for p in &self.policies {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LoadedSet {
    pub id: String,
    pub curves: CurveSet,
}

/// Loads or generates every set of `source`, in order.
pub fn load_sets(source: &DataSource) -> Result<Vec<LoadedSet>> {
    let synth = |s: &SynthSpec| -> Result<LoadedSet> {
        Ok(LoadedSet { id: format!("synth-{}", s.seed), curves: sample_curveset(s)? })
    };
    match source {
        DataSource::Files { paths } => paths
            .iter()
            .map(|p| {
                let id = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
                Ok(LoadedSet { id, curves: load_curves(p)? })
            })
            .collect(),
        DataSource::Synthetic { sets } => sets.par_iter().map(synth).collect(),
        DataSource::SyntheticSweep { base, count } => (0..*count as u64)
            .into_par_iter()
            .map(|i| synth(&SynthSpec { seed: base.seed + i, ..*base }))
            .collect(),
    }
}

/// One tuning run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub set_id: String,
    pub policy: String,
    pub budget: usize,
    pub seed: u64,
    pub output_loss: f64,
    pub output_arm: usize,
    /// Ground-truth rank (0 = best) of the output arm by best loss over the
    /// full recorded curves.
    pub output_rank: usize,
    /// Best loss attainable with known curves under this budget.
    pub optimum: f64,
    pub initial_loss: f64,
    /// `None` when the set has no spread between initial and optimal loss.
    pub regret: Option<f64>,
    pub allocation: Vec<usize>,
    pub wall_clock_ms: f64,
    /// Set when the run failed; the outcome fields are then meaningless.
    pub error: Option<String>,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    /// Fraction of the budget spent on the output arm.
    pub fn output_fraction(&self) -> f64 {
        self.allocation.get(self.output_arm).map_or(0.0, |&b| b as f64 / self.budget as f64)
    }
}

fn run_cell(set: &LoadedSet, policy: &PolicySpec, budget: usize, seed: u64) -> RunRecord {
    let start = Instant::now();
    let outcome = run_tuning(&set.curves, policy, budget, seed);
    let wall_clock_ms = start.elapsed().as_secs_f64() * 1e3;
    let initial_loss = set.curves.initial_loss();
    let optimum = optimal_loss(&set.curves, budget).map_or(f64::NAN, |(_, v)| v);
    let mut record = RunRecord {
        set_id: set.id.clone(),
        policy: policy.label(),
        budget,
        seed,
        output_loss: f64::NAN,
        output_arm: 0,
        output_rank: 0,
        optimum,
        initial_loss,
        regret: None,
        allocation: Vec::new(),
        wall_clock_ms,
        error: None,
    };
    match outcome {
        Ok(r) => {
            record.regret = normalized_regret(r.output_loss, optimum, initial_loss).ok();
            record.output_loss = r.output_loss;
            record.output_arm = r.output_arm;
            record.output_rank = set.curves.ground_truth_rank(r.output_arm);
            record.allocation = r.allocation;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Runs the full sweep. Cells run in parallel; records come back ordered by
/// (set, policy, budget, seed) in the order the spec lists them.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let sets = load_sets(&spec.data)?;
    run_on_sets(spec, &sets)
}

/// [`run_experiment`] on sets that are already loaded.
pub fn run_on_sets(spec: &ExperimentSpec, sets: &[LoadedSet]) -> Result<Vec<RunRecord>> {
    spec.validate_sweep()?;
    let mut cells = Vec::new();
    for s in 0..sets.len() {
        for p in 0..spec.policies.len() {
            for b in 0..spec.budgets.len() {
                for r in 0..spec.seeds.len() {
                    cells.push((s, p, b, r));
                }
            }
        }
    }
    let mut out: Vec<((usize, usize, usize, usize), RunRecord)> = cells
        .into_par_iter()
        .map(|c| {
            let (s, p, b, r) = c;
            (c, run_cell(&sets[s], &spec.policies[p], spec.budgets[b], spec.seeds[r]))
        })
        .collect();
    out.sort_by_key(|(c, _)| *c);
    Ok(out.into_iter().map(|(_, r)| r).collect())
}
