use std::collections::BTreeMap;

use crate::experiment::RunRecord;

/// Fraction of successful records whose output arm is among the true top
/// `k`. NaN without successful records.
pub fn hit_rate_at_k(records: &[RunRecord], k: usize) -> f64 {
    mean(records.iter().filter(|r| r.is_ok()).map(|r| if r.output_rank < k { 1.0 } else { 0.0 }).collect())
}

/// Mean over successful records of `b_output / B`. NaN without successful
/// records.
pub fn budget_fraction_on_output(records: &[RunRecord]) -> f64 {
    mean(records.iter().filter(|r| r.is_ok()).map(RunRecord::output_fraction).collect())
}

/// Sums in sorted order so results do not depend on record order.
fn mean(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

fn mean_std(mut v: Vec<f64>) -> (f64, f64) {
    v.sort_by(f64::total_cmp);
    let m = mean(v.clone());
    if v.len() < 2 {
        return (m, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
    (m, (ss / (v.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Regret,
    /// Output arm within the true top `k`.
    HitRate(usize),
    /// Fraction of the budget on the output arm.
    Allocation,
}

impl Metric {
    pub fn label(&self) -> String {
        match self {
            Metric::Regret => "normalized regret".into(),
            Metric::HitRate(k) => format!("hit rate @ top {k}"),
            Metric::Allocation => "budget fraction on output arm".into(),
        }
    }

    /// Per-record value; `None` for failed runs and undefined regret.
    pub fn value(&self, r: &RunRecord) -> Option<f64> {
        if !r.is_ok() {
            return None;
        }
        match self {
            Metric::Regret => r.regret,
            Metric::HitRate(k) => Some(if r.output_rank < *k { 1.0 } else { 0.0 }),
            Metric::Allocation => Some(r.output_fraction()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub policy: String,
    pub budget: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub n: usize,
}

/// Mean and standard deviation of `metric` per (policy, budget), sorted by
/// policy name then budget.
pub fn summarize(records: &[RunRecord], metric: Metric) -> Vec<SeriesPoint> {
    let mut groups: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(v) = metric.value(r) {
            groups.entry((r.policy.clone(), r.budget)).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .map(|((policy, budget), v)| {
            let n = v.len();
            let (mean, std) = mean_std(v);
            SeriesPoint { policy, budget, mean, std, n }
        })
        .collect()
}
