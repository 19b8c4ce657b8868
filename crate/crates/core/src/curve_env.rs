//! Replay of pre-recorded learning curves.
//!
//! A [`CurveSet`] holds the full loss sequence of every configuration. It is
//! fixed before tuning starts, so a [`ReplayEnv`] acts as an oblivious
//! adversary: pulling an arm simply reveals the next recorded loss.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::GpHypers;

/// The learning curves of `K` configurations, one loss per budget unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSet {
    curves: Vec<Vec<f64>>,
    config_ids: Vec<u64>,
    features: Option<Vec<Vec<f64>>>,
    initial_loss: f64,
    normalized: bool,
    /// Kernel parameters the set was generated with, when known.
    #[serde(default)]
    reference_hypers: Option<GpHypers>,
}

impl CurveSet {
    /// Builds a set with config ids `0..K`. The initial loss is the largest
    /// first-epoch loss over all arms.
    pub fn new(curves: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (0..curves.len() as u64).collect();
        Self::with_ids(curves, ids, None)
    }

    pub fn with_ids(
        curves: Vec<Vec<f64>>,
        config_ids: Vec<u64>,
        features: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::EmptyCurveSet);
        }
        if config_ids.len() != curves.len() {
            return Err(Error::InvalidParameter(format!(
                "{} config ids for {} curves",
                config_ids.len(),
                curves.len()
            )));
        }
        for (k, c) in curves.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::InvalidParameter(format!("curve {k} is empty")));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "curve {k} has a non-finite loss"
                )));
            }
        }
        if let Some(f) = &features {
            if f.len() != curves.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} feature vectors for {} curves",
                    f.len(),
                    curves.len()
                )));
            }
        }
        let initial_loss = curves
            .iter()
            .map(|c| c[0])
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(CurveSet {
            curves,
            config_ids,
            features,
            initial_loss,
            normalized: false,
            reference_hypers: None,
        })
    }

    /// Overrides the recorded initial loss.
    pub fn with_initial_loss(mut self, initial_loss: f64) -> Self {
        self.initial_loss = initial_loss;
        self
    }

    /// Flags the set as normalized. Fails unless every loss lies in `[0, 1)`.
    pub fn mark_normalized(mut self) -> Result<Self> {
        let ok = self
            .curves
            .iter()
            .flatten()
            .all(|&v| (0.0..1.0).contains(&v));
        if !ok {
            return Err(Error::InvalidParameter(
                "normalized sets need every loss in [0, 1)".into(),
            ));
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn with_reference_hypers(mut self, hypers: GpHypers) -> Self {
        self.reference_hypers = Some(hypers);
        self
    }

    pub fn num_arms(&self) -> usize {
        self.curves.len()
    }

    pub fn curve(&self, arm: usize) -> &[f64] {
        &self.curves[arm]
    }

    pub fn curves(&self) -> &[Vec<f64>] {
        &self.curves
    }

    /// Recorded length of arm `arm`'s curve.
    pub fn max_epochs(&self, arm: usize) -> usize {
        self.curves[arm].len()
    }

    pub fn total_epochs(&self) -> usize {
        self.curves.iter().map(Vec::len).sum()
    }

    pub fn config_ids(&self) -> &[u64] {
        &self.config_ids
    }

    pub fn features(&self) -> Option<&[Vec<f64>]> {
        self.features.as_deref()
    }

    pub fn initial_loss(&self) -> f64 {
        self.initial_loss
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn reference_hypers(&self) -> Option<&GpHypers> {
        self.reference_hypers.as_ref()
    }

    /// Best loss of `arm` within its first `epochs` epochs.
    pub fn best_within(&self, arm: usize, epochs: usize) -> f64 {
        let c = &self.curves[arm];
        c[..epochs.min(c.len())]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Rank (0 = best) of `arm` when arms are ordered by their best loss over
    /// the full recorded horizon. Ties share the lowest index order.
    pub fn ground_truth_rank(&self, arm: usize) -> usize {
        let target = self.best_within(arm, usize::MAX);
        (0..self.num_arms())
            .filter(|&k| {
                let v = self.best_within(k, usize::MAX);
                v < target || (v == target && k < arm)
            })
            .count()
    }

    /// Writes the set in the curve file format.
    pub fn write_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        let io = |e: std::io::Error| Error::Io {
            path: "<writer>".into(),
            source: e,
        };
        writeln!(
            w,
            "# initial_loss={} normalized={}",
            self.initial_loss, self.normalized
        )
        .map_err(io)?;
        let dims = self
            .features
            .as_ref()
            .and_then(|f| f.first())
            .map_or(0, Vec::len);
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["config_id".to_string(), "epoch".into(), "loss".into()];
        header.extend((0..dims).map(|d| format!("feat_{d}")));
        csv.write_record(&header).map_err(csv_io)?;
        for (k, curve) in self.curves.iter().enumerate() {
            for (t, loss) in curve.iter().enumerate() {
                let mut row = vec![
                    self.config_ids[k].to_string(),
                    (t + 1).to_string(),
                    loss.to_string(),
                ];
                if let Some(f) = &self.features {
                    row.extend(f[k].iter().map(f64::to_string));
                }
                csv.write_record(&row).map_err(csv_io)?;
            }
        }
        csv.flush().map_err(io)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.into(),
            source: e,
        })?;
        self.write_to(file)
    }

    /// Parses the curve file format from a reader.
    pub fn read_from<R: Read>(mut reader: R) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text).map_err(|e| Error::Io {
            path: "<reader>".into(),
            source: e,
        })?;
        parse_curves(&text)
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io {
        path: "<writer>".into(),
        source: e.into(),
    }
}

/// Loads a curve file. Arms are ordered by ascending config id.
pub fn load_curves(path: &Path) -> Result<CurveSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.into(),
        source: e,
    })?;
    parse_curves(&text)
}

#[derive(Default)]
struct ConfigRows {
    epochs: BTreeMap<usize, f64>,
    features: Option<Vec<f64>>,
}

fn parse_curves(text: &str) -> Result<CurveSet> {
    let mut initial_loss = None;
    let mut normalized = false;
    let mut skipped = 0;
    let mut body = text;
    while let Some(rest) = body.strip_prefix('#') {
        let (line, tail) = rest.split_once('\n').unwrap_or((rest, ""));
        skipped += 1;
        for item in line.split_whitespace() {
            match item.split_once('=') {
                Some(("initial_loss", v)) => {
                    initial_loss = Some(v.parse::<f64>().map_err(|_| Error::Malformed {
                        line: skipped,
                        message: format!("bad initial_loss {v:?}"),
                    })?)
                }
                Some(("normalized", v)) => {
                    normalized = v.parse::<bool>().map_err(|_| Error::Malformed {
                        line: skipped,
                        message: format!("bad normalized flag {v:?}"),
                    })?
                }
                _ => {}
            }
        }
        body = tail;
    }

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Malformed {
            line: skipped + 1,
            message: e.to_string(),
        })?
        .clone();
    if header.len() < 3
        || &header[0] != "config_id"
        || &header[1] != "epoch"
        || &header[2] != "loss"
    {
        return Err(Error::Malformed {
            line: skipped + 1,
            message: "header must start with config_id,epoch,loss".into(),
        });
    }
    let dims = header.len() - 3;

    let mut configs: BTreeMap<u64, ConfigRows> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = skipped + 2 + i;
        let rec = rec.map_err(|e| Error::Malformed {
            line,
            message: e.to_string(),
        })?;
        if rec.len() != header.len() {
            return Err(Error::Malformed {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let field = |idx: usize, what: &str| Error::Malformed {
            line,
            message: format!("bad {what} {:?}", &rec[idx]),
        };
        let config: u64 = rec[0].parse().map_err(|_| field(0, "config_id"))?;
        let epoch: usize = rec[1].parse().map_err(|_| field(1, "epoch"))?;
        if epoch == 0 {
            return Err(field(1, "epoch"));
        }
        let loss: f64 = rec[2].parse().map_err(|_| field(2, "loss"))?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { line });
        }
        let feats = (0..dims)
            .map(|d| rec[3 + d].parse::<f64>().map_err(|_| field(3 + d, "feature")))
            .collect::<Result<Vec<_>>>()?;

        let entry = configs.entry(config).or_default();
        if entry.epochs.insert(epoch, loss).is_some() {
            return Err(Error::DuplicateEpoch { config, epoch });
        }
        if dims > 0 {
            match &entry.features {
                None => entry.features = Some(feats),
                Some(f) if *f != feats => return Err(Error::InconsistentFeatures { config }),
                Some(_) => {}
            }
        }
    }

    let mut curves = Vec::with_capacity(configs.len());
    let mut ids = Vec::with_capacity(configs.len());
    let mut features = Vec::with_capacity(configs.len());
    for (config, rows) in configs {
        for (expected, &epoch) in (1..).zip(rows.epochs.keys()) {
            if epoch != expected {
                return Err(Error::EpochGap {
                    config,
                    missing: expected,
                });
            }
        }
        curves.push(rows.epochs.into_values().collect());
        ids.push(config);
        if let Some(f) = rows.features {
            features.push(f);
        }
    }
    let features = (dims > 0).then_some(features);
    let mut set = CurveSet::with_ids(curves, ids, features)?;
    if let Some(l0) = initial_loss {
        set = set.with_initial_loss(l0);
    }
    if normalized {
        set = set.mark_normalized()?;
    }
    Ok(set)
}

/// One environment step: the arm pulled and the raw loss it revealed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pull {
    pub arm: usize,
    pub loss: f64,
}

/// Epoch-by-epoch replay of a [`CurveSet`] under a fixed budget.
#[derive(Debug, Clone)]
pub struct ReplayEnv<'a> {
    curves: &'a CurveSet,
    budget: usize,
    cursor: Vec<usize>,
    best: Vec<f64>,
    trajectory: Vec<Pull>,
}

impl<'a> ReplayEnv<'a> {
    pub fn new(curves: &'a CurveSet, budget: usize) -> Self {
        let k = curves.num_arms();
        ReplayEnv {
            curves,
            budget,
            cursor: vec![0; k],
            best: vec![f64::INFINITY; k],
            trajectory: Vec::with_capacity(budget),
        }
    }

    pub fn curves(&self) -> &'a CurveSet {
        self.curves
    }

    pub fn num_arms(&self) -> usize {
        self.cursor.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Steps taken so far.
    pub fn steps(&self) -> usize {
        self.trajectory.len()
    }

    /// Remaining budget `B - n`.
    pub fn remaining(&self) -> usize {
        self.budget - self.trajectory.len()
    }

    pub fn is_done(&self) -> bool {
        self.remaining() == 0 || !(0..self.num_arms()).any(|k| self.is_eligible(k))
    }

    /// Epochs consumed by `arm`.
    pub fn epochs(&self, arm: usize) -> usize {
        self.cursor[arm]
    }

    pub fn allocation(&self) -> &[usize] {
        &self.cursor
    }

    /// Epochs left on the recorded curve of `arm`.
    pub fn epochs_left(&self, arm: usize) -> usize {
        self.curves.max_epochs(arm) - self.cursor[arm]
    }

    pub fn is_eligible(&self, arm: usize) -> bool {
        self.epochs_left(arm) > 0
    }

    pub fn eligible_arms(&self) -> Vec<usize> {
        (0..self.num_arms()).filter(|&k| self.is_eligible(k)).collect()
    }

    /// Running best loss of `arm`; `+inf` before its first pull.
    pub fn arm_best(&self, arm: usize) -> f64 {
        self.best[arm]
    }

    /// Best loss seen on any arm; `+inf` before the first step.
    pub fn best_so_far(&self) -> f64 {
        self.best.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn trajectory(&self) -> &[Pull] {
        &self.trajectory
    }

    /// Trains `arm` for one more unit and returns the revealed loss.
    pub fn step(&mut self, arm: usize) -> Result<f64> {
        if arm >= self.num_arms() {
            return Err(Error::ArmOutOfRange {
                arm,
                arms: self.num_arms(),
            });
        }
        if self.remaining() == 0 {
            return Err(Error::BudgetExhausted(self.budget));
        }
        if !self.is_eligible(arm) {
            return Err(Error::CurveExhausted(arm));
        }
        let loss = self.curves.curve(arm)[self.cursor[arm]];
        self.cursor[arm] += 1;
        self.best[arm] = self.best[arm].min(loss);
        self.trajectory.push(Pull { arm, loss });
        Ok(loss)
    }

    pub fn into_result(self, policy: &str, seed: u64) -> TuningResult {
        TuningResult::from_trajectory(
            self.trajectory,
            self.cursor,
            self.budget,
            policy.to_string(),
            seed,
        )
    }
}

/// Outcome of one tuning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub trajectory: Vec<Pull>,
    /// `min_n z_n`; `+inf` for an empty trajectory.
    pub output_loss: f64,
    pub output_arm: usize,
    /// Epochs spent per arm.
    pub allocation: Vec<usize>,
    pub budget: usize,
    pub policy: String,
    pub seed: u64,
}

impl TuningResult {
    pub fn from_trajectory(
        trajectory: Vec<Pull>,
        allocation: Vec<usize>,
        budget: usize,
        policy: String,
        seed: u64,
    ) -> Self {
        let mut output_loss = f64::INFINITY;
        let mut output_arm = 0;
        for p in &trajectory {
            if p.loss < output_loss || (p.loss == output_loss && p.arm < output_arm) {
                output_loss = p.loss;
                output_arm = p.arm;
            }
        }
        TuningResult {
            trajectory,
            output_loss,
            output_arm,
            allocation,
            budget,
            policy,
            seed,
        }
    }

    pub fn steps(&self) -> usize {
        self.trajectory.len()
    }

    /// Fraction of the budget spent on the output arm.
    pub fn output_fraction(&self) -> f64 {
        self.allocation[self.output_arm] as f64 / self.budget as f64
    }
}

/// Best arm and loss attainable with perfect knowledge of all curves: the
/// whole budget goes to the single arm with the lowest loss within its first
/// `budget` epochs. Ties go to the lowest arm index.
pub fn optimal_loss(curves: &CurveSet, budget: usize) -> Result<(usize, f64)> {
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let mut best = (0, f64::INFINITY);
    for k in 0..curves.num_arms() {
        let v = curves.best_within(k, budget);
        if v < best.1 {
            best = (k, v);
        }
    }
    Ok(best)
}

/// `(output - optimum) / (initial - optimum)`.
pub fn normalized_regret(output: f64, optimum: f64, initial: f64) -> Result<f64> {
    if initial - optimum <= 0.0 {
        return Err(Error::DegenerateRange { initial, optimum });
    }
    Ok((output - optimum) / (initial - optimum))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_arms() -> CurveSet {
        CurveSet::new(vec![vec![0.9, 0.5, 0.4], vec![0.6, 0.55, 0.52]]).unwrap()
    }

    #[test]
    fn parse_two_configs() {
        let text = "config_id,epoch,loss\n1,2,0.5\n0,1,0.9\n0,2,0.8\n1,1,0.7\n0,3,0.2\n1,3,0.1\n";
        let set = CurveSet::read_from(text.as_bytes()).unwrap();
        assert_eq!(set.num_arms(), 2);
        assert_eq!(set.max_epochs(0), 3);
        assert_eq!(set.curve(0), &[0.9, 0.8, 0.2]);
        assert_eq!(set.curve(1), &[0.7, 0.5, 0.1]);
        assert_eq!(set.initial_loss(), 0.9);
        assert!(!set.is_normalized());
        assert!(set.features().is_none());
    }

    #[test]
    fn parse_metadata_and_features() {
        let text = "# initial_loss=0.95 normalized=true\n\
                    config_id,epoch,loss,feat_0\n\
                    7,1,0.5,0.25\n7,2,0.4,0.25\n3,1,0.6,0.75\n";
        let set = CurveSet::read_from(text.as_bytes()).unwrap();
        assert_eq!(set.config_ids(), &[3, 7]);
        assert_eq!(set.initial_loss(), 0.95);
        assert!(set.is_normalized());
        assert_eq!(set.features().unwrap(), &[vec![0.75], vec![0.25]]);
    }

    #[test]
    fn rejects_nan() {
        let text = "config_id,epoch,loss\n0,1,NaN\n";
        assert!(matches!(
            CurveSet::read_from(text.as_bytes()),
            Err(Error::NonFiniteLoss { line: 2 })
        ));
    }

    #[test]
    fn rejects_epoch_gap() {
        let text = "config_id,epoch,loss\n0,1,0.5\n0,2,0.4\n0,4,0.3\n";
        assert!(matches!(
            CurveSet::read_from(text.as_bytes()),
            Err(Error::EpochGap { config: 0, missing: 3 })
        ));
    }

    #[test]
    fn rejects_duplicates_and_garbage() {
        let dup = "config_id,epoch,loss\n0,1,0.5\n0,1,0.4\n";
        assert!(matches!(
            CurveSet::read_from(dup.as_bytes()),
            Err(Error::DuplicateEpoch { config: 0, epoch: 1 })
        ));
        let bad = "config_id,epoch,loss\n0,1,abc\n";
        assert!(matches!(
            CurveSet::read_from(bad.as_bytes()),
            Err(Error::Malformed { line: 2, .. })
        ));
        let feats = "config_id,epoch,loss,feat_0\n0,1,0.5,1\n0,2,0.4,2\n";
        assert!(matches!(
            CurveSet::read_from(feats.as_bytes()),
            Err(Error::InconsistentFeatures { config: 0 })
        ));
        assert!(matches!(
            CurveSet::read_from("config_id,epoch,loss\n".as_bytes()),
            Err(Error::EmptyCurveSet)
        ));
    }

    #[test]
    fn missing_file() {
        let err = load_curves(Path::new("/definitely/not/here.csv")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn normalized_flag_is_checked() {
        let text = "# normalized=true\nconfig_id,epoch,loss\n0,1,1.5\n";
        assert!(CurveSet::read_from(text.as_bytes()).is_err());
    }

    #[test]
    fn replay_order_and_counters() {
        let set = CurveSet::new(vec![vec![0.9, 0.5]]).unwrap();
        let mut env = ReplayEnv::new(&set, 5);
        assert_eq!(env.step(0).unwrap(), 0.9);
        assert_eq!(env.step(0).unwrap(), 0.5);
        assert_eq!(env.remaining(), 3);
        assert_eq!(env.arm_best(0), 0.5);
        assert!(matches!(env.step(0), Err(Error::CurveExhausted(0))));
        assert!(matches!(env.step(1), Err(Error::ArmOutOfRange { .. })));
        assert_eq!(env.trajectory().len(), 2);
        assert!(env.is_done());
    }

    #[test]
    fn budget_exhaustion() {
        let set = two_arms();
        let mut env = ReplayEnv::new(&set, 1);
        env.step(1).unwrap();
        assert!(matches!(env.step(0), Err(Error::BudgetExhausted(1))));
        let res = env.into_result("manual", 0);
        assert_eq!(res.output_loss, 0.6);
        assert_eq!(res.output_arm, 1);
        assert_eq!(res.allocation, vec![0, 1]);
    }

    #[test]
    fn optimal_loss_enumeration() {
        let set = two_arms();
        // Brute force: for each budget, scan every (arm, epoch <= budget).
        for budget in 1..=4 {
            let mut oracle = (usize::MAX, f64::INFINITY);
            for (k, c) in set.curves().iter().enumerate() {
                for (t, &v) in c.iter().enumerate() {
                    if t < budget && v < oracle.1 {
                        oracle = (k, v);
                    }
                }
            }
            assert_eq!(optimal_loss(&set, budget).unwrap(), oracle);
        }
        assert_eq!(optimal_loss(&set, 1).unwrap(), (1, 0.6));
        assert_eq!(optimal_loss(&set, 3).unwrap(), (0, 0.4));
    }

    #[test]
    fn optimal_loss_degenerate_cases() {
        let single = CurveSet::new(vec![vec![0.5, 0.3, 0.4, 0.1]]).unwrap();
        assert_eq!(optimal_loss(&single, 3).unwrap(), (0, 0.3));
        let twins = CurveSet::new(vec![vec![0.5, 0.3], vec![0.5, 0.3]]).unwrap();
        assert_eq!(optimal_loss(&twins, 2).unwrap(), (0, 0.3));
        assert!(optimal_loss(&twins, 0).is_err());
    }

    #[test]
    fn regret_arithmetic() {
        assert_eq!(normalized_regret(0.2, 0.2, 0.7).unwrap(), 0.0);
        assert_eq!(normalized_regret(0.7, 0.2, 0.7).unwrap(), 1.0);
        assert!((normalized_regret(0.3, 0.2, 0.7).unwrap() - 0.2).abs() < 1e-15);
        assert!(matches!(
            normalized_regret(0.2, 0.2, 0.2),
            Err(Error::DegenerateRange { .. })
        ));
    }

    #[test]
    fn ground_truth_ranks() {
        let set = CurveSet::new(vec![vec![0.5, 0.4], vec![0.3], vec![0.6, 0.2], vec![0.3]]).unwrap();
        assert_eq!(set.ground_truth_rank(2), 0);
        assert_eq!(set.ground_truth_rank(1), 1);
        assert_eq!(set.ground_truth_rank(3), 2);
        assert_eq!(set.ground_truth_rank(0), 3);
    }
}
