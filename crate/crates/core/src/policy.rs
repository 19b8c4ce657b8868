//! Value-of-information arm selection and the tuning loop.
//!
//! At every step each eligible arm gets a Gaussian stand-in `ν̂` for its best
//! loss over the remaining budget. The predicted top arm `ĉ` has the lowest
//! expected best loss `μ¹ˢᵗ`, the runner-up has `μ²ⁿᵈ`. An arm's action value
//! is the expected minimum of its own `ν̂` and the best expectation among the
//! other arms:
//!
//! * `Q[a] = E[min(ν̂_a, μ¹ˢᵗ)]` for `a ≠ ĉ`;
//! * `Q[ĉ] = E[min(ν̂_ĉ, μ²ⁿᵈ)]`.
//!
//! The arm with the smallest `Q` is pulled, unless `ĉ` needs the whole
//! remaining budget to reach its expected minimum, in which case `ĉ` is
//! pulled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{self, RolloutConfig};
use crate::curve_env::{CurveSet, ReplayEnv, TuningResult};
use crate::error::{Error, Result};
use crate::gp::{future_best, BeliefState, CurveBelief, GaussianScalar, GpHypers, SliceConfig, StationaryBelief};
use crate::normal;

pub const DEFAULT_EPSILON: f64 = 0.5;

/// `E[min(ν, μ)]` for Gaussian `ν`, in closed form:
/// `μ − σ·(sΦ(s) + φ(s))` with `s = (μ − E[ν]) / σ`, evaluated as
/// `min(E ν, μ) − σ·ψ(|s|)`.
pub fn action_value(nu: GaussianScalar, mu: f64) -> f64 {
    let cap = nu.mean.min(mu);
    if nu.std == 0.0 {
        return cap;
    }
    let s = (mu - nu.mean).abs() / nu.std;
    let q = cap - nu.std * normal::psi(s);
    q.clamp(cap - nu.std * normal::pdf(0.0), cap)
}

/// `ln(min(E ν, μ) − E[min(ν, μ)])`, the log of the expected drop below the
/// cheaper of the two. Stays finite and ordered where [`action_value`]
/// rounds to `min(E ν, μ)`.
pub fn log_surprise(nu: GaussianScalar, mu: f64) -> f64 {
    if nu.std == 0.0 {
        return f64::NEG_INFINITY;
    }
    nu.std.ln() + normal::log_psi((mu - nu.mean).abs() / nu.std)
}

/// Forecast of an eligible arm over its usable horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmForecast {
    /// Offset (1-based) at which the arm's expected loss is lowest.
    pub tau: usize,
    pub best: GaussianScalar,
}

/// Everything a selection rule needs at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionContext {
    remaining: usize,
    forecasts: Vec<Option<ArmForecast>>,
    top: usize,
    mu_first: f64,
    mu_second: Option<f64>,
}

impl DecisionContext {
    /// `forecasts[k]` is `None` for arms that cannot be pulled.
    pub fn new(remaining: usize, forecasts: Vec<Option<ArmForecast>>) -> Result<Self> {
        let mut top: Option<usize> = None;
        for (k, f) in forecasts.iter().enumerate() {
            if let Some(f) = f {
                if top.map_or(true, |t| f.best.mean < forecasts[t].unwrap().best.mean) {
                    top = Some(k);
                }
            }
        }
        let top = top.ok_or(Error::NoEligibleArm)?;
        let mu_first = forecasts[top].unwrap().best.mean;
        let mu_second = forecasts
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != top)
            .filter_map(|(_, f)| f.map(|f| f.best.mean))
            .reduce(f64::min);
        Ok(DecisionContext { remaining, forecasts, top, mu_first, mu_second })
    }

    /// Forecasts every eligible arm of `env` from `belief`, each over the
    /// remaining budget capped by the epochs left on its curve.
    pub fn from_belief<B: CurveBelief + ?Sized>(belief: &B, env: &ReplayEnv<'_>) -> Result<Self> {
        let r = env.remaining();
        let forecasts = (0..env.num_arms())
            .map(|k| {
                let h = r.min(env.epochs_left(k));
                if h == 0 {
                    return Ok(None);
                }
                let (tau, best) = future_best(belief, k, h)?;
                Ok(Some(ArmForecast { tau, best }))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(r, forecasts)
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn forecast(&self, arm: usize) -> Option<&ArmForecast> {
        self.forecasts[arm].as_ref()
    }

    pub fn num_arms(&self) -> usize {
        self.forecasts.len()
    }

    pub fn num_eligible(&self) -> usize {
        self.forecasts.iter().flatten().count()
    }

    /// Predicted top arm `ĉ`.
    pub fn top(&self) -> usize {
        self.top
    }

    pub fn mu_first(&self) -> f64 {
        self.mu_first
    }

    /// `None` when only one arm is eligible.
    pub fn mu_second(&self) -> Option<f64> {
        self.mu_second
    }

    /// Epochs the top arm needs to reach its expected minimum.
    pub fn tau_star(&self) -> usize {
        self.forecasts[self.top].unwrap().tau
    }

    /// Whether the top arm still has spare budget beyond its expected
    /// minimum. When false, the budget is committed to `ĉ`.
    pub fn has_slack(&self) -> bool {
        self.tau_star() < self.remaining
    }
}

/// Action values of every arm; ineligible arms get `+∞`. With a single
/// eligible arm its value is its expected best loss.
pub fn q_all(ctx: &DecisionContext) -> Vec<f64> {
    (0..ctx.num_arms())
        .map(|k| match ctx.forecast(k) {
            None => f64::INFINITY,
            Some(f) if k == ctx.top() => match ctx.mu_second() {
                Some(mu2) => action_value(f.best, mu2),
                None => f.best.mean,
            },
            Some(f) => action_value(f.best, ctx.mu_first()),
        })
        .collect()
}

fn argmax(values: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in values {
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// The BHPT rule: minimise `Q` while the top arm has slack, otherwise commit
/// to the top arm.
pub fn select_bhpt(ctx: &DecisionContext) -> Result<usize> {
    if ctx.num_eligible() == 1 || !ctx.has_slack() {
        return Ok(ctx.top());
    }
    // Every eligible Q equals μ¹ˢᵗ minus that arm's surprise, so the argmin
    // of Q is the argmax of the surprise.
    let mu1 = ctx.mu_first();
    let mu2 = ctx.mu_second().expect("two eligible arms");
    argmax((0..ctx.num_arms()).filter_map(|k| {
        let level = if k == ctx.top() { mu2 } else { mu1 };
        ctx.forecast(k).map(|f| (k, log_surprise(f.best, level)))
    }))
    .ok_or(Error::NoEligibleArm)
}

/// ε-greedy variant: with probability `epsilon` pull the best non-top arm by
/// `E[min(ν̂_a, μ¹ˢᵗ)]`, otherwise pull the top arm. The budget-exhaustion
/// check applies first.
pub fn select_eps<R: Rng + ?Sized>(ctx: &DecisionContext, epsilon: f64, rng: &mut R) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside [0, 1]")));
    }
    if ctx.num_eligible() == 1 || !ctx.has_slack() {
        return Ok(ctx.top());
    }
    let explore = rng.gen::<f64>() < epsilon;
    if !explore {
        return Ok(ctx.top());
    }
    let mu1 = ctx.mu_first();
    argmax(
        (0..ctx.num_arms())
            .filter(|&k| k != ctx.top())
            .filter_map(|k| ctx.forecast(k).map(|f| (k, log_surprise(f.best, mu1)))),
    )
    .ok_or(Error::NoEligibleArm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Bhpt,
    BhptEps,
    Random,
    Hyperband,
    GpEi,
    Rollout,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Bhpt => "bhpt",
            PolicyKind::BhptEps => "bhpt-eps",
            PolicyKind::Random => "random",
            PolicyKind::Hyperband => "hyperband",
            PolicyKind::GpEi => "gp-ei",
            PolicyKind::Rollout => "rollout",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            PolicyKind::Bhpt,
            PolicyKind::BhptEps,
            PolicyKind::Random,
            PolicyKind::Hyperband,
            PolicyKind::GpEi,
            PolicyKind::Rollout,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown policy {s:?}")))
    }
}

/// Hyper-parameter resampling during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    #[serde(flatten)]
    pub slice: SliceConfig,
    /// Steps between resampling rounds.
    pub resample_every: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig { slice: SliceConfig::default(), resample_every: 5 }
    }
}

/// How a policy's belief over the curves is set up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BeliefConfig {
    /// The set's recorded generator hyper-parameters when present; otherwise
    /// default hyper-parameters with slice sampling.
    #[default]
    Auto,
    /// The set's recorded generator hyper-parameters; fails without them.
    Reference,
    FreezeThaw {
        hypers: GpHypers,
        #[serde(default)]
        sampling: Option<SamplingConfig>,
    },
    /// Per-arm conjugate normal belief for stationary arms.
    Stationary { prior_mean: f64, prior_std: f64, noise_std: f64 },
}

/// A belief built from a [`BeliefConfig`].
#[derive(Debug, Clone)]
pub enum RunBelief {
    Gp { state: BeliefState, sampling: Option<SamplingConfig> },
    Stationary(StationaryBelief),
}

impl BeliefConfig {
    pub fn build(&self, curves: &CurveSet) -> Result<RunBelief> {
        let k = curves.num_arms();
        let features = || curves.features().map(<[_]>::to_vec);
        let gp = |hypers: GpHypers, sampling| -> Result<RunBelief> {
            Ok(RunBelief::Gp { state: BeliefState::new(k, hypers, features())?, sampling })
        };
        match *self {
            BeliefConfig::Auto => match curves.reference_hypers() {
                Some(h) => gp(*h, None),
                None => gp(GpHypers::default(), Some(SamplingConfig::default())),
            },
            BeliefConfig::Reference => {
                let h = curves.reference_hypers().ok_or_else(|| {
                    Error::InvalidParameter("curve set has no reference hyper-parameters".into())
                })?;
                gp(*h, None)
            }
            BeliefConfig::FreezeThaw { hypers, sampling } => gp(hypers, sampling),
            BeliefConfig::Stationary { prior_mean, prior_std, noise_std } => Ok(RunBelief::Stationary(
                StationaryBelief::new(k, prior_mean, prior_std, noise_std)?,
            )),
        }
    }
}

impl RunBelief {
    /// Resamples GP hyper-parameters when a sampling cadence is configured
    /// and `step` falls on it.
    pub fn maybe_resample<R: Rng + ?Sized>(&mut self, step: usize, rng: &mut R) -> Result<()> {
        if let RunBelief::Gp { state, sampling: Some(s) } = self {
            if step > 0 && s.resample_every > 0 && step % s.resample_every == 0 {
                state.resample(&s.slice, rng)?;
            }
        }
        Ok(())
    }
}

impl CurveBelief for RunBelief {
    fn num_arms(&self) -> usize {
        match self {
            RunBelief::Gp { state, .. } => state.num_arms(),
            RunBelief::Stationary(b) => b.num_arms(),
        }
    }

    fn observed_epochs(&self, arm: usize) -> usize {
        match self {
            RunBelief::Gp { state, .. } => state.observed_epochs(arm),
            RunBelief::Stationary(b) => b.observed_epochs(arm),
        }
    }

    fn predict(&self, arm: usize, epoch: usize) -> GaussianScalar {
        match self {
            RunBelief::Gp { state, .. } => state.predict(arm, epoch),
            RunBelief::Stationary(b) => b.predict(arm, epoch),
        }
    }

    fn predict_mean(&self, arm: usize, epoch: usize) -> f64 {
        match self {
            RunBelief::Gp { state, .. } => state.predict_mean(arm, epoch),
            RunBelief::Stationary(b) => b.predict_mean(arm, epoch),
        }
    }

    fn asymptote(&self, arm: usize) -> GaussianScalar {
        match self {
            RunBelief::Gp { state, .. } => state.asymptote(arm),
            RunBelief::Stationary(b) => b.asymptote(arm),
        }
    }

    fn observe(&mut self, arm: usize, loss: f64) -> Result<()> {
        match self {
            RunBelief::Gp { state, .. } => state.observe(arm, loss),
            RunBelief::Stationary(b) => b.observe(arm, loss),
        }
    }
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_eta() -> usize {
    3
}

/// A policy and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Label used in results; defaults to the kind's name.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub belief: BeliefConfig,
    /// Hyperband elimination factor.
    #[serde(default = "default_eta")]
    pub eta: usize,
    #[serde(default)]
    pub rollout: RolloutConfig,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        PolicySpec {
            kind,
            name: None,
            epsilon: DEFAULT_EPSILON,
            belief: BeliefConfig::Auto,
            eta: default_eta(),
            rollout: RolloutConfig::default(),
        }
    }

    pub fn with_belief(mut self, belief: BeliefConfig) -> Self {
        self.belief = belief;
        self
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.as_str().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidParameter(format!("epsilon {} outside [0, 1]", self.epsilon)));
        }
        if self.eta < 2 {
            return Err(Error::InvalidParameter("eta must be at least 2".into()));
        }
        self.rollout.validate()
    }
}

/// Runs one policy on `curves` for `budget` steps. Deterministic in `seed`.
pub fn run_tuning(curves: &CurveSet, spec: &PolicySpec, budget: usize, seed: u64) -> Result<TuningResult> {
    spec.validate()?;
    if budget == 0 {
        return Err(Error::InvalidParameter("budget must be at least 1".into()));
    }
    let label = spec.label();
    match spec.kind {
        PolicyKind::Bhpt | PolicyKind::BhptEps => run_bhpt(curves, spec, budget, seed),
        PolicyKind::Random => baselines::run_random(curves, budget, seed).map(|r| relabel(r, label)),
        PolicyKind::Hyperband => baselines::run_hyperband(curves, budget, spec.eta, seed).map(|r| relabel(r, label)),
        PolicyKind::GpEi => baselines::run_gp_ei(curves, budget, &spec.belief, seed).map(|r| relabel(r, label)),
        PolicyKind::Rollout => {
            baselines::run_rollout(curves, budget, &spec.rollout, &spec.belief, seed).map(|r| relabel(r, label))
        }
    }
}

fn relabel(mut r: TuningResult, label: String) -> TuningResult {
    r.policy = label;
    r
}

fn run_bhpt(curves: &CurveSet, spec: &PolicySpec, budget: usize, seed: u64) -> Result<TuningResult> {
    let mut env = ReplayEnv::new(curves, budget);
    let mut belief = spec.belief.build(curves)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while !env.is_done() {
        belief.maybe_resample(env.steps(), &mut rng)?;
        let ctx = DecisionContext::from_belief(&belief, &env)?;
        let arm = match spec.kind {
            PolicyKind::BhptEps => select_eps(&ctx, spec.epsilon, &mut rng)?,
            _ => select_bhpt(&ctx)?,
        };
        let loss = env.step(arm)?;
        belief.observe(arm, loss)?;
    }
    Ok(env.into_result(&spec.label(), seed))
}
