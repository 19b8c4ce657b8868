//! Finite-horizon rollout of greedy expected improvement.
//!
//! The value of pulling `a` with incumbent `ζ` and `d` steps to go is the
//! immediate expected improvement of its next observation plus, averaged
//! over that observation, the value of continuing greedily:
//!
//! `H(a, ζ, d) = EI(a, ζ) + E_z[H(g(z), min(ζ, z), d − 1)]`, `H(·, ·, 0) = 0`,
//!
//! where `g(z)` is the arm with the highest one-step expected improvement
//! once `z` has been imagined. The expectation uses Gauss–Hermite quadrature.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::quadrature::MAX_QUAD_NODES;
use super::{expected_improvement, gauss_hermite};
use crate::curve_env::{CurveSet, ReplayEnv, TuningResult};
use crate::error::{Error, Result};
use crate::gp::CurveBelief;
use crate::policy::BeliefConfig;

/// Deepest lookahead accepted.
pub const MAX_ROLLOUT_DEPTH: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutConfig {
    /// Lookahead steps.
    pub horizon: usize,
    /// Quadrature nodes per imagined observation.
    pub n_quad: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig { horizon: 3, n_quad: 5 }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("rollout horizon must be at least 1".into()));
        }
        if self.n_quad == 0 || self.n_quad > MAX_QUAD_NODES {
            return Err(Error::InvalidParameter(format!("n_quad must be in 1..={MAX_QUAD_NODES}")));
        }
        if self.horizon > MAX_ROLLOUT_DEPTH {
            return Err(Error::RecursionLimit(MAX_ROLLOUT_DEPTH));
        }
        Ok(())
    }
}

/// Curve lengths and quadrature rule shared by every rollout evaluation.
#[derive(Debug, Clone)]
pub struct RolloutProblem<'a> {
    limits: &'a [usize],
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> RolloutProblem<'a> {
    /// `limits[k]` is the number of epochs recorded for arm `k`.
    pub fn new(limits: &'a [usize], n_quad: usize) -> Result<Self> {
        let (nodes, weights) = gauss_hermite(n_quad)?;
        Ok(RolloutProblem { limits, nodes, weights })
    }

    fn can_pull<B: CurveBelief + ?Sized>(&self, belief: &B, arm: usize) -> bool {
        belief.observed_epochs(arm) < self.limits[arm]
    }

    /// Expected improvement of the next observation of `arm`.
    pub fn one_step_ei<B: CurveBelief + ?Sized>(&self, belief: &B, arm: usize, incumbent: f64) -> f64 {
        expected_improvement(belief.predict(arm, belief.observed_epochs(arm) + 1), incumbent)
    }

    /// Pullable arm with the highest one-step expected improvement; lowest
    /// index on ties.
    pub fn greedy_arm<B: CurveBelief + ?Sized>(&self, belief: &B, incumbent: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for a in 0..belief.num_arms() {
            if !self.can_pull(belief, a) {
                continue;
            }
            let ei = self.one_step_ei(belief, a, incumbent);
            if best.map_or(true, |(_, b)| ei > b) {
                best = Some((a, ei));
            }
        }
        best.map(|(a, _)| a)
    }

    /// `H(arm, incumbent, depth)`.
    pub fn value<B: CurveBelief + Clone>(&self, belief: &B, arm: usize, incumbent: f64, depth: usize) -> Result<f64> {
        if depth > MAX_ROLLOUT_DEPTH {
            return Err(Error::RecursionLimit(MAX_ROLLOUT_DEPTH));
        }
        if depth == 0 {
            return Ok(0.0);
        }
        if arm >= belief.num_arms() {
            return Err(Error::ArmOutOfRange { arm, arms: belief.num_arms() });
        }
        if !self.can_pull(belief, arm) {
            return Err(Error::CurveExhausted(arm));
        }
        let pred = belief.predict(arm, belief.observed_epochs(arm) + 1);
        let now = expected_improvement(pred, incumbent);
        if depth == 1 {
            return Ok(now);
        }
        let branches: Vec<(f64, f64)> = if pred.std == 0.0 {
            vec![(0.0, 1.0)]
        } else {
            self.nodes.iter().copied().zip(self.weights.iter().copied()).collect()
        };
        let mut later = 0.0;
        for (x, w) in branches {
            let z = pred.mean + pred.std * x;
            let mut next = belief.clone();
            next.observe(arm, z)?;
            let zeta = incumbent.min(z);
            if let Some(g) = self.greedy_arm(&next, zeta) {
                later += w * self.value(&next, g, zeta, depth - 1)?;
            }
        }
        Ok(now + later)
    }
}

/// `H(arm, incumbent, depth)` with an `n_quad`-node rule.
pub fn rollout_value<B: CurveBelief + Clone>(
    belief: &B,
    limits: &[usize],
    arm: usize,
    incumbent: f64,
    depth: usize,
    n_quad: usize,
) -> Result<f64> {
    RolloutProblem::new(limits, n_quad)?.value(belief, arm, incumbent, depth)
}

/// At each step pulls the arm with the highest rollout value, looking
/// `min(horizon, remaining budget)` steps ahead.
pub fn run_rollout(
    curves: &CurveSet,
    budget: usize,
    cfg: &RolloutConfig,
    belief: &BeliefConfig,
    seed: u64,
) -> Result<TuningResult> {
    cfg.validate()?;
    let limits: Vec<usize> = (0..curves.num_arms()).map(|k| curves.max_epochs(k)).collect();
    let problem = RolloutProblem::new(&limits, cfg.n_quad)?;
    let mut env = ReplayEnv::new(curves, budget);
    let mut belief = belief.build(curves)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while !env.is_done() {
        belief.maybe_resample(env.steps(), &mut rng)?;
        let incumbent = if env.steps() == 0 { curves.initial_loss() } else { env.best_so_far() };
        let depth = cfg.horizon.min(env.remaining());
        let mut best: Option<(usize, f64)> = None;
        for a in env.eligible_arms() {
            let h = problem.value(&belief, a, incumbent, depth)?;
            if best.map_or(true, |(_, b)| h > b) {
                best = Some((a, h));
            }
        }
        let arm = best.ok_or(Error::NoEligibleArm)?.0;
        let loss = env.step(arm)?;
        belief.observe(arm, loss)?;
    }
    Ok(env.into_result("rollout", seed))
}
