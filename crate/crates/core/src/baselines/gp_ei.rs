use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve_env::{CurveSet, ReplayEnv, TuningResult};
use crate::error::Result;
use crate::gp::CurveBelief;
use crate::policy::BeliefConfig;

use super::expected_improvement;

/// Bayesian optimisation without early stopping: picks the untried arm with
/// the highest expected improvement of its predicted asymptote over the best
/// loss so far, then trains it to the end of its curve.
///
/// Before the first observation the incumbent is the set's initial loss.
/// Once every arm has been tried, partly trained arms are considered too.
pub fn run_gp_ei(curves: &CurveSet, budget: usize, belief: &BeliefConfig, seed: u64) -> Result<TuningResult> {
    let mut env = ReplayEnv::new(curves, budget);
    let mut belief = belief.build(curves)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current: Option<usize> = None;
    while !env.is_done() {
        belief.maybe_resample(env.steps(), &mut rng)?;
        let arm = match current {
            Some(a) if env.is_eligible(a) => a,
            _ => {
                let incumbent = if env.steps() == 0 { curves.initial_loss() } else { env.best_so_far() };
                let eligible = env.eligible_arms();
                let fresh: Vec<usize> = eligible.iter().copied().filter(|&a| env.epochs(a) == 0).collect();
                let pool = if fresh.is_empty() { eligible } else { fresh };
                let mut best = (pool[0], f64::NEG_INFINITY);
                for a in pool {
                    let ei = expected_improvement(belief.asymptote(a), incumbent);
                    if ei > best.1 {
                        best = (a, ei);
                    }
                }
                current = Some(best.0);
                best.0
            }
        };
        let loss = env.step(arm)?;
        belief.observe(arm, loss)?;
    }
    Ok(env.into_result("gp-ei", seed))
}
