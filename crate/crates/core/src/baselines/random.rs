use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve_env::{CurveSet, ReplayEnv, TuningResult};
use crate::error::Result;

/// Pulls a uniformly random eligible arm at every step.
pub fn run_random(curves: &CurveSet, budget: usize, seed: u64) -> Result<TuningResult> {
    let mut env = ReplayEnv::new(curves, budget);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while !env.is_done() {
        let eligible = env.eligible_arms();
        let arm = eligible[rng.gen_range(0..eligible.len())];
        env.step(arm)?;
    }
    Ok(env.into_result("random", seed))
}
