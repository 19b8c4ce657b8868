//! Comparison policies: uniform random, Hyperband, GP expected improvement
//! without early stopping, and a finite-horizon expected-improvement rollout.

mod gp_ei;
mod hyperband;
mod quadrature;
mod random;
mod rollout;

pub use gp_ei::run_gp_ei;
pub use hyperband::{
    hyperband_schedule, run_bracket, run_hyperband, sh_schedule, Bracket, HyperbandSchedule, Round,
};
pub use quadrature::{gauss_hermite, MAX_QUAD_NODES};
pub use random::run_random;
pub use rollout::{rollout_value, run_rollout, RolloutConfig, RolloutProblem, MAX_ROLLOUT_DEPTH};

use crate::gp::GaussianScalar;
use crate::normal;

/// `E[max(incumbent − y, 0)]` for `y ~ pred`.
pub fn expected_improvement(pred: GaussianScalar, incumbent: f64) -> f64 {
    if pred.std == 0.0 {
        return (incumbent - pred.mean).max(0.0);
    }
    let u = (incumbent - pred.mean) / pred.std;
    (pred.std * (u * normal::cdf(u) + normal::pdf(u))).max(0.0)
}

/// `Σ_n (ζ_n − z_n)⁺` along `losses`, where the incumbent starts at
/// `initial` and becomes `min(ζ_n, z_n)` after each step.
pub fn accumulated_improvement(initial: f64, losses: &[f64]) -> f64 {
    let mut zeta = initial;
    let mut total = 0.0;
    for &z in losses {
        total += (zeta - z).max(0.0);
        zeta = zeta.min(z);
    }
    total
}
