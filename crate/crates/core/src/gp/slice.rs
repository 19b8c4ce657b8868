//! Univariate slice sampling (stepping out + shrinkage) and a coordinate-wise
//! sweep over the GP hyper-parameters in log space.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BeliefState, ConfigKernel, GpHypers, GpPosterior};
use crate::error::{Error, Result};
use crate::normal;

/// Shrinkage iterations allowed before a move is abandoned.
const SHRINK_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SliceConfig {
    /// Initial bracket width, in log units.
    pub step: f64,
    pub burn_in: usize,
    /// Stepping-out expansions allowed per move.
    pub max_attempts: usize,
    pub n_samples: usize,
    /// Standard deviation of the log-normal prior placed on every positive
    /// hyper-parameter, centred on the belief's base value.
    pub prior_log_std: f64,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig {
            step: 0.5,
            burn_in: 10,
            max_attempts: 10,
            n_samples: 10,
            prior_log_std: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceOutcome {
    pub samples: Vec<GpHypers>,
    /// Moves that hit the shrinkage cap and kept their previous value.
    pub flagged: usize,
}

/// One slice-sampling move from `x0` targeting the log density `log_f`.
///
/// Returns the new point and whether the move completed; on failure the
/// previous value is kept.
pub fn slice_sample<F, R>(x0: f64, mut log_f: F, step: f64, max_attempts: usize, rng: &mut R) -> (f64, bool)
where
    F: FnMut(f64) -> f64,
    R: Rng + ?Sized,
{
    let level = log_f(x0) + rng.gen::<f64>().ln();
    let mut lo = x0 - step * rng.gen::<f64>();
    let mut hi = lo + step;
    let mut left = (max_attempts as f64 * rng.gen::<f64>()).floor() as usize;
    let mut right = max_attempts.saturating_sub(1).saturating_sub(left);
    while left > 0 && log_f(lo) > level {
        lo -= step;
        left -= 1;
    }
    while right > 0 && log_f(hi) > level {
        hi += step;
        right -= 1;
    }
    for _ in 0..SHRINK_CAP {
        let x = lo + (hi - lo) * rng.gen::<f64>();
        if log_f(x) > level {
            return (x, true);
        }
        if x < x0 {
            lo = x;
        } else {
            hi = x;
        }
    }
    (x0, false)
}

/// Log-transformed free parameters of `h`. Noise is sampled only when it is
/// positive in the template.
fn to_params(h: &GpHypers) -> Vec<f64> {
    let mut p = vec![h.ft_alpha.ln(), h.ft_beta.ln(), h.time_magnitude.ln(), h.config.magnitude().ln()];
    if let ConfigKernel::SquaredExponential { lengthscale, .. } = h.config {
        p.push(lengthscale.ln());
    }
    if h.noise_std > 0.0 {
        p.push(h.noise_std.ln());
    }
    p
}

fn from_params(template: &GpHypers, p: &[f64]) -> GpHypers {
    let mut h = *template;
    h.ft_alpha = p[0].exp();
    h.ft_beta = p[1].exp();
    h.time_magnitude = p[2].exp();
    let mut i = 4;
    h.config = match template.config {
        ConfigKernel::Independent { .. } => ConfigKernel::Independent { magnitude: p[3].exp() },
        ConfigKernel::SquaredExponential { .. } => {
            i += 1;
            ConfigKernel::SquaredExponential { lengthscale: p[4].exp(), magnitude: p[3].exp() }
        }
    };
    if template.noise_std > 0.0 {
        h.noise_std = p[i].exp();
    }
    h
}

/// Draws hyper-parameter samples from their posterior given the belief's
/// observations: the GP marginal likelihood times a log-normal prior around
/// the base hyper-parameters.
pub fn slice_sample_hypers<R: Rng + ?Sized>(
    belief: &BeliefState,
    cfg: &SliceConfig,
    rng: &mut R,
) -> Result<SliceOutcome> {
    if belief.num_observations() == 0 {
        return Err(Error::InvalidParameter("slice sampling needs at least one observation".into()));
    }
    if !(cfg.step > 0.0) || !(cfg.prior_log_std > 0.0) {
        return Err(Error::InvalidParameter("slice step and prior width must be positive".into()));
    }
    let base = *belief.base_hypers();
    let start = *belief.components().last().expect("belief has a component").hypers();
    let center = to_params(&base);
    let prior_var = cfg.prior_log_std * cfg.prior_log_std;
    let features = belief.features().cloned();
    let obs = belief.observations();

    let log_post = |p: &[f64]| -> f64 {
        let h = from_params(&base, p);
        let prior: f64 = p.iter().zip(&center).map(|(x, c)| normal::log_pdf(*x, *c, prior_var)).sum();
        match GpPosterior::from_observations(h, features.clone(), obs) {
            Ok(post) => {
                let ll = post.log_likelihood();
                if ll.is_finite() {
                    ll + prior
                } else {
                    f64::NEG_INFINITY
                }
            }
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mut x = to_params(&start);
    let mut flagged = 0;
    let mut samples = Vec::with_capacity(cfg.n_samples);
    for sweep in 0..cfg.burn_in + cfg.n_samples {
        for i in 0..x.len() {
            let mut probe = x.clone();
            let (v, ok) = slice_sample(
                x[i],
                |v| {
                    probe[i] = v;
                    log_post(&probe)
                },
                cfg.step,
                cfg.max_attempts,
                rng,
            );
            x[i] = v;
            if !ok {
                flagged += 1;
            }
        }
        if sweep >= cfg.burn_in {
            samples.push(from_params(&base, &x));
        }
    }
    Ok(SliceOutcome { samples, flagged })
}
