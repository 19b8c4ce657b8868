//! Freeze-Thaw Gaussian-process belief over learning curves.
//!
//! Every curve is modelled as `y_k(t) = f_k + g_k(t)`: an asymptote `f_k`
//! drawn from a GP over configurations plus a decaying deviation `g_k` drawn
//! from the Freeze-Thaw time kernel. Conditioned on the asymptotes, curves are
//! independent, which gives the block structure exploited by
//! [`GpPosterior`].

mod belief;
mod kernel;
mod posterior;
mod slice;
mod stationary;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use self::belief::BeliefState;
pub use self::kernel::{ft_kernel, se_kernel};
pub use self::posterior::{GpPosterior, JITTER_FLOOR};
pub use self::slice::{slice_sample, slice_sample_hypers, SliceConfig, SliceOutcome};
pub use self::stationary::StationaryBelief;

/// A univariate Gaussian summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianScalar {
    pub mean: f64,
    pub std: f64,
}

impl GaussianScalar {
    pub fn new(mean: f64, std: f64) -> Self {
        debug_assert!(std >= 0.0);
        GaussianScalar { mean, std }
    }

    /// Builds from a variance, clamping tiny negative round-off to zero.
    pub fn from_variance(mean: f64, var: f64) -> Self {
        debug_assert!(var >= -1e-10, "variance {var} is negative");
        GaussianScalar {
            mean,
            std: var.max(0.0).sqrt(),
        }
    }

    pub fn variance(&self) -> f64 {
        self.std * self.std
    }

    /// Moment-matched Gaussian of an equally weighted mixture.
    pub fn mixture(parts: &[GaussianScalar]) -> GaussianScalar {
        let n = parts.len() as f64;
        let mean = parts.iter().map(|g| g.mean).sum::<f64>() / n;
        let second = parts
            .iter()
            .map(|g| g.variance() + g.mean * g.mean)
            .sum::<f64>()
            / n;
        GaussianScalar::from_variance(mean, (second - mean * mean).max(0.0))
    }
}

/// Covariance over configurations, i.e. over curve asymptotes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConfigKernel {
    /// Asymptotes are independent with prior variance `magnitude²`.
    Independent { magnitude: f64 },
    /// Squared-exponential kernel over the arms' feature vectors.
    SquaredExponential { lengthscale: f64, magnitude: f64 },
}

impl ConfigKernel {
    pub fn magnitude(&self) -> f64 {
        match *self {
            ConfigKernel::Independent { magnitude } => magnitude,
            ConfigKernel::SquaredExponential { magnitude, .. } => magnitude,
        }
    }
}

/// Hyper-parameters of the Freeze-Thaw GP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHypers {
    pub ft_alpha: f64,
    pub ft_beta: f64,
    pub time_magnitude: f64,
    pub config: ConfigKernel,
    /// Prior mean of the asymptotes. `None` uses the mean of all losses
    /// observed so far.
    #[serde(default)]
    pub prior_mean: Option<f64>,
    pub noise_std: f64,
}

impl Default for GpHypers {
    fn default() -> Self {
        GpHypers {
            ft_alpha: 1.5,
            ft_beta: 5.0,
            time_magnitude: 0.3,
            config: ConfigKernel::Independent { magnitude: 0.3 },
            prior_mean: None,
            noise_std: 1e-3,
        }
    }
}

impl GpHypers {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ft_alpha", self.ft_alpha),
            ("ft_beta", self.ft_beta),
            ("time_magnitude", self.time_magnitude),
            ("config magnitude", self.config.magnitude()),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if let ConfigKernel::SquaredExponential { lengthscale, .. } = self.config {
            if !(lengthscale > 0.0 && lengthscale.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "lengthscale must be positive, got {lengthscale}"
                )));
            }
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise_std must be non-negative, got {}",
                self.noise_std
            )));
        }
        if let Some(m) = self.prior_mean {
            if !m.is_finite() {
                return Err(Error::InvalidParameter("prior_mean must be finite".into()));
            }
        }
        Ok(())
    }

    /// Time-kernel covariance between epochs `t` and `t2`.
    pub fn time_cov(&self, t: f64, t2: f64) -> f64 {
        ft_kernel(t, t2, self.ft_alpha, self.ft_beta, self.time_magnitude)
    }
}

/// A posterior over every arm's learning curve that can be queried and
/// updated one observation at a time.
pub trait CurveBelief {
    fn num_arms(&self) -> usize;

    /// Observations recorded for `arm`, i.e. the arm's current epoch `t₀`.
    fn observed_epochs(&self, arm: usize) -> usize;

    /// Predictive distribution of the latent (noise-free) loss of `arm` at
    /// 1-based `epoch`.
    fn predict(&self, arm: usize, epoch: usize) -> GaussianScalar;

    fn predict_mean(&self, arm: usize, epoch: usize) -> f64 {
        self.predict(arm, epoch).mean
    }

    /// Posterior over the arm's asymptotic loss.
    fn asymptote(&self, arm: usize) -> GaussianScalar;

    /// Records the next epoch's loss of `arm`.
    fn observe(&mut self, arm: usize, loss: f64) -> Result<()>;
}

/// Expected losses `E[y(t₀ + t)]` for `t = 1..=horizon`.
pub fn expected_future_curve<B: CurveBelief + ?Sized>(
    belief: &B,
    arm: usize,
    horizon: usize,
) -> Vec<f64> {
    let t0 = belief.observed_epochs(arm);
    (1..=horizon)
        .map(|t| belief.predict_mean(arm, t0 + t))
        .collect()
}

/// Offset `τ` (1-based) at which the expected future curve is lowest, and
/// the predictive Gaussian there, used as a stand-in for the arm's best loss
/// over the next `horizon` epochs. Earliest offset wins ties.
pub fn future_best<B: CurveBelief + ?Sized>(
    belief: &B,
    arm: usize,
    horizon: usize,
) -> Result<(usize, GaussianScalar)> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be at least 1".into()));
    }
    let curve = expected_future_curve(belief, arm, horizon);
    let mut tau = 1;
    let mut best = curve[0];
    for (i, &v) in curve.iter().enumerate().skip(1) {
        if v < best {
            best = v;
            tau = i + 1;
        }
    }
    let t0 = belief.observed_epochs(arm);
    Ok((tau, belief.predict(arm, t0 + tau)))
}
