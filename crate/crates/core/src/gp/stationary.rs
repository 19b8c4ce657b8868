use serde::{Deserialize, Serialize};

use super::{CurveBelief, GaussianScalar};
use crate::error::{Error, Result};

/// Conjugate normal belief for arms whose losses are i.i.d. draws around a
/// fixed mean: every epoch has the same latent value, and its posterior
/// variance shrinks with each pull regardless of the values observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryBelief {
    prior_mean: f64,
    prior_var: f64,
    noise_var: f64,
    counts: Vec<usize>,
    sums: Vec<f64>,
}

impl StationaryBelief {
    pub fn new(num_arms: usize, prior_mean: f64, prior_std: f64, noise_std: f64) -> Result<Self> {
        if !(prior_std > 0.0) || !(noise_std > 0.0) {
            return Err(Error::InvalidParameter(
                "stationary belief needs positive prior and noise std".into(),
            ));
        }
        Ok(StationaryBelief {
            prior_mean,
            prior_var: prior_std * prior_std,
            noise_var: noise_std * noise_std,
            counts: vec![0; num_arms],
            sums: vec![0.0; num_arms],
        })
    }
}

impl CurveBelief for StationaryBelief {
    fn num_arms(&self) -> usize {
        self.counts.len()
    }

    fn observed_epochs(&self, arm: usize) -> usize {
        self.counts[arm]
    }

    fn predict(&self, arm: usize, _epoch: usize) -> GaussianScalar {
        self.asymptote(arm)
    }

    fn asymptote(&self, arm: usize) -> GaussianScalar {
        let precision = 1.0 / self.prior_var + self.counts[arm] as f64 / self.noise_var;
        let var = 1.0 / precision;
        let mean = var * (self.prior_mean / self.prior_var + self.sums[arm] / self.noise_var);
        GaussianScalar::from_variance(mean, var)
    }

    fn observe(&mut self, arm: usize, loss: f64) -> Result<()> {
        if arm >= self.counts.len() {
            return Err(Error::ArmOutOfRange { arm, arms: self.counts.len() });
        }
        self.counts[arm] += 1;
        self.sums[arm] += loss;
        Ok(())
    }
}
