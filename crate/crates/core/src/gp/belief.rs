use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use super::slice::{slice_sample_hypers, SliceConfig, SliceOutcome};
use super::{CurveBelief, GaussianScalar, GpHypers, GpPosterior};
use crate::error::{Error, Result};

/// Posterior over all curves given the observed trajectory.
///
/// Holds one [`GpPosterior`] per hyper-parameter setting. With a single
/// setting this is the plain GP posterior; with a bag of slice-sampled
/// settings every prediction is the moment-matched mixture over the bag.
#[derive(Debug, Clone)]
pub struct BeliefState {
    base: GpHypers,
    features: Option<Arc<Vec<Vec<f64>>>>,
    observations: Vec<Vec<f64>>,
    components: Vec<GpPosterior>,
}

impl BeliefState {
    pub fn new(num_arms: usize, hypers: GpHypers, features: Option<Vec<Vec<f64>>>) -> Result<Self> {
        let features = features.map(Arc::new);
        let post = GpPosterior::new(num_arms, hypers, features.clone())?;
        Ok(BeliefState {
            base: hypers,
            features,
            observations: vec![Vec::new(); num_arms],
            components: vec![post],
        })
    }

    /// Belief with the given observations, built from scratch.
    pub fn from_observations(
        hypers: GpHypers,
        features: Option<Vec<Vec<f64>>>,
        observations: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let features = features.map(Arc::new);
        let post = GpPosterior::from_observations(hypers, features.clone(), &observations)?;
        Ok(BeliefState {
            base: hypers,
            features,
            observations,
            components: vec![post],
        })
    }

    /// Replaces the hyper-parameter bag and rebuilds every component.
    pub fn set_hypers(&mut self, bag: &[GpHypers]) -> Result<()> {
        if bag.is_empty() {
            return Err(Error::InvalidParameter("hyper-parameter bag is empty".into()));
        }
        self.components = bag
            .iter()
            .map(|h| GpPosterior::from_observations(*h, self.features.clone(), &self.observations))
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// A copy with every cache recomputed from the raw observations.
    pub fn rebuilt(&self) -> Result<Self> {
        let mut b = self.clone();
        b.set_hypers(&self.hypers())?;
        Ok(b)
    }

    /// Draws a fresh hyper-parameter bag by slice sampling, starting from the
    /// last sample currently held.
    pub fn resample<R: Rng + ?Sized>(&mut self, cfg: &SliceConfig, rng: &mut R) -> Result<SliceOutcome> {
        let out = slice_sample_hypers(self, cfg, rng)?;
        self.set_hypers(&out.samples)?;
        Ok(out)
    }

    /// Hyper-parameters the belief was created with; the sampler's prior is
    /// centred on them.
    pub fn base_hypers(&self) -> &GpHypers {
        &self.base
    }

    pub fn hypers(&self) -> Vec<GpHypers> {
        self.components.iter().map(|c| *c.hypers()).collect()
    }

    pub fn components(&self) -> &[GpPosterior] {
        &self.components
    }

    pub fn features(&self) -> Option<&Arc<Vec<Vec<f64>>>> {
        self.features.as_ref()
    }

    pub fn observations(&self) -> &[Vec<f64>] {
        &self.observations
    }

    pub fn num_observations(&self) -> usize {
        self.observations.iter().map(Vec::len).sum()
    }

    /// Joint covariance of the observations under the first setting.
    pub fn joint_cov(&self) -> DMatrix<f64> {
        self.components[0].joint_cov()
    }

    /// Log marginal likelihood, averaged over the bag.
    pub fn log_likelihood(&self) -> f64 {
        let n = self.components.len() as f64;
        self.components.iter().map(GpPosterior::log_likelihood).sum::<f64>() / n
    }

    pub fn posterior_asymptote(&self) -> Vec<GaussianScalar> {
        (0..self.observations.len()).map(|k| self.asymptote(k)).collect()
    }

    pub fn predict_seen(&self, arm: usize, epoch: usize) -> GaussianScalar {
        self.mix(|c| c.predict_seen(arm, epoch))
    }

    pub fn predict_unseen(&self, arm: usize, epoch: usize) -> GaussianScalar {
        self.mix(|c| c.predict_unseen(arm, epoch))
    }

    pub fn update(&mut self, arm: usize, loss: f64) -> Result<()> {
        if arm >= self.observations.len() {
            return Err(Error::ArmOutOfRange { arm, arms: self.observations.len() });
        }
        for c in &mut self.components {
            c.update(arm, loss)?;
        }
        self.observations[arm].push(loss);
        Ok(())
    }

    fn mix(&self, f: impl Fn(&GpPosterior) -> GaussianScalar) -> GaussianScalar {
        if let [only] = self.components.as_slice() {
            return f(only);
        }
        let parts: Vec<_> = self.components.iter().map(f).collect();
        GaussianScalar::mixture(&parts)
    }
}

impl CurveBelief for BeliefState {
    fn num_arms(&self) -> usize {
        self.observations.len()
    }

    fn observed_epochs(&self, arm: usize) -> usize {
        self.observations[arm].len()
    }

    fn predict(&self, arm: usize, epoch: usize) -> GaussianScalar {
        self.mix(|c| c.predict(arm, epoch))
    }

    fn predict_mean(&self, arm: usize, epoch: usize) -> f64 {
        let n = self.components.len() as f64;
        self.components.iter().map(|c| c.predict_mean(arm, epoch)).sum::<f64>() / n
    }

    fn asymptote(&self, arm: usize) -> GaussianScalar {
        self.mix(|c| c.asymptote(arm))
    }

    fn observe(&mut self, arm: usize, loss: f64) -> Result<()> {
        self.update(arm, loss)
    }
}
