//! Synthetic learning curves drawn from the Freeze-Thaw generative model.
//!
//! Each set has `K` arms on an even grid over `[0, 1]`. Asymptotes come from
//! a zero-mean squared-exponential GP over that grid, and each arm's curve is
//! its asymptote plus a draw from the Freeze-Thaw time kernel and a little
//! observation noise.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::curve_env::CurveSet;
use crate::error::{Error, Result};
use crate::gp::{ConfigKernel, GpHypers};

pub use crate::gp::se_kernel;

/// Jitter added to a covariance diagonal on the first factorization attempt.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried before giving up.
pub const JITTER_MAX: f64 = 1e-6;

/// Lower and upper end of the range rescaled sets are mapped into.
pub const RESCALE_RANGE: (f64, f64) = (0.01, 0.99);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub arms: usize,
    /// Curve length in budget units.
    pub epochs: usize,
    pub asym_lengthscale: f64,
    pub asym_magnitude: f64,
    pub ft_alpha: f64,
    pub ft_beta: f64,
    /// May be zero, which makes every curve flat at its asymptote.
    pub ft_magnitude: f64,
    pub noise_std: f64,
    pub seed: u64,
    /// Map the whole set affinely into [`RESCALE_RANGE`].
    pub rescale: bool,
    /// Orient each curve's deviation so it starts above its asymptote and
    /// decays towards it. The sign flip leaves every epoch's variance
    /// unchanged.
    pub decaying: bool,
}

impl Default for SynthSpec {
    /// 84 arms, 288 epochs aggregated into 48 units of 6, α = 1.5, β = 5,
    /// decay magnitude 10, asymptote magnitude 1 with length-scale 0.8.
    fn default() -> Self {
        SynthSpec {
            arms: 84,
            epochs: 48,
            asym_lengthscale: 0.8,
            asym_magnitude: 1.0,
            ft_alpha: 1.5,
            ft_beta: 5.0,
            ft_magnitude: 10.0,
            noise_std: 1e-3,
            seed: 0,
            rescale: true,
            decaying: true,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.arms == 0 || self.epochs == 0 {
            return Err(Error::InvalidParameter("arms and epochs must be at least 1".into()));
        }
        for (name, v) in [
            ("asym_lengthscale", self.asym_lengthscale),
            ("asym_magnitude", self.asym_magnitude),
            ("ft_alpha", self.ft_alpha),
            ("ft_beta", self.ft_beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("ft_magnitude", self.ft_magnitude), ("noise_std", self.noise_std)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Evenly spaced 1-D arm features on `[0, 1]`.
    pub fn features(&self) -> Vec<Vec<f64>> {
        if self.arms == 1 {
            return vec![vec![0.5]];
        }
        let step = 1.0 / (self.arms - 1) as f64;
        (0..self.arms).map(|k| vec![k as f64 * step]).collect()
    }

    /// GP hyper-parameters matching this generator after the affine map
    /// `loss ↦ scale·loss + offset`, with independent asymptotes.
    pub fn belief_hypers(&self, map: AffineMap) -> GpHypers {
        GpHypers {
            ft_alpha: self.ft_alpha,
            ft_beta: self.ft_beta,
            time_magnitude: (self.ft_magnitude * map.scale).max(f64::MIN_POSITIVE.sqrt()),
            config: ConfigKernel::Independent {
                magnitude: self.asym_magnitude * map.scale,
            },
            prior_mean: Some(map.offset),
            noise_std: self.noise_std * map.scale,
        }
    }
}

/// `x ↦ scale·x + offset` with `scale > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub offset: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap { scale: 1.0, offset: 0.0 };

    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.offset
    }
}

/// A generated set together with the map applied to its raw draws.
#[derive(Debug, Clone)]
pub struct SyntheticSet {
    pub curves: CurveSet,
    pub map: AffineMap,
}

/// Cholesky factor of `cov`, adding diagonal jitter from [`JITTER_START`]
/// up to [`JITTER_MAX`] in factors of ten.
pub fn jittered_cholesky(cov: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let mut jitter = JITTER_START;
    loop {
        let mut m = cov.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += jitter;
        }
        if let Some(c) = m.cholesky() {
            return Ok(c);
        }
        if jitter >= JITTER_MAX {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        jitter *= 10.0;
    }
}

fn draw_mvn(chol: &Cholesky<f64, Dyn>, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let n = chol.l().nrows();
    let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    chol.l() * z
}

/// Generates a curve set. Deterministic in `spec.seed`.
pub fn generate(spec: &SynthSpec) -> Result<SyntheticSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let features = spec.features();
    let k = spec.arms;

    let asym_cov = DMatrix::from_fn(k, k, |i, j| {
        se_kernel(&features[i], &features[j], spec.asym_lengthscale, spec.asym_magnitude)
    });
    let asymptotes = draw_mvn(&jittered_cholesky(&asym_cov)?, &mut rng);

    let time_chol = if spec.ft_magnitude > 0.0 {
        let n = spec.epochs;
        let cov = DMatrix::from_fn(n, n, |s, t| {
            crate::gp::ft_kernel((s + 1) as f64, (t + 1) as f64, spec.ft_alpha, spec.ft_beta, spec.ft_magnitude)
        });
        Some(jittered_cholesky(&cov)?)
    } else {
        None
    };

    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(k);
    for f in asymptotes.iter() {
        let mut decay = match &time_chol {
            Some(c) => draw_mvn(c, &mut rng),
            None => DVector::zeros(spec.epochs),
        };
        if spec.decaying && decay[0] < 0.0 {
            decay.neg_mut();
        }
        let curve = decay
            .iter()
            .map(|d| {
                let noise = if spec.noise_std > 0.0 {
                    spec.noise_std * Distribution::<f64>::sample(&StandardNormal, &mut rng)
                } else {
                    0.0
                };
                f + d + noise
            })
            .collect();
        raw.push(curve);
    }

    let map = if spec.rescale {
        let (lo, hi) = raw
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let (a, b) = RESCALE_RANGE;
        if hi > lo {
            let scale = (b - a) / (hi - lo);
            AffineMap { scale, offset: a - scale * lo }
        } else {
            AffineMap { scale: 1.0, offset: 0.5 * (a + b) - lo }
        }
    } else {
        AffineMap::IDENTITY
    };
    for curve in &mut raw {
        for v in curve.iter_mut() {
            *v = map.apply(*v);
        }
    }

    let ids = (0..k as u64).collect();
    let mut curves = CurveSet::with_ids(raw, ids, Some(features))?
        .with_reference_hypers(spec.belief_hypers(map));
    if spec.rescale {
        curves = curves.mark_normalized()?;
    }
    Ok(SyntheticSet { curves, map })
}

/// Generates a curve set, discarding the affine map.
pub fn sample_curveset(spec: &SynthSpec) -> Result<CurveSet> {
    generate(spec).map(|s| s.curves)
}
