use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{ConfigKernel, GaussianScalar, GpHypers};
use crate::error::{Error, Result};
use crate::gp::kernel::se_kernel;

/// Smallest pivot accepted when a curve's Cholesky factor is extended.
/// Pivots below it are raised to it.
pub const JITTER_FLOOR: f64 = 1e-10;

/// Cholesky factor of one curve's `K_t + noise²·I`, grown one epoch at a time,
/// together with the solves the asymptote posterior needs.
#[derive(Debug, Clone, Default)]
struct CurveFactor {
    y: Vec<f64>,
    /// Row `i` holds `L[i][0..=i]`.
    chol: Vec<Vec<f64>>,
    kinv_one: Vec<f64>,
    kinv_y: Vec<f64>,
    /// `1ᵀ K⁻¹ 1`
    lambda: f64,
    /// `1ᵀ K⁻¹ y`
    one_kinv_y: f64,
    /// `yᵀ K⁻¹ y`
    y_kinv_y: f64,
    log_det: f64,
}

impl CurveFactor {
    fn len(&self) -> usize {
        self.y.len()
    }

    fn push(&mut self, hypers: &GpHypers, loss: f64) {
        let n = self.len();
        let t_new = (n + 1) as f64;
        let k: Vec<f64> = (0..n)
            .map(|i| hypers.time_cov((i + 1) as f64, t_new))
            .collect();
        let x = forward(&self.chol, &k);
        let kss = hypers.time_cov(t_new, t_new) + hypers.noise_std * hypers.noise_std;
        let d2 = (kss - x.iter().map(|v| v * v).sum::<f64>()).max(JITTER_FLOOR);
        let mut row = x;
        row.push(d2.sqrt());
        self.log_det += d2.ln();
        self.chol.push(row);
        self.y.push(loss);

        let ones = vec![1.0; n + 1];
        self.kinv_one = backward(&self.chol, &forward(&self.chol, &ones));
        self.kinv_y = backward(&self.chol, &forward(&self.chol, &self.y));
        self.lambda = self.kinv_one.iter().sum();
        self.one_kinv_y = self.kinv_y.iter().sum();
        self.y_kinv_y = self.y.iter().zip(&self.kinv_y).map(|(a, b)| a * b).sum();
    }
}

/// Solves `L x = b` for lower-triangular `L`.
fn forward(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(b.len());
    for (i, row) in l.iter().enumerate() {
        let s: f64 = row[..i].iter().zip(&x).map(|(a, b)| a * b).sum();
        x.push((b[i] - s) / row[i]);
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
fn backward(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = ((i + 1)..n).map(|j| l[j][i] * x[j]).sum();
        x[i] = (b[i] - s) / l[i][i];
    }
    x
}

/// Posterior over the asymptotes `f`.
#[derive(Debug, Clone)]
enum AsymptoteCov {
    /// Independent asymptotes: `C` is diagonal.
    Diagonal(Vec<f64>),
    Full(DMatrix<f64>),
}

impl AsymptoteCov {
    fn diag(&self, k: usize) -> f64 {
        match self {
            AsymptoteCov::Diagonal(c) => c[k],
            AsymptoteCov::Full(c) => c[(k, k)],
        }
    }
}

/// Exact Freeze-Thaw GP posterior for one hyper-parameter setting.
///
/// With `Λ = Oᵀ K_t⁻¹ O`, `γ = Oᵀ K_t⁻¹ (y − O m)` and
/// `C = (K_x⁻¹ + Λ)⁻¹`, the asymptotes are `N(m + Cγ, C)`. `Λ` is diagonal
/// because `K_t` is block diagonal, so `C` is computed as
/// `K_x − K_x S (I + S K_x S)⁻¹ S K_x` with `S = Λ^½`, which never inverts
/// `K_x`.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    hypers: GpHypers,
    features: Option<Arc<Vec<Vec<f64>>>>,
    curves: Vec<CurveFactor>,
    mean: f64,
    gamma: Vec<f64>,
    cov: AsymptoteCov,
    mu: Vec<f64>,
    /// `log |I + S K_x S|`
    log_det_b: f64,
    /// `γᵀ C γ`
    gamma_c_gamma: f64,
}

impl GpPosterior {
    /// Prior over `num_arms` curves. The squared-exponential configuration
    /// kernel needs one feature vector per arm.
    pub fn new(
        num_arms: usize,
        hypers: GpHypers,
        features: Option<Arc<Vec<Vec<f64>>>>,
    ) -> Result<Self> {
        hypers.validate()?;
        if num_arms == 0 {
            return Err(Error::InvalidParameter("at least one arm is required".into()));
        }
        if let ConfigKernel::SquaredExponential { .. } = hypers.config {
            match &features {
                Some(f) if f.len() == num_arms => {}
                _ => {
                    return Err(Error::InvalidParameter(
                        "squared-exponential configuration kernel needs one feature vector per arm"
                            .into(),
                    ))
                }
            }
        }
        let mut post = GpPosterior {
            hypers,
            features,
            curves: vec![CurveFactor::default(); num_arms],
            mean: 0.0,
            gamma: vec![0.0; num_arms],
            cov: AsymptoteCov::Diagonal(vec![0.0; num_arms]),
            mu: vec![0.0; num_arms],
            log_det_b: 0.0,
            gamma_c_gamma: 0.0,
        };
        post.refresh()?;
        Ok(post)
    }

    /// Builds the posterior from per-arm observations (epochs `1..=n_k`).
    pub fn from_observations(
        hypers: GpHypers,
        features: Option<Arc<Vec<Vec<f64>>>>,
        observations: &[Vec<f64>],
    ) -> Result<Self> {
        let mut post = Self::new(observations.len(), hypers, features)?;
        for (factor, obs) in post.curves.iter_mut().zip(observations) {
            for &y in obs {
                factor.push(&hypers, y);
            }
        }
        post.refresh()?;
        Ok(post)
    }

    pub fn hypers(&self) -> &GpHypers {
        &self.hypers
    }

    pub fn features(&self) -> Option<&Arc<Vec<Vec<f64>>>> {
        self.features.as_ref()
    }

    pub fn num_arms(&self) -> usize {
        self.curves.len()
    }

    pub fn num_observations(&self) -> usize {
        self.curves.iter().map(CurveFactor::len).sum()
    }

    pub fn observations(&self, arm: usize) -> &[f64] {
        &self.curves[arm].y
    }

    pub fn observed_epochs(&self, arm: usize) -> usize {
        self.curves[arm].len()
    }

    /// Prior mean `m` currently in use.
    pub fn prior_mean(&self) -> f64 {
        self.mean
    }

    /// `Λ` diagonal.
    pub fn lambda(&self) -> Vec<f64> {
        self.curves.iter().map(|c| c.lambda).collect()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// `C = (K_x⁻¹ + Λ)⁻¹` as a dense matrix.
    pub fn asymptote_cov(&self) -> DMatrix<f64> {
        match &self.cov {
            AsymptoteCov::Diagonal(c) => DMatrix::from_diagonal(&DVector::from_column_slice(c)),
            AsymptoteCov::Full(c) => c.clone(),
        }
    }

    /// Prior covariance between the asymptotes of arms `a` and `b`.
    pub fn config_cov(&self, a: usize, b: usize) -> f64 {
        match self.hypers.config {
            ConfigKernel::Independent { magnitude } => {
                if a == b {
                    magnitude * magnitude
                } else {
                    0.0
                }
            }
            ConfigKernel::SquaredExponential { lengthscale, magnitude } => {
                let f = self.features.as_ref().expect("features checked at construction");
                se_kernel(&f[a], &f[b], lengthscale, magnitude)
            }
        }
    }

    /// Appends the next epoch's loss of `arm`.
    pub fn update(&mut self, arm: usize, loss: f64) -> Result<()> {
        if arm >= self.num_arms() {
            return Err(Error::ArmOutOfRange { arm, arms: self.num_arms() });
        }
        if !loss.is_finite() {
            return Err(Error::InvalidParameter(format!("loss {loss} is not finite")));
        }
        self.curves[arm].push(&self.hypers, loss);
        self.refresh()
    }

    fn refresh(&mut self) -> Result<()> {
        let k = self.num_arms();
        self.mean = match self.hypers.prior_mean {
            Some(m) => m,
            None => {
                let n = self.num_observations();
                if n == 0 {
                    0.0
                } else {
                    self.curves.iter().flat_map(|c| c.y.iter()).sum::<f64>() / n as f64
                }
            }
        };
        let m = self.mean;
        self.gamma = self
            .curves
            .iter()
            .map(|c| c.one_kinv_y - c.lambda * m)
            .collect();

        match self.hypers.config {
            ConfigKernel::Independent { magnitude } => {
                let kx = magnitude * magnitude;
                let c: Vec<f64> = self.curves.iter().map(|f| kx / (1.0 + kx * f.lambda)).collect();
                self.log_det_b = self.curves.iter().map(|f| (kx * f.lambda).ln_1p()).sum();
                self.mu = (0..k).map(|i| m + c[i] * self.gamma[i]).collect();
                self.gamma_c_gamma = (0..k).map(|i| c[i] * self.gamma[i] * self.gamma[i]).sum();
                self.cov = AsymptoteCov::Diagonal(c);
            }
            ConfigKernel::SquaredExponential { .. } => {
                let kx = DMatrix::from_fn(k, k, |a, b| self.config_cov(a, b));
                let s = DVector::from_iterator(k, self.curves.iter().map(|f| f.lambda.max(0.0).sqrt()));
                let mut b = DMatrix::from_fn(k, k, |i, j| s[i] * kx[(i, j)] * s[j]);
                for i in 0..k {
                    b[(i, i)] += 1.0;
                }
                let chol = b
                    .cholesky()
                    .ok_or(Error::NotPositiveDefinite { jitter: 0.0 })?;
                self.log_det_b = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
                // C = Kx − Kx S B⁻¹ S Kx
                let skx = DMatrix::from_fn(k, k, |i, j| s[i] * kx[(i, j)]);
                let sol = chol.solve(&skx);
                let c = &kx - skx.transpose() * sol;
                let c = (&c + c.transpose()) * 0.5;
                let g = DVector::from_column_slice(&self.gamma);
                let cg = &c * &g;
                self.mu = cg.iter().map(|v| m + v).collect();
                self.gamma_c_gamma = g.dot(&cg);
                self.cov = AsymptoteCov::Full(c);
            }
        }
        Ok(())
    }

    /// Log marginal likelihood of all observations, assembled from the
    /// per-curve factors and the asymptote posterior.
    pub fn log_likelihood(&self) -> f64 {
        let m = self.mean;
        let n = self.num_observations() as f64;
        let quad: f64 = self
            .curves
            .iter()
            .map(|c| c.y_kinv_y - 2.0 * m * c.one_kinv_y + m * m * c.lambda)
            .sum();
        let log_det_t: f64 = self.curves.iter().map(|c| c.log_det).sum();
        -0.5 * quad + 0.5 * self.gamma_c_gamma
            - 0.5 * self.log_det_b
            - 0.5 * log_det_t
            - 0.5 * n * (2.0 * PI).ln()
    }

    /// Posterior over every arm's asymptote: mean `m + Cγ`, std from `diag C`.
    pub fn posterior_asymptote(&self) -> Vec<GaussianScalar> {
        (0..self.num_arms()).map(|k| self.asymptote(k)).collect()
    }

    pub fn asymptote(&self, arm: usize) -> GaussianScalar {
        GaussianScalar::from_variance(self.mu[arm], self.cov.diag(arm))
    }

    /// Latent loss of an observed curve at `epoch`:
    /// mean `k*ᵀK⁻¹y + Ω μ`, variance `k** − k*ᵀK⁻¹k* + Ω² C`,
    /// with `Ω = 1 − k*ᵀK⁻¹1`.
    pub fn predict_seen(&self, arm: usize, epoch: usize) -> GaussianScalar {
        let c = &self.curves[arm];
        debug_assert!(c.len() > 0);
        let t = epoch as f64;
        let ks: Vec<f64> = (0..c.len())
            .map(|i| self.hypers.time_cov((i + 1) as f64, t))
            .collect();
        let omega = 1.0 - dot(&ks, &c.kinv_one);
        let mean = dot(&ks, &c.kinv_y) + omega * self.mu[arm];
        let v = forward(&c.chol, &ks);
        let var = self.hypers.time_cov(t, t) - dot(&v, &v) + omega * omega * self.cov.diag(arm);
        GaussianScalar::from_variance(mean, var)
    }

    /// Mean-only version of [`predict_seen`](Self::predict_seen), `O(n)`.
    fn predict_seen_mean(&self, arm: usize, epoch: usize) -> f64 {
        let c = &self.curves[arm];
        let t = epoch as f64;
        let mut a = 0.0;
        let mut b = 0.0;
        for i in 0..c.len() {
            let k = self.hypers.time_cov((i + 1) as f64, t);
            a += k * c.kinv_y[i];
            b += k * c.kinv_one[i];
        }
        a + (1.0 - b) * self.mu[arm]
    }

    /// Latent loss of a curve with no observations: its asymptote posterior
    /// plus the prior time-kernel variance.
    pub fn predict_unseen(&self, arm: usize, epoch: usize) -> GaussianScalar {
        let t = epoch as f64;
        GaussianScalar::from_variance(
            self.mu[arm],
            self.cov.diag(arm) + self.hypers.time_cov(t, t),
        )
    }

    pub fn predict(&self, arm: usize, epoch: usize) -> GaussianScalar {
        if self.curves[arm].len() == 0 {
            self.predict_unseen(arm, epoch)
        } else {
            self.predict_seen(arm, epoch)
        }
    }

    pub fn predict_mean(&self, arm: usize, epoch: usize) -> f64 {
        if self.curves[arm].len() == 0 {
            self.mu[arm]
        } else {
            self.predict_seen_mean(arm, epoch)
        }
    }

    /// `K_t + O K_x Oᵀ + noise²·I` over all observations, arm-major and
    /// epoch-ascending.
    pub fn joint_cov(&self) -> DMatrix<f64> {
        let index: Vec<(usize, usize)> = self
            .curves
            .iter()
            .enumerate()
            .flat_map(|(k, c)| (1..=c.len()).map(move |t| (k, t)))
            .collect();
        let n = index.len();
        let noise = self.hypers.noise_std * self.hypers.noise_std;
        DMatrix::from_fn(n, n, |i, j| {
            let (a, s) = index[i];
            let (b, t) = index[j];
            let mut v = self.config_cov(a, b);
            if a == b {
                v += self.hypers.time_cov(s as f64, t as f64);
                if s == t {
                    v += noise;
                }
            }
            v
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
