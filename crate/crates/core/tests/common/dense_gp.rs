//! Dense joint-Gaussian reference for the Freeze-Thaw posterior: stack
//! every observation, build its full covariance, and condition.

use bhpt::gp::{ft_kernel, se_kernel, ConfigKernel, GpHypers};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub hypers: GpHypers,
    pub features: Option<Vec<Vec<f64>>>,
    pub obs: Vec<Vec<f64>>,
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let k = rng.gen_range(1..=3);
    let se = rng.gen_bool(0.5);
    let features = se.then(|| (0..k).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect());
    let config = if se {
        ConfigKernel::SquaredExponential { lengthscale: rng.gen_range(0.2..2.0), magnitude: rng.gen_range(0.1..1.5) }
    } else {
        ConfigKernel::Independent { magnitude: rng.gen_range(0.1..1.5) }
    };
    let hypers = GpHypers {
        ft_alpha: rng.gen_range(0.3..3.0),
        ft_beta: rng.gen_range(0.3..8.0),
        time_magnitude: rng.gen_range(0.1..1.5),
        config,
        prior_mean: if rng.gen_bool(0.5) { Some(rng.gen_range(-1.0..1.0)) } else { None },
        noise_std: rng.gen_range(0.02..0.5),
    };
    let obs = (0..k)
        .map(|_| {
            let n = rng.gen_range(0..=5);
            (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()
        })
        .collect();
    Instance { hypers, features, obs }
}

fn config_cov(inst: &Instance, a: usize, b: usize) -> f64 {
    match inst.hypers.config {
        ConfigKernel::Independent { magnitude } => {
            if a == b {
                magnitude * magnitude
            } else {
                0.0
            }
        }
        ConfigKernel::SquaredExponential { lengthscale, magnitude } => {
            let f = inst.features.as_ref().unwrap();
            se_kernel(&f[a], &f[b], lengthscale, magnitude)
        }
    }
}

fn time_cov(inst: &Instance, s: usize, t: usize) -> f64 {
    let h = &inst.hypers;
    ft_kernel(s as f64, t as f64, h.ft_alpha, h.ft_beta, h.time_magnitude)
}

pub struct Dense {
    /// (arm, epoch) of each stacked observation.
    index: Vec<(usize, usize)>,
    y: DVector<f64>,
    m: f64,
    sigma: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
}

pub fn dense(inst: &Instance) -> Dense {
    let index: Vec<(usize, usize)> = inst
        .obs
        .iter()
        .enumerate()
        .flat_map(|(k, ys)| (1..=ys.len()).map(move |t| (k, t)))
        .collect();
    let y = DVector::from_iterator(index.len(), inst.obs.iter().flatten().copied());
    let m = inst.hypers.prior_mean.unwrap_or_else(|| if y.is_empty() { 0.0 } else { y.mean() });
    let n = index.len();
    let noise = inst.hypers.noise_std.powi(2);
    let sigma = DMatrix::from_fn(n, n, |i, j| {
        let ((a, s), (b, t)) = (index[i], index[j]);
        let mut c = config_cov(inst, a, b);
        if a == b {
            c += time_cov(inst, s, t);
            if s == t {
                c += noise;
            }
        }
        c
    });
    let sigma_inv = match sigma.clone().cholesky() {
        Some(c) => c.inverse(),
        None => DMatrix::zeros(0, 0),
    };
    Dense { index, y, m, sigma, sigma_inv }
}

impl Dense {
    pub fn log_likelihood(&self) -> f64 {
        let n = self.y.len();
        if n == 0 {
            return 0.0;
        }
        let r = self.y.add_scalar(-self.m);
        let quad = (r.transpose() * &self.sigma_inv * &r)[0];
        let log_det = self.sigma.clone().cholesky().unwrap().l().diagonal().map(f64::ln).sum() * 2.0;
        -0.5 * quad - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
    }

    /// Conditions a latent quantity with prior variance `prior_var` and
    /// covariance `cross` with the stacked observations.
    fn condition(&self, prior_var: f64, cross: DVector<f64>) -> (f64, f64) {
        if self.y.is_empty() {
            return (self.m, prior_var);
        }
        let r = self.y.add_scalar(-self.m);
        let w = &self.sigma_inv * &cross;
        (self.m + w.dot(&r), prior_var - w.dot(&cross))
    }

    pub fn asymptote(&self, inst: &Instance, arm: usize) -> (f64, f64) {
        let cross = DVector::from_iterator(self.index.len(), self.index.iter().map(|&(b, _)| config_cov(inst, arm, b)));
        self.condition(config_cov(inst, arm, arm), cross)
    }

    pub fn latent(&self, inst: &Instance, arm: usize, epoch: usize) -> (f64, f64) {
        let cross = DVector::from_iterator(
            self.index.len(),
            self.index.iter().map(|&(b, t)| {
                config_cov(inst, arm, b) + if b == arm { time_cov(inst, epoch, t) } else { 0.0 }
            }),
        );
        self.condition(config_cov(inst, arm, arm) + time_cov(inst, epoch, epoch), cross)
    }
}
