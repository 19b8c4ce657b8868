//! Standard normal density and distribution function.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal cumulative distribution function.
///
/// Evaluated through `erfc` so the lower tail keeps full relative accuracy.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Log density of `N(mean, var)` at `x`.
pub fn log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * PI * var).ln() + d * d / var)
}

/// `ψ(s) = φ(s) − s·Φ(−s)`, the standard normal loss function.
pub fn psi(s: f64) -> f64 {
    pdf(s) - s * cdf(-s)
}

/// Above this the direct form of `ln ψ` underflows, so an asymptotic
/// series takes over.
const LOG_PSI_SWITCH: f64 = 30.0;

/// `ln ψ(s)`, finite for every finite `s`.
pub fn log_psi(s: f64) -> f64 {
    if s <= LOG_PSI_SWITCH {
        return psi(s).ln();
    }
    // ψ(s)/φ(s) = Σ_{n≥1} (−1)^{n+1} (2n−1)!! / s^{2n}
    let inv = 1.0 / (s * s);
    let (mut term, mut sum) = (inv, 0.0);
    for n in 1..=8 {
        sum += term;
        term *= -((2 * n + 1) as f64) * inv;
    }
    -0.5 * s * s - 0.5 * (2.0 * PI).ln() + sum.ln()
}
