use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Largest rule supported.
pub const MAX_QUAD_NODES: usize = 20;

/// Gauss–Hermite nodes and weights for the standard normal, so that
/// `Σ w_q f(x_q) ≈ E[f(X)]` with `X ~ N(0, 1)`. Nodes are ascending and
/// weights sum to one.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > MAX_QUAD_NODES {
        return Err(Error::InvalidParameter(format!("quadrature needs 1 to {MAX_QUAD_NODES} nodes, got {n}")));
    }
    // Jacobi matrix of the monic probabilists' Hermite recurrence.
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    Ok(pairs.into_iter().map(|(x, w)| (x, w / total)).unzip())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_rules() {
        let (x, w) = gauss_hermite(1).unwrap();
        assert_eq!((x[0], w[0]), (0.0, 1.0));
        let (x, w) = gauss_hermite(2).unwrap();
        assert!((x[0] + 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14);
        assert!((w[0] - 0.5).abs() < 1e-14);
        // Three nodes: 0 and ±√3, weights 2/3 and 1/6.
        let (x, w) = gauss_hermite(3).unwrap();
        assert!((x[2] - 3f64.sqrt()).abs() < 1e-14);
        assert!(x[1].abs() < 1e-14);
        assert!((w[1] - 2.0 / 3.0).abs() < 1e-14);
        assert!((w[0] - 1.0 / 6.0).abs() < 1e-14);
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_hermite(21).is_err());
    }

    #[test]
    fn normal_moments_exact() {
        // E[X^{2m}] = (2m − 1)!!, exact for 2m ≤ 2n − 1.
        let (x, w) = gauss_hermite(7).unwrap();
        let mut double_fact = 1.0;
        for m in 0..7 {
            if m > 0 {
                double_fact *= (2 * m - 1) as f64;
            }
            let even: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * m)).sum();
            assert!((even - double_fact).abs() < 1e-9 * double_fact, "m={m}");
            let odd: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(2 * m + 1)).sum();
            assert!(odd.abs() < 1e-9 * double_fact.max(1.0));
        }
    }
}
