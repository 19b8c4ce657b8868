//! Covariance functions.

/// Freeze-Thaw time kernel `magnitude² · β^α / (t + t' + β)^α`.
///
/// It is an infinite mixture of exponentially decaying basis functions, so
/// draws from it look like training curves that flatten out over time.
pub fn ft_kernel(t: f64, t2: f64, alpha: f64, beta: f64, magnitude: f64) -> f64 {
    magnitude * magnitude * (beta / (t + t2 + beta)).powf(alpha)
}

/// Squared-exponential kernel over feature vectors.
pub fn se_kernel(x: &[f64], x2: &[f64], lengthscale: f64, magnitude: f64) -> f64 {
    let d2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
    magnitude * magnitude * (-d2 / (2.0 * lengthscale * lengthscale)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn ft_values() {
        assert_eq!(ft_kernel(0.0, 0.0, 1.5, 5.0, 1.0), 1.0);
        // (5/7)^1.5, 30-digit reference.
        assert!((ft_kernel(1.0, 1.0, 1.5, 5.0, 1.0) - 0.603_681_610_520_369).abs() < 1e-15);
        assert!(ft_kernel(2.0, 3.0, 1.5, 5.0, 1.0) < ft_kernel(1.0, 1.0, 1.5, 5.0, 1.0));
        assert!((ft_kernel(1.0, 1.0, 1.5, 5.0, 10.0) - 60.368_161_052_036_9).abs() < 1e-12);
    }

    #[test]
    fn se_values() {
        assert_eq!(se_kernel(&[0.3], &[0.3], 0.1, 1.0), 1.0);
        // exp(-0.5), 30-digit reference.
        assert!((se_kernel(&[0.0], &[0.8], 0.8, 1.0) - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert_eq!(se_kernel(&[0.1], &[0.7], 0.5, 2.0), se_kernel(&[0.7], &[0.1], 0.5, 2.0));
    }

    proptest! {
        #[test]
        fn ft_gram_is_psd(
            times in proptest::collection::vec(0.0f64..50.0, 1..8),
            alpha in 0.1f64..4.0,
            beta in 0.1f64..10.0,
        ) {
            let n = times.len();
            let g = DMatrix::from_fn(n, n, |i, j| ft_kernel(times[i], times[j], alpha, beta, 1.0));
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(g[(i, j)], g[(j, i)]);
                }
            }
            let eig = g.symmetric_eigen();
            prop_assert!(eig.eigenvalues.iter().all(|&e| e >= -1e-8));
        }

        #[test]
        fn ft_decreasing_in_sum(a in 0.0f64..20.0, b in 0.0f64..20.0, d in 0.01f64..5.0,
                                alpha in 0.1f64..4.0, beta in 0.1f64..10.0) {
            prop_assert!(ft_kernel(a + d, b, alpha, beta, 1.0) < ft_kernel(a, b, alpha, beta, 1.0));
        }
    }
}
