use bhpt::curve_env::optimal_loss;
use bhpt::{run_tuning, BeliefConfig, CurveSet, GpHypers, PolicyKind, PolicySpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn stationary_set(means: &[f64], noise: f64, len: usize, seed: u64) -> CurveSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curves = means
        .iter()
        .map(|&m| {
            let d = Normal::new(m, noise).unwrap();
            (0..len).map(|_| d.sample(&mut rng)).collect()
        })
        .collect();
    CurveSet::new(curves).unwrap()
}

#[test]
fn every_arm_is_tried_within_fifty_steps_per_arm() {
    let means = [0.40, 0.43, 0.47, 0.52, 0.60];
    let spec = PolicySpec::new(PolicyKind::Bhpt).with_belief(BeliefConfig::Stationary {
        prior_mean: 0.5,
        prior_std: 0.2,
        noise_std: 0.1,
    });
    for seed in 0..20 {
        let set = stationary_set(&means, 0.1, 300, seed);
        let res = run_tuning(&set, &spec, 50 * means.len(), seed).unwrap();
        assert!(res.allocation.iter().all(|&n| n > 0), "seed {seed}: {:?}", res.allocation);
    }
}

#[test]
fn dominant_arm_is_the_output() {
    let a: Vec<f64> = (1..=12).map(|t| 0.2 + 0.5 / t as f64).collect();
    let b: Vec<f64> = a.iter().map(|v| v + 0.4).collect();
    let noiseless = GpHypers { noise_std: 0.0, ..GpHypers::default() };
    let spec = PolicySpec::new(PolicyKind::Bhpt)
        .with_belief(BeliefConfig::FreezeThaw { hypers: noiseless, sampling: None });
    for (set, dominant) in [(CurveSet::new(vec![a.clone(), b.clone()]).unwrap(), 0), (CurveSet::new(vec![b, a]).unwrap(), 1)] {
        for budget in 4..=20 {
            let res = run_tuning(&set, &spec, budget, 0).unwrap();
            assert_eq!(res.output_arm, dominant, "budget {budget}");
            assert_eq!(optimal_loss(&set, budget).unwrap().0, dominant);
        }
    }
}
