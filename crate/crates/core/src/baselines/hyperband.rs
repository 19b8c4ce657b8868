//! Hyperband over recorded curves.
//!
//! Resources are cumulative epochs per arm. An arm that survives into a later
//! round resumes where it stopped, so promoting it from `r_i` to `r_{i+1}`
//! costs `r_{i+1} − r_i` units.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve_env::{CurveSet, ReplayEnv, TuningResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Round {
    pub arms: usize,
    /// Cumulative epochs each surviving arm has after this round.
    pub units: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bracket {
    pub rounds: Vec<Round>,
    /// Set when the starting arm count was reduced to fit a budget.
    pub shrunk: bool,
}

impl Bracket {
    /// Units consumed when every arm starts untrained.
    pub fn cost(&self) -> usize {
        let mut prev = 0;
        self.rounds
            .iter()
            .map(|r| {
                let c = r.arms * (r.units - prev);
                prev = r.units;
                c
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperbandSchedule {
    pub eta: usize,
    pub max_units: usize,
    /// Most aggressive bracket first.
    pub brackets: Vec<Bracket>,
}

fn floor_log(x: usize, eta: usize) -> u32 {
    let mut s = 0;
    let mut p = eta;
    while p <= x {
        s += 1;
        p *= eta;
    }
    s
}

fn check(eta: usize, max_units: usize) -> Result<()> {
    if eta < 2 {
        return Err(Error::InvalidParameter("eta must be at least 2".into()));
    }
    if max_units == 0 {
        return Err(Error::InvalidParameter("max_units must be at least 1".into()));
    }
    Ok(())
}

/// One successive-halving bracket over `n_arms` arms, each survivor reaching
/// at most `max_units` epochs. The starting count shrinks until the bracket
/// fits `total_budget`.
pub fn sh_schedule(n_arms: usize, max_units: usize, total_budget: usize, eta: usize) -> Result<Bracket> {
    check(eta, max_units)?;
    if n_arms == 0 || total_budget == 0 {
        return Err(Error::InvalidParameter("n_arms and total_budget must be at least 1".into()));
    }
    let r_max = max_units.min(total_budget);
    let mut n = n_arms;
    loop {
        let s = floor_log(n, eta).min(floor_log(r_max, eta));
        let rounds = (0..=s)
            .map(|i| Round {
                arms: n / eta.pow(i),
                units: r_max / eta.pow(s - i),
            })
            .collect();
        let bracket = Bracket { rounds, shrunk: n < n_arms };
        if bracket.cost() <= total_budget || n == 1 {
            return Ok(bracket);
        }
        n -= 1;
    }
}

/// The Hyperband bracket family for arms of up to `max_units` epochs, with
/// starting counts capped at `n_arms`.
pub fn hyperband_schedule(n_arms: usize, max_units: usize, eta: usize) -> Result<HyperbandSchedule> {
    check(eta, max_units)?;
    if n_arms == 0 {
        return Err(Error::InvalidParameter("n_arms must be at least 1".into()));
    }
    let s_max = floor_log(max_units, eta);
    let brackets = (0..=s_max)
        .rev()
        .map(|s| {
            let want = ((s_max + 1) as usize * eta.pow(s)).div_ceil(s as usize + 1);
            let n = want.min(n_arms);
            let rounds = (0..=s)
                .map(|i| Round {
                    arms: (n / eta.pow(i)).max(1),
                    units: (max_units / eta.pow(s - i)).max(1),
                })
                .collect();
            Bracket { rounds, shrunk: n < want }
        })
        .collect();
    Ok(HyperbandSchedule { eta, max_units, brackets })
}

fn rank(env: &ReplayEnv<'_>, arms: &mut [usize]) {
    arms.sort_by(|&a, &b| env.arm_best(a).total_cmp(&env.arm_best(b)).then(a.cmp(&b)));
}

/// Runs one bracket on `arms`, in the given order for the first round and in
/// rank order afterwards. Stops as soon as the budget runs out.
pub fn run_bracket(env: &mut ReplayEnv<'_>, arms: &[usize], bracket: &Bracket) -> Result<()> {
    let mut survivors = arms.to_vec();
    for (i, round) in bracket.rounds.iter().enumerate() {
        for &arm in &survivors {
            while env.epochs(arm) < round.units && env.is_eligible(arm) {
                if env.remaining() == 0 {
                    return Ok(());
                }
                env.step(arm)?;
            }
        }
        if let Some(next) = bracket.rounds.get(i + 1) {
            rank(env, &mut survivors);
            survivors.truncate(next.arms);
        }
    }
    Ok(())
}

/// Cycles through the Hyperband brackets until the budget is spent. Each
/// bracket draws its arms at random, untried arms first. If a full cycle
/// makes no progress, the rest of the budget goes to the best arm seen.
pub fn run_hyperband(curves: &CurveSet, budget: usize, eta: usize, seed: u64) -> Result<TuningResult> {
    let k = curves.num_arms();
    let max_units = (0..k).map(|a| curves.max_epochs(a)).max().unwrap_or(0);
    let schedule = hyperband_schedule(k, max_units, eta)?;
    let mut env = ReplayEnv::new(curves, budget);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while !env.is_done() {
        let before = env.steps();
        for bracket in &schedule.brackets {
            if env.is_done() {
                break;
            }
            let (mut fresh, mut tried): (Vec<usize>, Vec<usize>) = (0..k).partition(|&a| env.epochs(a) == 0);
            fresh.shuffle(&mut rng);
            tried.shuffle(&mut rng);
            fresh.extend(tried);
            fresh.truncate(bracket.rounds[0].arms);
            run_bracket(&mut env, &fresh, bracket)?;
        }
        if env.steps() == before {
            while !env.is_done() {
                let mut eligible = env.eligible_arms();
                rank(&env, &mut eligible);
                env.step(eligible[0])?;
            }
        }
    }
    Ok(env.into_result("hyperband", seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(arms: usize, units: usize) -> Round {
        Round { arms, units }
    }

    #[test]
    fn nine_arms_eta_three() {
        let b = sh_schedule(9, 9, 100, 3).unwrap();
        assert_eq!(b.rounds, vec![r(9, 1), r(3, 3), r(1, 9)]);
        assert!(!b.shrunk);
        assert_eq!(b.cost(), 9 + 3 * 2 + 6);
    }

    #[test]
    fn single_arm_gets_whole_budget() {
        let b = sh_schedule(1, 50, 20, 3).unwrap();
        assert_eq!(b.rounds, vec![r(1, 20)]);
    }

    #[test]
    fn shrinks_to_fit() {
        let b = sh_schedule(9, 9, 15, 3).unwrap();
        assert!(b.shrunk);
        assert!(b.cost() <= 15);
        for n in 1..40 {
            for budget in 1..60 {
                let b = sh_schedule(n, 27, budget, 3).unwrap();
                assert!(b.cost() <= budget, "n={n} budget={budget}");
            }
        }
    }

    #[test]
    fn classic_table_r81() {
        let s = hyperband_schedule(1000, 81, 3).unwrap();
        let got: Vec<Vec<Round>> = s.brackets.iter().map(|b| b.rounds.clone()).collect();
        assert_eq!(
            got,
            vec![
                vec![r(81, 1), r(27, 3), r(9, 9), r(3, 27), r(1, 81)],
                vec![r(34, 3), r(11, 9), r(3, 27), r(1, 81)],
                vec![r(15, 9), r(5, 27), r(1, 81)],
                vec![r(8, 27), r(2, 81)],
                vec![r(5, 81)],
            ]
        );
    }

    #[test]
    fn hand_traced_bracket() {
        let set = CurveSet::new(vec![vec![0.5, 0.1], vec![0.3, 0.9], vec![0.4, 0.2]]).unwrap();
        let mut env = ReplayEnv::new(&set, 10);
        let b = Bracket { rounds: vec![r(3, 1), r(1, 2)], shrunk: false };
        run_bracket(&mut env, &[0, 1, 2], &b).unwrap();
        assert_eq!(env.allocation(), &[1, 2, 1]);
        let arms: Vec<usize> = env.trajectory().iter().map(|p| p.arm).collect();
        assert_eq!(arms, vec![0, 1, 2, 1]);
    }

    #[test]
    fn survivors_are_top_ranked() {
        let curves: Vec<Vec<f64>> = (0..9).map(|k| vec![0.9 - 0.05 * ((k * 4) % 9) as f64; 9]).collect();
        let set = CurveSet::new(curves).unwrap();
        let mut env = ReplayEnv::new(&set, 100);
        let b = sh_schedule(9, 9, 100, 3).unwrap();
        run_bracket(&mut env, &(0..9).collect::<Vec<_>>(), &b).unwrap();
        let mut by_first: Vec<usize> = (0..9).collect();
        by_first.sort_by(|&a, &b| set.curve(a)[0].total_cmp(&set.curve(b)[0]));
        assert_eq!(env.allocation()[by_first[0]], 9);
        for &a in &by_first[1..3] {
            assert_eq!(env.allocation()[a], 3);
        }
        for &a in &by_first[3..] {
            assert_eq!(env.allocation()[a], 1);
        }
    }

    #[test]
    fn spends_exactly_the_budget() {
        let curves: Vec<Vec<f64>> = (0..7).map(|k| (0..10).map(|t| 0.9 - 0.01 * (k + t) as f64).collect()).collect();
        let set = CurveSet::new(curves).unwrap();
        for budget in [1, 5, 13, 40, 70, 90] {
            let res = run_hyperband(&set, budget, 3, 2).unwrap();
            assert_eq!(res.allocation.iter().sum::<usize>(), budget.min(70));
        }
        assert_eq!(run_hyperband(&set, 40, 3, 5).unwrap(), run_hyperband(&set, 40, 3, 5).unwrap());
    }
}
