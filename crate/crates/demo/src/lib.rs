//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function takes plain numbers or a JSON string and returns
//! JSON. The `*_view` functions hold the logic and are what the native
//! tests exercise.

use bhpt::curve_env::{normalized_regret, optimal_loss};
use bhpt::policy::{q_all, select_bhpt, ArmForecast, DecisionContext};
use bhpt::synthgen::sample_curveset;
use bhpt::{run_tuning, CurveSet, GaussianScalar, PolicyKind, PolicySpec, SynthSpec};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Largest set the page may ask for.
pub const MAX_ARMS: usize = 64;
pub const MAX_EPOCHS: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct CurvesView {
    pub curves: Vec<Vec<f64>>,
    pub best_arm: usize,
    pub best_loss: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct ArmInput {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecisionView {
    pub q: Vec<f64>,
    pub top: usize,
    pub choice: usize,
    pub has_slack: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunView {
    pub policy: String,
    pub arms: Vec<usize>,
    pub losses: Vec<f64>,
    /// Normalized regret of the best loss seen after each step.
    pub regret: Vec<f64>,
    pub allocation: Vec<usize>,
    pub output_arm: usize,
    pub output_loss: f64,
    pub optimum: f64,
}

fn synth(arms: usize, epochs: usize, seed: u64) -> Result<CurveSet, String> {
    if arms == 0 || arms > MAX_ARMS || epochs == 0 || epochs > MAX_EPOCHS {
        return Err(format!("need 1..={MAX_ARMS} arms and 1..={MAX_EPOCHS} epochs"));
    }
    sample_curveset(&SynthSpec { arms, epochs, seed, ..SynthSpec::default() }).map_err(|e| e.to_string())
}

pub fn curves_view(arms: usize, epochs: usize, seed: u64) -> Result<CurvesView, String> {
    let set = synth(arms, epochs, seed)?;
    let (best_arm, best_loss) = optimal_loss(&set, epochs).map_err(|e| e.to_string())?;
    Ok(CurvesView { curves: set.curves().to_vec(), best_arm, best_loss })
}

/// One BHPT decision over arms whose best forecast loss is `arms[k]`, each
/// reached one step ahead, with `remaining` steps of budget left.
pub fn decision_view(arms: &[ArmInput], remaining: usize) -> Result<DecisionView, String> {
    if arms.iter().any(|a| !a.mean.is_finite() || !(a.std >= 0.0)) {
        return Err("every arm needs a finite mean and a non-negative std".into());
    }
    let forecasts = arms.iter().map(|a| Some(ArmForecast { tau: 1, best: GaussianScalar::new(a.mean, a.std) })).collect();
    let ctx = DecisionContext::new(remaining, forecasts).map_err(|e| e.to_string())?;
    let choice = select_bhpt(&ctx).map_err(|e| e.to_string())?;
    Ok(DecisionView { q: q_all(&ctx), top: ctx.top(), choice, has_slack: ctx.has_slack() })
}

pub fn run_view(
    arms: usize,
    epochs: usize,
    set_seed: u64,
    policy: &str,
    budget: usize,
    seed: u64,
) -> Result<RunView, String> {
    let set = synth(arms, epochs, set_seed)?;
    let kind: PolicyKind = policy.parse().map_err(|e: bhpt::Error| e.to_string())?;
    let res = run_tuning(&set, &PolicySpec::new(kind), budget, seed).map_err(|e| e.to_string())?;
    let (_, optimum) = optimal_loss(&set, budget).map_err(|e| e.to_string())?;
    let initial = set.initial_loss();
    let mut best = initial;
    let mut regret = Vec::with_capacity(res.trajectory.len());
    for p in &res.trajectory {
        best = best.min(p.loss);
        regret.push(normalized_regret(best, optimum, initial).map_err(|e| e.to_string())?);
    }
    Ok(RunView {
        policy: res.policy,
        arms: res.trajectory.iter().map(|p| p.arm).collect(),
        losses: res.trajectory.iter().map(|p| p.loss).collect(),
        regret,
        allocation: res.allocation,
        output_arm: res.output_arm,
        output_loss: res.output_loss,
        optimum,
    })
}

fn to_json<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn generate_curves(arms: usize, epochs: usize, seed: u32) -> Result<String, JsError> {
    to_json(curves_view(arms, epochs, seed.into()))
}

/// `arms_json` is an array of `{"mean": .., "std": ..}`.
#[wasm_bindgen]
pub fn decide(arms_json: &str, remaining: usize) -> Result<String, JsError> {
    let arms: Vec<ArmInput> = serde_json::from_str(arms_json).map_err(|e| JsError::new(&e.to_string()))?;
    to_json(decision_view(&arms, remaining))
}

#[wasm_bindgen]
pub fn run_policy(
    arms: usize,
    epochs: usize,
    set_seed: u32,
    policy: &str,
    budget: usize,
    seed: u32,
) -> Result<String, JsError> {
    to_json(run_view(arms, epochs, set_seed.into(), policy, budget, seed.into()))
}
