//! Budgeted hyper-parameter tuning.
//!
//! A fixed budget of training epochs is spread over `K` candidate
//! configurations whose learning curves are revealed one epoch at a time.
//! The crate provides:
//!
//! * [`curve_env`]: replay of pre-recorded learning curves, ground-truth
//!   optima and regret accounting;
//! * [`synthgen`]: a synthetic curve generator built on the Freeze-Thaw
//!   kernel;
//! * [`gp`]: the Freeze-Thaw Gaussian-process belief over all curves;
//! * [`policy`]: the value-of-information arm selection rule with the
//!   budget-exhaustion switch, and the tuning loop that drives every policy;
//! * [`baselines`]: random search, Hyperband, GP-EI and a truncated-horizon
//!   rollout policy for comparison.

pub mod baselines;
pub mod curve_env;
mod error;
pub mod gp;
pub mod normal;
pub mod policy;
pub mod synthgen;

pub use crate::curve_env::{CurveSet, Pull, ReplayEnv, TuningResult};
pub use crate::error::{Error, Result};
pub use crate::gp::{BeliefState, CurveBelief, GaussianScalar, GpHypers};
pub use crate::policy::{run_tuning, BeliefConfig, PolicyKind, PolicySpec};
pub use crate::synthgen::SynthSpec;
