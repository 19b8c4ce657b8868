//! Budget × policy × seed sweeps over curve sets, the metrics reported on
//! them, and CSV and SVG output.

mod error;
mod experiment;
mod metrics;
mod output;

pub use error::{BenchError, Result};
pub use experiment::{load_sets, run_experiment, run_on_sets, DataSource, ExperimentSpec, LoadedSet, RunRecord};
pub use metrics::{budget_fraction_on_output, hit_rate_at_k, summarize, Metric, SeriesPoint};
pub use output::{emit_csv, emit_plot, emit_timing, read_csv, render_plot, write_csv};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "BHPT_OUTPUT_DIR";
