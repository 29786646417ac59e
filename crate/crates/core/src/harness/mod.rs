//! Experiment driver: configuration, training and evaluation loops, metrics
//! and plot data.

pub mod config;
pub mod eval;
pub mod metrics;
pub mod plot;
pub mod sweep;
pub mod train;

pub use config::{load_config, EvalConfig, RunConfig, TrainConfig};
pub use eval::{evaluate, evaluate_checkpoint, read_eval, EvalReport, PolicyStats, EVAL_FILE};
pub use metrics::{read_metrics, write_metrics, MetricsRecord, METRICS_HEADER};
pub use plot::{emit_plot_data, PlotFiles, BARS_FILE, CURVE_FILE};
pub use sweep::{sweep, SeedResult, SWEEP_FILE};
pub use train::{build_env, train, train_in_memory, TrainOutcome, CHECKPOINT_FILE, METRICS_FILE};
