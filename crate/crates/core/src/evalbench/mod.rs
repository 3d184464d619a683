pub mod ablation;
pub mod metrics;
pub mod sweep;
pub mod synth;

pub use metrics::{
    auc, confidence_histogram, confusion, evaluate, macro_f1, metrics, write_confidence_csv, write_metrics_csv,
    ConfidenceBin, ConfusionMatrix, MetricsReport,
};
pub use synth::{make_synthetic, SyntheticSet, SyntheticSpec};
pub use ablation::{param_diff, ParamDiff};
pub use sweep::{grid_search, integer_grid, lambda_sweep, unit_grid, write_rows, LambdaRow, SurfaceRow};
