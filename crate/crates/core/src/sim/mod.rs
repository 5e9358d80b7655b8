//! Datasets, predictor fitting, link-adaptation runs and figure sweeps.

mod dataset;
mod fit;
mod metrics;
mod run;

pub use dataset::{dataset_from_traces, eval_batches, generate_dataset, Dataset, DatasetSpec, SplitFractions, TrackSplits};
pub use fit::{fit_predictor, fit_wiener, train_neural};
pub use metrics::{average_mse_db, evaluate_mse, mse_per_horizon, mse_to_db, slot_throughput, LinkDims, MSE_FLOOR_DB};
pub use run::{
    config_hash, run_fdd, run_fdd_trace, run_tdd, run_tdd_config, run_tdd_trace, write_summary, RunReport,
};
