//! Prediction windows, baselines and complexity accounting.

mod baseline;
mod flops;
mod model;
mod spec;
mod window;

pub use baseline::{interpolate, zoh, InterpMethod};
pub use flops::{flops, flops_single};
pub use model::{Engine, PredictorModel, TrackPredictor};
pub use spec::{PredictionMode, PredictorKind, PredictorSpec, TargetStrategy};
pub use window::{build_windows, build_windows_strided, min_series_len, PredictionBatch};
