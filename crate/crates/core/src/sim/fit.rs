use crate::error::{Error, Result};
use crate::neural::{train, LossHistory, NeuralModel, TrainConfig, TrainSet};
use crate::predictor::{Engine, PredictorKind, PredictorModel, PredictorSpec, TrackPredictor};
use crate::wiener::{build_filter_bank, estimate_autocorrelation_pooled};

use super::dataset::Dataset;

fn check_shape(ds: &Dataset, spec: &PredictorSpec) -> Result<()> {
    spec.validate()?;
    if ds.spec.input_len != spec.input_len || ds.spec.t_csi != spec.t_csi || ds.spec.target != spec.target {
        return Err(Error::Config(format!(
            "dataset (P={}, T_CSI={}, {}) does not match predictor (P={}, T_CSI={}, {})",
            ds.spec.input_len, ds.spec.t_csi, ds.spec.target, spec.input_len, spec.t_csi, spec.target
        )));
    }
    Ok(())
}

/// Wiener banks from the autocorrelation of each track's training slots,
/// pooled over all configurations of the dataset.
pub fn fit_wiener(ds: &Dataset, spec: PredictorSpec) -> Result<PredictorModel> {
    check_shape(ds, &spec)?;
    let horizons = spec.horizons();
    let max_lag = spec.t_csi * (spec.input_len - 1) + horizons.iter().max().copied().unwrap_or(1);
    let tracks = ds
        .tracks
        .iter()
        .map(|t| {
            let series: Vec<&[f64]> = t.train_series.iter().map(Vec::as_slice).collect();
            let r = estimate_autocorrelation_pooled(&series, max_lag)?;
            let bank = build_filter_bank(&r, spec.input_len, spec.t_csi, &horizons)?;
            Ok(TrackPredictor {
                stats: t.stats,
                engine: Engine::Wiener(bank),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PredictorModel::new(PredictorSpec { kind: PredictorKind::Wiener, ..spec }, tracks)
}

/// Trains one network on the windows of every track; in by-CQI mode the
/// same network then serves all fifteen standardized tracks.
pub fn train_neural(
    ds: &Dataset,
    spec: PredictorSpec,
    config: &TrainConfig,
    seed: u64,
) -> Result<(PredictorModel, LossHistory)> {
    check_shape(ds, &spec)?;
    if !spec.kind.is_neural() {
        return Err(Error::Config(format!("{} is not a neural predictor", spec.kind)));
    }
    let horizons = spec.horizons();
    let mut train_set = TrainSet::new(spec.input_len, horizons.len());
    let mut val_set = TrainSet::new(spec.input_len, horizons.len());
    for t in &ds.tracks {
        train_set.append_batch(&t.train, &horizons);
        val_set.append_batch(&t.val, &horizons);
    }
    let init = NeuralModel::new(spec.kind, spec.input_len, spec.hidden, horizons.len(), seed)?;
    let (net, history) = train(&init, &train_set, &val_set, config)?;
    let tracks = ds
        .tracks
        .iter()
        .map(|t| TrackPredictor {
            stats: t.stats,
            engine: Engine::Neural(net.clone()),
        })
        .collect();
    Ok((PredictorModel::new(spec, tracks)?, history))
}

/// Any predictor kind; neural kinds are trained with `config`.
pub fn fit_predictor(
    ds: &Dataset,
    spec: PredictorSpec,
    config: &TrainConfig,
    seed: u64,
) -> Result<(PredictorModel, Option<LossHistory>)> {
    match spec.kind {
        PredictorKind::Zoh => {
            check_shape(ds, &spec)?;
            Ok((PredictorModel::zoh(spec, ds.stats())?, None))
        }
        PredictorKind::Wiener => Ok((fit_wiener(ds, spec)?, None)),
        _ => {
            let (m, h) = train_neural(ds, spec, config, seed)?;
            Ok((m, Some(h)))
        }
    }
}
