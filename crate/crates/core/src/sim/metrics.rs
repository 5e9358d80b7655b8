use crate::channel::{ChannelConfig, SUBCARRIERS_PER_RB, SYMBOLS_PER_SLOT};
use crate::eesm::{logistic_bler, CqiTable, N_CQI};
use crate::error::{Error, Result};
use crate::predictor::{PredictionBatch, PredictorModel};

/// Lowest reported MSE; a perfect predictor would otherwise give minus
/// infinity.
pub const MSE_FLOOR_DB: f64 = -60.0;

pub fn mse_to_db(mse: f64) -> f64 {
    if mse > 0.0 {
        (10.0 * mse.log10()).max(MSE_FLOOR_DB)
    } else {
        MSE_FLOOR_DB
    }
}

/// Resource-grid dimensions that turn a spectral efficiency into a rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDims {
    pub n_rb: usize,
    pub n_layers: usize,
    pub slot_duration: f64,
}

impl From<&ChannelConfig> for LinkDims {
    fn from(c: &ChannelConfig) -> Self {
        Self {
            n_rb: c.n_rb,
            n_layers: c.n_layers,
            slot_duration: c.slot_duration,
        }
    }
}

/// Expected throughput (Mbps) of one slot transmitted with `cqi` over a
/// channel whose per-CQI effective SINRs are `actual`.
pub fn slot_throughput(cqi: usize, actual: &[f64; N_CQI], table: &CqiTable, dims: LinkDims) -> f64 {
    if cqi == 0 {
        return 0.0;
    }
    let e = &table.entries()[cqi - 1];
    let res = (dims.n_rb * SUBCARRIERS_PER_RB * SYMBOLS_PER_SLOT * dims.n_layers) as f64;
    let success = 1.0 - logistic_bler(e, actual[cqi - 1]);
    e.spectral_eff * res * success / dims.slot_duration / 1e6
}

/// Per-horizon mean squared error (linear) of `model` over standardized
/// windows, one batch per track, averaged across tracks.
pub fn mse_per_horizon(model: &PredictorModel, batches: &[PredictionBatch]) -> Result<Vec<f64>> {
    if batches.len() != model.tracks.len() {
        return Err(Error::Config("one evaluation batch per predicted track is required".into()));
    }
    let horizons = model.spec.horizons();
    if model.is_ideal() {
        return Ok(vec![0.0; horizons.len()]);
    }
    let mut sse = vec![0.0; horizons.len()];
    let mut n = 0usize;
    for (track, batch) in model.tracks.iter().zip(batches) {
        for r in 0..batch.len() {
            let y = track.predict(batch.input(r), horizons.len())?;
            for (k, &h) in horizons.iter().enumerate() {
                let e = y[k] - batch.target_at(r, h);
                sse[k] += e * e;
            }
        }
        n += batch.len();
    }
    if n == 0 {
        return Err(Error::Domain("cannot evaluate MSE on an empty split".into()));
    }
    Ok(sse.into_iter().map(|s| s / n as f64).collect())
}

/// Per-horizon MSE in dB; 0 dB is the variance of the standardized process.
pub fn evaluate_mse(model: &PredictorModel, batches: &[PredictionBatch]) -> Result<Vec<f64>> {
    Ok(mse_per_horizon(model, batches)?.into_iter().map(mse_to_db).collect())
}

/// Horizon-averaged MSE in dB (mean of the linear values).
pub fn average_mse_db(model: &PredictorModel, batches: &[PredictionBatch]) -> Result<f64> {
    let m = mse_per_horizon(model, batches)?;
    Ok(mse_to_db(m.iter().sum::<f64>() / m.len() as f64))
}
