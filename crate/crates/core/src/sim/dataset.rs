use std::borrow::Borrow;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::eesm::{trace_from_config, CqiTable, EffSinrTrace, Standardizer, Track, N_CQI};
use crate::error::{Error, Result};
use crate::predictor::{build_windows_strided, min_series_len, PredictionBatch, TargetStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.784,
            val: 0.196,
            test: 0.02,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("split fractions must lie in [0, 1] and sum to 1".into()));
        }
        if self.train == 0.0 || self.val == 0.0 {
            return Err(Error::Config("training and validation fractions must be positive".into()));
        }
        Ok(())
    }

    /// Chronological `(train, val, test)` counts for `n` windows.
    pub fn counts(&self, n: usize) -> (usize, usize, usize) {
        let train = (self.train * n as f64).round() as usize;
        let upto_val = (((self.train + self.val) * n as f64).round() as usize).max(train);
        (train, upto_val - train, n - upto_val)
    }
}

/// Layout of a dataset: window shape, target tracks, split and stride.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetSpec {
    pub input_len: usize,
    pub t_csi: usize,
    pub target: TargetStrategy,
    pub fractions: SplitFractions,
    /// Slots between consecutive window anchors; `T_CSI` when `None`.
    pub stride: Option<usize>,
}

impl DatasetSpec {
    pub fn new(input_len: usize, t_csi: usize, target: TargetStrategy) -> Self {
        Self {
            input_len,
            t_csi,
            target,
            fractions: SplitFractions::default(),
            stride: None,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = Some(stride);
        self
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or(self.t_csi)
    }

    pub fn tracks(&self) -> Vec<Track> {
        match self.target {
            TargetStrategy::BestCqi => vec![Track::Best],
            TargetStrategy::ByCqi => (1..=N_CQI).map(Track::Cqi).collect(),
        }
    }
}

/// Windows of one standardized track, split chronologically.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackSplits {
    pub track: Track,
    /// Fitted on the training slots of every configuration.
    pub stats: Standardizer,
    pub train: PredictionBatch,
    pub val: PredictionBatch,
    pub test: PredictionBatch,
    /// Standardized training-slot segment of each configuration.
    pub train_series: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub spec: DatasetSpec,
    /// Configurations the windows were drawn from, in order.
    pub configs: Vec<ChannelConfig>,
    pub tracks: Vec<TrackSplits>,
}

impl Dataset {
    pub fn split_sizes(&self) -> (usize, usize, usize) {
        let t = &self.tracks[0];
        (t.train.len(), t.val.len(), t.test.len())
    }

    pub fn stats(&self) -> Vec<Standardizer> {
        self.tracks.iter().map(|t| t.stats).collect()
    }
}

/// Builds traces for every configuration and cuts them into a dataset.
pub fn generate_dataset(configs: &[ChannelConfig], table: &CqiTable, spec: DatasetSpec) -> Result<Dataset> {
    if configs.is_empty() {
        return Err(Error::Config("a dataset needs at least one channel configuration".into()));
    }
    let required = min_series_len(spec.input_len, spec.t_csi);
    for c in configs {
        if c.n_slots < required {
            return Err(Error::Sizing {
                what: format!("slots per configuration (f_D = {} Hz)", c.doppler_hz),
                required,
                available: c.n_slots,
            });
        }
    }
    let traces = configs
        .iter()
        .map(|c| trace_from_config(c, table))
        .collect::<Result<Vec<_>>>()?;
    dataset_from_traces(configs, &traces, spec)
}

/// Cuts existing traces (one per configuration) into a dataset.
pub fn dataset_from_traces<T: Borrow<EffSinrTrace>>(
    configs: &[ChannelConfig],
    traces: &[T],
    spec: DatasetSpec,
) -> Result<Dataset> {
    let traces: Vec<&EffSinrTrace> = traces.iter().map(Borrow::borrow).collect();
    spec.fractions.validate()?;
    if configs.len() != traces.len() || traces.is_empty() {
        return Err(Error::Config("one trace per configuration is required".into()));
    }
    let (p, t, stride) = (spec.input_len, spec.t_csi, spec.stride());
    if p == 0 || t < 2 || stride == 0 {
        return Err(Error::Config("dataset needs P >= 1, T_CSI >= 2 and a positive stride".into()));
    }
    let required = min_series_len(p, t);

    // Window counts and the training slot span of each trace.
    let mut plans = Vec::with_capacity(traces.len());
    for tr in &traces {
        if tr.len() < required {
            return Err(Error::Sizing {
                what: "slots per trace".into(),
                required,
                available: tr.len(),
            });
        }
        let n = (tr.len() - required) / stride + 1;
        let counts = spec.fractions.counts(n);
        if counts.0 == 0 || counts.1 == 0 {
            return Err(Error::Sizing {
                what: "slots for non-empty training and validation splits".into(),
                required: required + stride * (1.0 / spec.fractions.val.min(spec.fractions.train)).ceil() as usize,
                available: tr.len(),
            });
        }
        let last_train_anchor = t * (p - 1) + (counts.0 - 1) * stride;
        plans.push((counts, last_train_anchor + t));
    }

    let mut tracks = Vec::new();
    for track in spec.tracks() {
        let raw: Vec<Vec<f64>> = traces.iter().map(|tr| tr.track(track)).collect();
        let pooled: Vec<f64> = raw
            .iter()
            .zip(&plans)
            .flat_map(|(r, (_, end))| r[..*end].iter().copied())
            .collect();
        let stats = Standardizer::fit_or_unit(&pooled);
        let mut splits = TrackSplits {
            track,
            stats,
            train: PredictionBatch::empty(p, t),
            val: PredictionBatch::empty(p, t),
            test: PredictionBatch::empty(p, t),
            train_series: Vec::new(),
        };
        for (r, ((n_train, n_val, _), end)) in raw.iter().zip(&plans) {
            let z = stats.standardize(r);
            let all = build_windows_strided(&z, p, t, stride)?;
            splits.train.extend(&all.slice(0..*n_train));
            splits.val.extend(&all.slice(*n_train..n_train + n_val));
            splits.test.extend(&all.slice(n_train + n_val..all.len()));
            splits.train_series.push(z[..*end].to_vec());
        }
        tracks.push(splits);
    }
    Ok(Dataset {
        spec,
        configs: configs.to_vec(),
        tracks,
    })
}

/// Standardized evaluation windows of `trace` for each of `stats`' tracks.
pub fn eval_batches(
    trace: &EffSinrTrace,
    target: TargetStrategy,
    stats: &[Standardizer],
    input_len: usize,
    t_csi: usize,
) -> Result<Vec<PredictionBatch>> {
    let spec = DatasetSpec::new(input_len, t_csi, target);
    spec.tracks()
        .into_iter()
        .zip(stats)
        .map(|(track, s)| build_windows_strided(&s.standardize(&trace.track(track)), input_len, t_csi, t_csi))
        .collect()
}
