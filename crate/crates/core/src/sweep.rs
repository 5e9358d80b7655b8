//! Experiment sweeps, one plot-ready CSV set per results figure.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::{ChannelConfig, PROFILE_NAMES};
use crate::eesm::{trace_from_config, CqiTable, EffSinrTrace, Track};
use crate::error::{Error, Result};
use crate::neural::{train, NeuralModel, TrainConfig, TrainSet};
use crate::predictor::{interpolate, InterpMethod, PredictorKind, PredictorModel, PredictorSpec, TargetStrategy};
use crate::sim::{
    config_hash, dataset_from_traces, eval_batches, fit_predictor, mse_per_horizon, mse_to_db, run_fdd_trace,
    run_tdd_trace, Dataset, DatasetSpec, RunReport, SplitFractions,
};
use crate::wiener::estimate_autocorrelation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    Complexity,
    InputLen,
    FdTcsi,
    Interpolation,
    TargetStrategy,
    TddThroughput,
    FddHorizon,
    DopplerGeneralization,
    ProfileGeneralization,
}

impl Figure {
    pub const ALL: [Figure; 9] = [
        Figure::Complexity,
        Figure::InputLen,
        Figure::FdTcsi,
        Figure::Interpolation,
        Figure::TargetStrategy,
        Figure::TddThroughput,
        Figure::FddHorizon,
        Figure::DopplerGeneralization,
        Figure::ProfileGeneralization,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Figure::Complexity => "complexity",
            Figure::InputLen => "input_len",
            Figure::FdTcsi => "fd_tcsi",
            Figure::Interpolation => "interpolation",
            Figure::TargetStrategy => "target_strategy",
            Figure::TddThroughput => "tdd_throughput",
            Figure::FddHorizon => "fdd_horizon",
            Figure::DopplerGeneralization => "doppler_generalization",
            Figure::ProfileGeneralization => "profile_generalization",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL.into_iter().find(|f| f.key() == s).ok_or_else(|| {
            let keys: Vec<&str> = Figure::ALL.iter().map(|f| f.key()).collect();
            Error::Usage(format!("unknown figure '{s}'; valid keys: {}", keys.join(", ")))
        })
    }
}

/// Axes shared by the figure sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepAxes {
    pub doppler_hz: Vec<f64>,
    pub t_csi: Vec<usize>,
    /// FDD prediction horizons.
    pub horizons: Vec<usize>,
    pub hidden: Vec<usize>,
    pub input_len: Vec<usize>,
    /// Report spacings of the interpolation study; each predicts one spacing ahead.
    pub interp_horizons: Vec<usize>,
    pub mixed_doppler_hz: Vec<f64>,
    pub profiles: Vec<String>,
    pub predictors: Vec<PredictorKind>,
    pub reference_doppler_hz: f64,
    pub reference_input_len: usize,
    pub reference_hidden: usize,
    /// Report spacing of the MSE studies.
    pub mse_t_csi: usize,
    pub throughput_t_csi: usize,
}

impl Default for SweepAxes {
    fn default() -> Self {
        Self {
            doppler_hz: vec![5.0, 10.0, 20.0],
            t_csi: vec![8, 16, 32, 40],
            horizons: vec![2, 8, 16, 24, 31],
            hidden: vec![4, 8, 16, 32],
            input_len: (1..=7).collect(),
            interp_horizons: vec![4, 8, 10, 16, 20, 32, 40],
            mixed_doppler_hz: (1..=50).map(f64::from).collect(),
            profiles: PROFILE_NAMES.iter().map(|s| s.to_string()).collect(),
            predictors: vec![PredictorKind::Wiener, PredictorKind::Gru],
            reference_doppler_hz: 10.0,
            reference_input_len: 4,
            reference_hidden: 16,
            mse_t_csi: 4,
            throughput_t_csi: 32,
        }
    }
}

impl SweepAxes {
    pub fn validate(&self) -> Result<()> {
        let empty = [
            ("doppler_hz", self.doppler_hz.is_empty()),
            ("t_csi", self.t_csi.is_empty()),
            ("horizons", self.horizons.is_empty()),
            ("hidden", self.hidden.is_empty()),
            ("input_len", self.input_len.is_empty()),
            ("interp_horizons", self.interp_horizons.is_empty()),
            ("mixed_doppler_hz", self.mixed_doppler_hz.is_empty()),
            ("profiles", self.profiles.is_empty()),
            ("predictors", self.predictors.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Config(format!("sweep axis '{name}' must not be empty")));
        }
        if self.t_csi.iter().chain([&self.mse_t_csi, &self.throughput_t_csi]).any(|&t| t < 2) {
            return Err(Error::Config("sweep T_CSI values must be >= 2".into()));
        }
        if self.reference_input_len == 0 || self.reference_hidden == 0 {
            return Err(Error::Config("reference input length and hidden size must be >= 1".into()));
        }
        if self.input_len.contains(&0) || self.hidden.contains(&0) || self.interp_horizons.contains(&0) {
            return Err(Error::Config("input lengths, hidden sizes and horizons must be >= 1".into()));
        }
        if let Some(h) = self.horizons.iter().find(|&&h| h == 0 || h >= self.throughput_t_csi) {
            return Err(Error::Config(format!(
                "FDD horizon {h} outside 1..{}",
                self.throughput_t_csi - 1
            )));
        }
        if self.predictors.contains(&PredictorKind::Zoh) {
            return Err(Error::Config("zoh is always included as the baseline; list trained predictors only".into()));
        }
        Ok(())
    }
}

/// Shared state of a sweep: link setup, training settings and a cache of
/// generated traces.
pub struct SweepContext {
    pub table: CqiTable,
    /// Template for every generated channel; `n_slots` is the training length.
    pub channel: ChannelConfig,
    pub train: TrainConfig,
    pub fractions: SplitFractions,
    /// Anchor stride of training windows (capped at T_CSI).
    pub stride: Option<usize>,
    /// Length of the held-out evaluation trace.
    pub test_slots: usize,
    /// Training slots per Doppler value in mixed-Doppler datasets.
    pub mixed_slots: usize,
    pub input_len: usize,
    pub hidden: usize,
    pub seed: u64,
    pub config_hash: String,
    traces: Mutex<HashMap<String, Arc<EffSinrTrace>>>,
}

impl SweepContext {
    pub fn new(table: CqiTable, channel: ChannelConfig, train: TrainConfig, seed: u64) -> Self {
        let config_hash = config_hash(&channel);
        Self {
            table,
            channel,
            train,
            fractions: SplitFractions::default(),
            stride: None,
            test_slots: 40_000,
            mixed_slots: 16_000,
            input_len: 4,
            hidden: 16,
            seed,
            config_hash,
            traces: Mutex::new(HashMap::new()),
        }
    }

    /// Independent seed for a named stream, kept below 2^63 so it survives
    /// TOML round trips.
    pub fn derive_seed(&self, tag: &str) -> u64 {
        let digest = Sha256::digest(format!("{}/{tag}", self.seed).as_bytes());
        u64::from_le_bytes(digest[..8].try_into().unwrap()) >> 1
    }

    fn config(&self, role: &str, profile: &str, fd: f64, n_slots: usize) -> ChannelConfig {
        let mut c = self.channel.clone().with_profile(profile);
        c.doppler_hz = fd;
        c.n_slots = n_slots;
        c.seed = self.derive_seed(&format!("{role}/{profile}/{fd}/{n_slots}"));
        c
    }

    pub fn train_config(&self, profile: &str, fd: f64) -> ChannelConfig {
        self.config("train", profile, fd, self.channel.n_slots)
    }

    pub fn mixed_config(&self, profile: &str, fd: f64) -> ChannelConfig {
        self.config("train", profile, fd, self.mixed_slots)
    }

    pub fn test_config(&self, profile: &str, fd: f64) -> ChannelConfig {
        self.config("test", profile, fd, self.test_slots)
    }

    /// Effective-SINR trace of `config`, generated once per context.
    pub fn trace(&self, config: &ChannelConfig) -> Result<Arc<EffSinrTrace>> {
        let key = format!("{}/{}/{}/{}", config.profile, config.doppler_hz, config.n_slots, config.seed);
        if let Some(t) = self.traces.lock().unwrap().get(&key) {
            return Ok(Arc::clone(t));
        }
        log::debug!("generating trace {key}");
        let trace = Arc::new(trace_from_config(config, &self.table)?);
        self.traces.lock().unwrap().insert(key, Arc::clone(&trace));
        Ok(trace)
    }

    pub fn dataset(
        &self,
        configs: &[ChannelConfig],
        input_len: usize,
        t_csi: usize,
        target: TargetStrategy,
    ) -> Result<Dataset> {
        let traces = configs.iter().map(|c| self.trace(c)).collect::<Result<Vec<_>>>()?;
        let mut spec = DatasetSpec::new(input_len, t_csi, target);
        spec.fractions = self.fractions;
        if let Some(s) = self.stride {
            spec = spec.with_stride(s.min(t_csi));
        }
        dataset_from_traces(configs, &traces, spec)
    }

    /// Fits (or trains) the predictor described by `spec` on `ds`.
    pub fn fit(&self, ds: &Dataset, spec: PredictorSpec) -> Result<PredictorModel> {
        let seed = self.derive_seed(&format!("init/{}/{}", spec.kind, spec.hidden));
        let (model, history) = fit_predictor(ds, spec, &self.train, seed)?;
        if let Some(h) = history {
            log::info!(
                "{} P={} D={} T_CSI={} {}: {} epochs, best val loss {:.4e}",
                spec.kind,
                spec.input_len,
                spec.hidden,
                spec.t_csi,
                spec.target,
                h.epochs.len(),
                h.best_val_loss()
            );
        }
        Ok(model)
    }

    /// Per-horizon MSE (dB) of `model` on `trace`, standardized with the
    /// model's own statistics.
    pub fn mse(&self, model: &PredictorModel, trace: &EffSinrTrace) -> Result<MseCurve> {
        let stats: Vec<_> = model.tracks.iter().map(|t| t.stats).collect();
        let batches = eval_batches(trace, model.spec.target, &stats, model.spec.input_len, model.spec.t_csi)?;
        let lin = mse_per_horizon(model, &batches)?;
        Ok(MseCurve {
            horizons: model.spec.horizons(),
            average_db: mse_to_db(lin.iter().sum::<f64>() / lin.len() as f64),
            per_horizon_db: lin.into_iter().map(mse_to_db).collect(),
        })
    }

    fn spec(&self, kind: PredictorKind, input_len: usize, hidden: usize, t_csi: usize, target: TargetStrategy) -> PredictorSpec {
        PredictorSpec {
            target,
            ..PredictorSpec::tdd(kind, input_len, hidden, t_csi)
        }
    }

    fn row(&self, model: &PredictorModel, curve: MseCurve, doppler_hz: f64, profile: &str, training: &str) -> MseRow {
        MseRow {
            predictor: model.spec.kind,
            target: model.spec.target,
            training: training.to_string(),
            profile: profile.to_string(),
            doppler_hz,
            t_csi: model.spec.t_csi,
            input_len: model.spec.input_len,
            hidden: if model.spec.kind.is_neural() { model.spec.hidden } else { 0 },
            flops: model.flops(),
            curve,
        }
    }

    /// Trains on `profile` at `fd` and evaluates on the matching test trace.
    fn specific(
        &self,
        kinds: &[(PredictorKind, usize)],
        fd: f64,
        input_len: usize,
        t_csi: usize,
        target: TargetStrategy,
    ) -> Result<Vec<MseRow>> {
        let profile = self.channel.profile.clone();
        let ds = self.dataset(&[self.train_config(&profile, fd)], input_len, t_csi, target)?;
        let test = self.trace(&self.test_config(&profile, fd))?;
        kinds
            .iter()
            .map(|&(kind, hidden)| {
                let model = self.fit(&ds, self.spec(kind, input_len, hidden, t_csi, target))?;
                let curve = self.mse(&model, &test)?;
                Ok(self.row(&model, curve, fd, &profile, "specific"))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MseCurve {
    pub horizons: Vec<usize>,
    pub per_horizon_db: Vec<f64>,
    /// dB of the horizon-averaged linear MSE.
    pub average_db: f64,
}

impl MseCurve {
    pub fn last_db(&self) -> f64 {
        *self.per_horizon_db.last().unwrap()
    }

    pub fn at(&self, horizon: usize) -> Option<f64> {
        self.horizons.iter().position(|&h| h == horizon).map(|i| self.per_horizon_db[i])
    }
}

/// One evaluated predictor of an MSE study.
#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub predictor: PredictorKind,
    pub target: TargetStrategy,
    /// "specific" or "mixed".
    pub training: String,
    /// Profile of the evaluation channel.
    pub profile: String,
    pub doppler_hz: f64,
    pub t_csi: usize,
    pub input_len: usize,
    /// Hidden width; 0 for non-neural predictors.
    pub hidden: usize,
    pub flops: u64,
    pub curve: MseCurve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterpRow {
    /// "decimated", "linear" or "lmmse".
    pub method: String,
    pub horizon: usize,
    pub mse_db: f64,
}

fn flatten<T>(nested: Result<Vec<Vec<T>>>) -> Result<Vec<T>> {
    Ok(nested?.into_iter().flatten().collect())
}

fn neural_kind(kinds: &[PredictorKind]) -> PredictorKind {
    kinds.iter().copied().find(|k| k.is_neural()).unwrap_or(PredictorKind::Gru)
}

/// MSE against FLOPs: Wiener plus each neural kind at every hidden width.
pub fn complexity(ctx: &SweepContext, fd: f64, t_csi: usize, hidden: &[usize]) -> Result<Vec<MseRow>> {
    let mut kinds = vec![(PredictorKind::Wiener, 0)];
    for kind in [PredictorKind::Dnn, PredictorKind::Gru, PredictorKind::Lstm] {
        kinds.extend(hidden.iter().map(|&d| (kind, d)));
    }
    flatten(
        kinds
            .par_iter()
            .map(|&k| ctx.specific(&[k], fd, ctx.input_len, t_csi, TargetStrategy::BestCqi))
            .collect(),
    )
}

/// MSE against the number of past reports P.
pub fn input_len(
    ctx: &SweepContext,
    kinds: &[PredictorKind],
    dopplers: &[f64],
    t_csi: usize,
    lens: &[usize],
) -> Result<Vec<MseRow>> {
    let points: Vec<(f64, usize)> = dopplers.iter().flat_map(|&f| lens.iter().map(move |&p| (f, p))).collect();
    let kinds: Vec<_> = kinds.iter().map(|&k| (k, ctx.hidden)).collect();
    flatten(
        points
            .par_iter()
            .map(|&(fd, p)| ctx.specific(&kinds, fd, p, t_csi, TargetStrategy::BestCqi))
            .collect(),
    )
}

/// Per-horizon MSE over a Doppler x T_CSI grid.
pub fn fd_tcsi(ctx: &SweepContext, kinds: &[PredictorKind], dopplers: &[f64], t_csis: &[usize]) -> Result<Vec<MseRow>> {
    let points: Vec<(f64, usize)> = dopplers.iter().flat_map(|&f| t_csis.iter().map(move |&t| (f, t))).collect();
    let kinds: Vec<_> = kinds.iter().map(|&k| (k, ctx.hidden)).collect();
    flatten(
        points
            .par_iter()
            .map(|&(fd, t)| ctx.specific(&kinds, fd, ctx.input_len, t, TargetStrategy::BestCqi))
            .collect(),
    )
}

/// Best-CQI against by-CQI targets for each predictor kind.
pub fn target_strategy(ctx: &SweepContext, kinds: &[PredictorKind], fd: f64, t_csi: usize) -> Result<Vec<MseRow>> {
    let points: Vec<(PredictorKind, TargetStrategy)> = kinds
        .iter()
        .flat_map(|&k| [TargetStrategy::BestCqi, TargetStrategy::ByCqi].map(|s| (k, s)))
        .collect();
    flatten(
        points
            .par_iter()
            .map(|&(k, s)| ctx.specific(&[(k, ctx.hidden)], fd, ctx.input_len, t_csi, s))
            .collect(),
    )
}

/// Windows for one-step-ahead prediction of reports spaced `spacing` slots
/// apart. Decimated inputs are the last P reports; interpolated inputs are
/// the last P slots of the series reconstructed between reports.
fn interp_set(
    series: &[f64],
    input_len: usize,
    spacing: usize,
    stride: usize,
    method: Option<InterpMethod>,
    autocorr: Option<&dyn Fn(usize) -> f64>,
) -> Result<TrainSet> {
    let mut set = TrainSet::new(input_len, 1);
    let k0 = (input_len - 1).max(1);
    for phase in (0..spacing).step_by(stride.max(1)) {
        let sparse: Vec<f64> = series[phase..].iter().step_by(spacing).copied().collect();
        let dense = match method {
            Some(m) => interpolate(&sparse, spacing, m, autocorr)?,
            None => Vec::new(),
        };
        let mut k = k0;
        loop {
            let local = k * spacing;
            let n0 = phase + local;
            if n0 + spacing >= series.len() {
                break;
            }
            for i in 0..input_len {
                set.inputs.push(match method {
                    Some(_) => dense[local - i],
                    None => sparse[k - i],
                });
            }
            set.targets.push(series[n0 + spacing]);
            k += 1;
        }
    }
    if set.is_empty() {
        return Err(Error::Sizing {
            what: format!("series for spacing {spacing} interpolation windows"),
            required: (k0 + 1) * spacing + 1,
            available: series.len(),
        });
    }
    Ok(set)
}

/// Decimated against linearly and LMMSE-interpolated inputs for a neural
/// predictor, one report spacing ahead.
pub fn interpolation(ctx: &SweepContext, kind: PredictorKind, fd: f64, spacings: &[usize]) -> Result<Vec<InterpRow>> {
    let profile = ctx.channel.profile.clone();
    let train_trace = ctx.trace(&ctx.train_config(&profile, fd))?;
    let test_trace = ctx.trace(&ctx.test_config(&profile, fd))?;
    let raw = train_trace.track(Track::Best);
    let n_train = (raw.len() as f64 * ctx.fractions.train / (ctx.fractions.train + ctx.fractions.val)) as usize;
    let stats = crate::eesm::Standardizer::fit_or_unit(&raw[..n_train]);
    let z = stats.standardize(&raw);
    let z_test = stats.standardize(&test_trace.track(Track::Best));
    let (z_train, z_val) = z.split_at(n_train);
    let p = ctx.input_len;

    let points: Vec<(Option<InterpMethod>, usize)> = [None, Some(InterpMethod::Linear), Some(InterpMethod::Lmmse)]
        .into_iter()
        .flat_map(|m| spacings.iter().map(move |&s| (m, s)))
        .collect();
    points
        .par_iter()
        .map(|&(method, spacing)| {
            let r = estimate_autocorrelation(z_train, spacing)?;
            let autocorr = |m: usize| r.at(m);
            let ac: Option<&dyn Fn(usize) -> f64> = Some(&autocorr);
            let stride = ctx.stride.unwrap_or(spacing).min(spacing);
            let train_set = interp_set(z_train, p, spacing, stride, method, ac)?;
            let val_set = interp_set(z_val, p, spacing, spacing, method, ac)?;
            let test_set = interp_set(&z_test, p, spacing, spacing, method, ac)?;
            let seed = ctx.derive_seed(&format!("init/interp/{kind}/{spacing}"));
            let init = NeuralModel::new(kind, p, ctx.hidden, 1, seed)?;
            let (net, _) = train(&init, &train_set, &val_set, &ctx.train)?;
            let mse = net.evaluate(&test_set.inputs, &test_set.targets)?;
            let name = match method {
                None => "decimated",
                Some(InterpMethod::Linear) => "linear",
                Some(InterpMethod::Lmmse) => "lmmse",
            };
            Ok(InterpRow {
                method: name.to_string(),
                horizon: spacing,
                mse_db: mse_to_db(mse),
            })
        })
        .collect()
}

/// TDD link adaptation with ZOH, ideal CSI and each predictor kind.
pub fn tdd_throughput(ctx: &SweepContext, kinds: &[PredictorKind], fd: f64, t_csi: usize) -> Result<Vec<RunReport>> {
    let profile = ctx.channel.profile.clone();
    let ds = ctx.dataset(&[ctx.train_config(&profile, fd)], ctx.input_len, t_csi, TargetStrategy::BestCqi)?;
    let test_cfg = ctx.test_config(&profile, fd);
    let test = ctx.trace(&test_cfg)?;
    let base = PredictorSpec::tdd(PredictorKind::Zoh, ctx.input_len, ctx.hidden, t_csi);
    let mut models = vec![PredictorModel::zoh(base, ds.stats())?, PredictorModel::ideal(base)?];
    let trained: Vec<PredictorModel> = kinds
        .par_iter()
        .map(|&k| ctx.fit(&ds, PredictorSpec { kind: k, ..base }))
        .collect::<Result<_>>()?;
    models.extend(trained);
    models.iter().map(|m| run_tdd_trace(&test, &test_cfg, &ctx.table, m)).collect()
}

/// FDD link adaptation over prediction horizons, ZOH included per horizon.
pub fn fdd_horizon(
    ctx: &SweepContext,
    kinds: &[PredictorKind],
    fd: f64,
    t_csi: usize,
    horizons: &[usize],
) -> Result<Vec<RunReport>> {
    let profile = ctx.channel.profile.clone();
    let ds = ctx.dataset(&[ctx.train_config(&profile, fd)], ctx.input_len, t_csi, TargetStrategy::BestCqi)?;
    let test_cfg = ctx.test_config(&profile, fd);
    let test = ctx.trace(&test_cfg)?;
    let nested: Vec<Vec<RunReport>> = horizons
        .par_iter()
        .map(|&h| {
            let base = PredictorSpec::fdd(PredictorKind::Zoh, ctx.input_len, ctx.hidden, t_csi, h);
            let mut models = vec![PredictorModel::zoh(base, ds.stats())?];
            for &k in kinds {
                models.push(ctx.fit(&ds, PredictorSpec { kind: k, ..base })?);
            }
            models.iter().map(|m| run_fdd_trace(&test, &test_cfg, &ctx.table, m)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

/// Per-Doppler models against one model trained on the mixed Doppler set.
pub fn doppler_generalization(
    ctx: &SweepContext,
    kinds: &[PredictorKind],
    test_dopplers: &[f64],
    mixed_dopplers: &[f64],
    t_csi: usize,
) -> Result<Vec<MseRow>> {
    let profile = ctx.channel.profile.clone();
    let p = ctx.input_len;
    let configs: Vec<ChannelConfig> = mixed_dopplers.iter().map(|&f| ctx.mixed_config(&profile, f)).collect();
    let mixed_ds = ctx.dataset(&configs, p, t_csi, TargetStrategy::BestCqi)?;
    let mixed: Vec<PredictorModel> = kinds
        .par_iter()
        .map(|&k| ctx.fit(&mixed_ds, ctx.spec(k, p, ctx.hidden, t_csi, TargetStrategy::BestCqi)))
        .collect::<Result<_>>()?;
    drop(mixed_ds);
    let kinds: Vec<_> = kinds.iter().map(|&k| (k, ctx.hidden)).collect();
    flatten(
        test_dopplers
            .par_iter()
            .map(|&fd| {
                let mut rows = ctx.specific(&kinds, fd, p, t_csi, TargetStrategy::BestCqi)?;
                let test = ctx.trace(&ctx.test_config(&profile, fd))?;
                for m in &mixed {
                    rows.push(ctx.row(m, ctx.mse(m, &test)?, fd, &profile, "mixed"));
                }
                Ok(rows)
            })
            .collect(),
    )
}

/// Models trained on the context profile, evaluated on every listed profile.
pub fn profile_generalization(
    ctx: &SweepContext,
    kinds: &[PredictorKind],
    dopplers: &[f64],
    profiles: &[String],
    t_csi: usize,
) -> Result<Vec<MseRow>> {
    let train_profile = ctx.channel.profile.clone();
    let p = ctx.input_len;
    flatten(
        dopplers
            .par_iter()
            .map(|&fd| {
                let ds = ctx.dataset(&[ctx.train_config(&train_profile, fd)], p, t_csi, TargetStrategy::BestCqi)?;
                let mut rows = Vec::new();
                for &k in kinds {
                    let m = ctx.fit(&ds, ctx.spec(k, p, ctx.hidden, t_csi, TargetStrategy::BestCqi))?;
                    for prof in profiles {
                        let test = ctx.trace(&ctx.test_config(prof, fd))?;
                        rows.push(ctx.row(&m, ctx.mse(&m, &test)?, fd, prof, "specific"));
                    }
                }
                Ok(rows)
            })
            .collect(),
    )
}

/// A CSV file held in memory until written.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Writes `dir/name` through a temporary file so readers never see a
    /// partial table.
    pub fn write(&self, dir: &Path, config_hash: &str, seed: u64) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(&self.name);
        let tmp = dir.join(format!(".{}.tmp", self.name));
        {
            let mut f = fs::File::create(&tmp)?;
            writeln!(f, "# config_hash={config_hash} seed={seed}")?;
            let mut w = csv::Writer::from_writer(f);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }
}

fn db(x: f64) -> String {
    format!("{x:.4}")
}

fn mse_table(name: &str, rows: &[MseRow], cols: &[&str]) -> CsvTable {
    let mut header: Vec<&str> = vec!["predictor"];
    header.extend_from_slice(cols);
    header.push("mse_db");
    let mut t = CsvTable::new(name, &header);
    for r in rows {
        let mut rec = vec![r.predictor.to_string()];
        for c in cols {
            rec.push(match *c {
                "target" => r.target.to_string(),
                "training" => r.training.clone(),
                "profile" => r.profile.clone(),
                "doppler_hz" => r.doppler_hz.to_string(),
                "t_csi" => r.t_csi.to_string(),
                "input_len" => r.input_len.to_string(),
                "hidden" => r.hidden.to_string(),
                "flops" => r.flops.to_string(),
                other => unreachable!("unknown column {other}"),
            });
        }
        rec.push(db(r.curve.average_db));
        t.push(rec);
    }
    t
}

fn fd_tcsi_tables(rows: &[MseRow]) -> Vec<CsvTable> {
    let mut long = CsvTable::new("fd_tcsi.csv", &["predictor", "doppler_hz", "t_csi", "fd_tcsi", "tau", "mse_db"]);
    let mut summary = CsvTable::new(
        "fd_tcsi_summary.csv",
        &["predictor", "doppler_hz", "t_csi", "fd_tcsi", "mse_avg_db", "mse_last_db"],
    );
    for r in rows {
        let product = (r.doppler_hz * r.t_csi as f64).to_string();
        for (h, m) in r.curve.horizons.iter().zip(&r.curve.per_horizon_db) {
            long.push(vec![
                r.predictor.to_string(),
                r.doppler_hz.to_string(),
                r.t_csi.to_string(),
                product.clone(),
                h.to_string(),
                db(*m),
            ]);
        }
        summary.push(vec![
            r.predictor.to_string(),
            r.doppler_hz.to_string(),
            r.t_csi.to_string(),
            product,
            db(r.curve.average_db),
            db(r.curve.last_db()),
        ]);
    }
    vec![long, summary]
}

fn tdd_tables(reports: &[RunReport]) -> Vec<CsvTable> {
    let mut long = CsvTable::new("tdd_throughput.csv", &["predictor", "tau", "throughput_mbps", "mse_db"]);
    let mut summary = CsvTable::new(
        "tdd_throughput_summary.csv",
        &["predictor", "flops", "unconditioned_tp", "standard_error", "conditioned_std"],
    );
    for r in reports {
        let mse: HashMap<usize, f64> = r.mse_db.iter().copied().collect();
        for (i, tp) in r.conditioned_tp.iter().enumerate() {
            let m = mse.get(&(i + 1)).map(|v| db(*v)).unwrap_or_default();
            long.push(vec![r.predictor.clone(), (i + 1).to_string(), format!("{tp:.4}"), m]);
        }
        summary.push(vec![
            r.predictor.clone(),
            r.flops.to_string(),
            format!("{:.4}", r.unconditioned_tp),
            format!("{:.4}", r.standard_error()),
            format!("{:.4}", r.conditioned_spread()),
        ]);
    }
    vec![long, summary]
}

fn fdd_tables(reports: &[RunReport]) -> Vec<CsvTable> {
    let mut summary = CsvTable::new(
        "fdd_horizon.csv",
        &["predictor", "horizon", "unconditioned_tp", "conditioned_std", "mse_db", "p_error_minus1", "p_error_plus1"],
    );
    let mut cond = CsvTable::new("fdd_conditioned.csv", &["predictor", "horizon", "tau", "throughput_mbps"]);
    let mut errs = CsvTable::new("fdd_cqi_error.csv", &["predictor", "horizon", "error", "probability"]);
    for r in reports {
        let h = r.fdd_horizon.map(|h| h.to_string()).unwrap_or_default();
        summary.push(vec![
            r.predictor.clone(),
            h.clone(),
            format!("{:.4}", r.unconditioned_tp),
            format!("{:.4}", r.conditioned_spread()),
            r.mse_db.first().map(|m| db(m.1)).unwrap_or_default(),
            format!("{:.6}", r.error_probability(-1)),
            format!("{:.6}", r.error_probability(1)),
        ]);
        for (i, tp) in r.conditioned_tp.iter().enumerate() {
            cond.push(vec![r.predictor.clone(), h.clone(), (i + 1).to_string(), format!("{tp:.4}")]);
        }
        for (e, p) in &r.cqi_error_hist {
            errs.push(vec![r.predictor.clone(), h.clone(), e.to_string(), format!("{p:.6}")]);
        }
    }
    vec![summary, cond, errs]
}

/// Runs the sweep behind `figure` and returns its tables.
pub fn figure_tables(ctx: &SweepContext, axes: &SweepAxes, figure: Figure) -> Result<Vec<CsvTable>> {
    axes.validate()?;
    let kinds = &axes.predictors;
    let fd = axes.reference_doppler_hz;
    let t = axes.mse_t_csi;
    Ok(match figure {
        Figure::Complexity => vec![mse_table(
            "complexity.csv",
            &complexity(ctx, fd, t, &axes.hidden)?,
            &["hidden", "flops"],
        )],
        Figure::InputLen => vec![mse_table(
            "input_len.csv",
            &input_len(ctx, kinds, &axes.doppler_hz, t, &axes.input_len)?,
            &["doppler_hz", "input_len"],
        )],
        Figure::FdTcsi => fd_tcsi_tables(&fd_tcsi(ctx, kinds, &axes.doppler_hz, &axes.t_csi)?),
        Figure::Interpolation => {
            let rows = interpolation(ctx, neural_kind(kinds), fd, &axes.interp_horizons)?;
            let mut t = CsvTable::new("interpolation.csv", &["method", "horizon", "mse_db"]);
            for r in rows {
                t.push(vec![r.method, r.horizon.to_string(), db(r.mse_db)]);
            }
            vec![t]
        }
        Figure::TargetStrategy => vec![mse_table(
            "target_strategy.csv",
            &target_strategy(ctx, kinds, fd, t)?,
            &["target", "flops"],
        )],
        Figure::TddThroughput => tdd_tables(&tdd_throughput(ctx, kinds, fd, axes.throughput_t_csi)?),
        Figure::FddHorizon => fdd_tables(&fdd_horizon(ctx, kinds, fd, axes.throughput_t_csi, &axes.horizons)?),
        Figure::DopplerGeneralization => vec![mse_table(
            "doppler_generalization.csv",
            &doppler_generalization(ctx, kinds, &axes.doppler_hz, &axes.mixed_doppler_hz, t)?,
            &["training", "doppler_hz"],
        )],
        Figure::ProfileGeneralization => vec![mse_table(
            "profile_generalization.csv",
            &profile_generalization(ctx, kinds, &axes.doppler_hz, &axes.profiles, t)?,
            &["profile", "doppler_hz"],
        )],
    })
}

/// Runs `figure` and writes its CSVs into `out_dir`.
pub fn run_figure(ctx: &SweepContext, axes: &SweepAxes, figure: Figure, out_dir: &Path) -> Result<Vec<PathBuf>> {
    figure_tables(ctx, axes, figure)?
        .iter()
        .map(|t| t.write(out_dir, &ctx.config_hash, ctx.seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_ctx() -> SweepContext {
        let mut ctx = SweepContext::new(
            CqiTable::default(),
            ChannelConfig::new(10.0, 3000, 1),
            TrainConfig {
                epochs: 3,
                batch_size: 64,
                ..TrainConfig::default()
            },
            7,
        );
        ctx.test_slots = 1000;
        ctx.mixed_slots = 600;
        ctx.hidden = 4;
        ctx
    }

    #[test]
    fn figure_keys_round_trip_and_unknown_key_lists_valid_ones() {
        for f in Figure::ALL {
            assert_eq!(f.key().parse::<Figure>().unwrap(), f);
        }
        let e = "waterfall".parse::<Figure>().unwrap_err();
        assert!(matches!(e, Error::Usage(_)));
        let msg = e.to_string();
        for f in Figure::ALL {
            assert!(msg.contains(f.key()), "{msg}");
        }
    }

    #[test]
    fn empty_axis_is_rejected() {
        let axes = SweepAxes {
            hidden: vec![],
            ..SweepAxes::default()
        };
        assert!(axes.validate().unwrap_err().to_string().contains("hidden"));
    }

    #[test]
    fn complexity_rows_carry_exact_flops() {
        let ctx = small_ctx();
        let rows = complexity(&ctx, 10.0, 4, &[4, 8]).unwrap();
        assert_eq!(rows.len(), 7);
        for r in &rows {
            let expected = crate::predictor::flops_single(r.predictor, r.input_len as u64, r.hidden as u64, 3);
            assert_eq!(r.flops, expected, "{:?}", r.predictor);
        }
    }

    #[test]
    fn target_strategy_flops_ratio_is_fifteen() {
        let ctx = small_ctx();
        let rows = target_strategy(&ctx, &[PredictorKind::Wiener, PredictorKind::Dnn], 10.0, 4).unwrap();
        for k in [PredictorKind::Wiener, PredictorKind::Dnn] {
            let f = |s| rows.iter().find(|r| r.predictor == k && r.target == s).unwrap().flops;
            assert_eq!(f(TargetStrategy::ByCqi), 15 * f(TargetStrategy::BestCqi));
        }
    }

    #[test]
    fn interpolated_windows_use_reconstructed_slots() {
        let series: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let dec = interp_set(&series, 2, 4, 4, None, None).unwrap();
        assert_eq!(&dec.inputs[..2], &[4.0, 0.0]);
        assert_eq!(dec.targets[0], 8.0);
        let lin = interp_set(&series, 2, 4, 4, Some(InterpMethod::Linear), None).unwrap();
        assert_eq!(&lin.inputs[..2], &[4.0, 3.0]);
        assert_eq!(lin.len(), dec.len());
    }

    #[test]
    fn tables_are_written_with_comment_and_header() {
        let ctx = small_ctx();
        let dir = tempfile::tempdir().unwrap();
        let axes = SweepAxes {
            predictors: vec![PredictorKind::Wiener],
            ..SweepAxes::default()
        };
        let paths = run_figure(&ctx, &axes, Figure::TddThroughput, dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        let text = fs::read_to_string(&paths[1]).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# config_hash="));
        assert_eq!(lines.next().unwrap(), "predictor,flops,unconditioned_tp,standard_error,conditioned_std");
        assert_eq!(lines.count(), 3);
        let again = run_figure(&ctx, &axes, Figure::TddThroughput, dir.path()).unwrap();
        assert_eq!(fs::read_to_string(&again[1]).unwrap(), text);
    }
}
