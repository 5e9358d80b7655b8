use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::channel::{generate_sinr_grid, ChannelConfig, SinrGrid};
use crate::eesm::{build_trace, select_cqi_scalar, select_cqi_unchecked, CqiTable, EffSinrTrace};
use crate::error::{Error, Result};
use crate::predictor::{PredictionMode, PredictorModel, TargetStrategy};

use super::dataset::DatasetSpec;
use super::metrics::{mse_to_db, slot_throughput, LinkDims};

/// Outcome of one link-adaptation run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub predictor: String,
    pub target: TargetStrategy,
    pub t_csi: usize,
    /// FDD horizon, if the run was FDD.
    pub fdd_horizon: Option<usize>,
    pub flops: u64,
    /// Mean throughput (Mbps) `tau` slots after the report, `tau = 1..T_CSI`.
    pub conditioned_tp: Vec<f64>,
    /// Mean over every data slot of the run.
    pub unconditioned_tp: f64,
    /// `(horizon, MSE dB)` on the standardized track(s).
    pub mse_db: Vec<(usize, f64)>,
    /// Probability of each `true best CQI - used CQI`.
    pub cqi_error_hist: BTreeMap<i32, f64>,
    /// Throughput of every data slot, in time order.
    pub slot_tp: Vec<f64>,
    pub intervals: usize,
    pub config_hash: String,
    pub seed: u64,
}

impl RunReport {
    /// Standard deviation of the conditioned throughput across `tau`.
    pub fn conditioned_spread(&self) -> f64 {
        let n = self.conditioned_tp.len() as f64;
        let mean = self.conditioned_tp.iter().sum::<f64>() / n;
        (self.conditioned_tp.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
    }

    /// Standard error of the unconditioned throughput, treating intervals
    /// as independent.
    pub fn standard_error(&self) -> f64 {
        let per = self.t_csi - 1;
        let means: Vec<f64> = self.slot_tp.chunks(per).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        let n = means.len() as f64;
        let m = means.iter().sum::<f64>() / n;
        let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }

    pub fn error_probability(&self, err: i32) -> f64 {
        self.cqi_error_hist.get(&err).copied().unwrap_or(0.0)
    }

    fn comment(&self) -> String {
        format!("# config_hash={} seed={}\n", self.config_hash, self.seed)
    }

    /// Writes `conditioned.csv` and `cqi_error.csv` into `dir`.
    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mse: BTreeMap<usize, f64> = self.mse_db.iter().copied().collect();
        let mut f = std::fs::File::create(dir.join("conditioned.csv"))?;
        f.write_all(self.comment().as_bytes())?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["tau", "throughput_mbps", "mse_db"])?;
        for (i, tp) in self.conditioned_tp.iter().enumerate() {
            let tau = i + 1;
            let m = mse.get(&tau).map(|v| v.to_string()).unwrap_or_default();
            w.write_record([tau.to_string(), tp.to_string(), m])?;
        }
        w.flush()?;

        let mut f = std::fs::File::create(dir.join("cqi_error.csv"))?;
        f.write_all(self.comment().as_bytes())?;
        let mut w = csv::Writer::from_writer(f);
        w.write_record(["error", "probability"])?;
        for (e, p) in &self.cqi_error_hist {
            w.write_record([e.to_string(), p.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// One row per report: hash, predictor, FLOPs, unconditioned throughput and
/// per-horizon MSE.
pub fn write_summary(path: &Path, reports: &[RunReport]) -> Result<()> {
    let horizons: Vec<usize> = {
        let mut h: Vec<usize> = reports.iter().flat_map(|r| r.mse_db.iter().map(|m| m.0)).collect();
        h.sort_unstable();
        h.dedup();
        h
    };
    let mut f = std::fs::File::create(path)?;
    if let Some(r) = reports.first() {
        f.write_all(r.comment().as_bytes())?;
    }
    let mut w = csv::Writer::from_writer(f);
    let mut header = vec![
        "config_hash".to_string(),
        "predictor".into(),
        "target".into(),
        "fdd_horizon".into(),
        "flops".into(),
        "unconditioned_tp".into(),
    ];
    header.extend(horizons.iter().map(|h| format!("mse_db_tau_{h}")));
    w.write_record(&header)?;
    for r in reports {
        let mse: BTreeMap<usize, f64> = r.mse_db.iter().copied().collect();
        let mut rec = vec![
            r.config_hash.clone(),
            r.predictor.clone(),
            r.target.to_string(),
            r.fdd_horizon.map(|h| h.to_string()).unwrap_or_default(),
            r.flops.to_string(),
            r.unconditioned_tp.to_string(),
        ];
        rec.extend(horizons.iter().map(|h| mse.get(h).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Short digest identifying a channel configuration.
pub fn config_hash(config: &ChannelConfig) -> String {
    let digest = Sha256::digest(format!("{config:?}").as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

struct Accum {
    per_tau: Vec<f64>,
    slot_tp: Vec<f64>,
    sse: Vec<f64>,
    sse_n: usize,
    errors: BTreeMap<i32, usize>,
}

fn windows_at(tracks: &[Vec<f64>], anchor: usize, p: usize, t: usize) -> Vec<Vec<f64>> {
    tracks.iter().map(|s| (0..p).map(|i| s[anchor - t * i]).collect()).collect()
}

fn run(
    trace: &EffSinrTrace,
    config: &ChannelConfig,
    table: &CqiTable,
    model: &PredictorModel,
    fdd: Option<usize>,
) -> Result<RunReport> {
    let spec = model.spec;
    let (p, t) = (spec.input_len, spec.t_csi);
    let dims = LinkDims::from(config);
    let track_ids = DatasetSpec::new(p, t, spec.target).tracks();
    let tracks: Vec<Vec<f64>> = track_ids.iter().map(|&id| trace.track(id)).collect();
    let first = t * (p - 1);
    if trace.len() < first + t {
        return Err(Error::Sizing {
            what: "slots for one transmission interval".into(),
            required: first + t,
            available: trace.len(),
        });
    }
    let intervals = (trace.len() - first - t) / t + 1;
    let horizons = spec.horizons();
    let mut acc = Accum {
        per_tau: vec![0.0; t - 1],
        slot_tp: Vec::with_capacity(intervals * (t - 1)),
        sse: vec![0.0; horizons.len()],
        sse_n: 0,
        errors: BTreeMap::new(),
    };
    for k in 0..intervals {
        let anchor = first + k * t;
        // Raw forecast per track, indexed like `horizons`.
        let forecasts: Vec<Vec<f64>> = if model.is_ideal() {
            tracks.iter().map(|s| horizons.iter().map(|h| s[anchor + h]).collect()).collect()
        } else {
            windows_at(&tracks, anchor, p, t)
                .iter()
                .enumerate()
                .map(|(i, w)| model.predict_raw(i, w))
                .collect::<Result<_>>()?
        };
        for (i, f) in forecasts.iter().enumerate() {
            let st = model.tracks[i].stats;
            for (j, &h) in horizons.iter().enumerate() {
                let e = st.apply(f[j]) - st.apply(tracks[i][anchor + h]);
                acc.sse[j] += e * e;
            }
        }
        acc.sse_n += tracks.len();
        let choose = |j: usize| -> usize {
            match spec.target {
                TargetStrategy::BestCqi => select_cqi_scalar(forecasts[0][j], table),
                TargetStrategy::ByCqi => {
                    let v: Vec<f64> = forecasts.iter().map(|f| f[j]).collect();
                    select_cqi_unchecked(&v, table)
                }
            }
        };
        let fdd_cqi = fdd.map(|_| choose(0));
        for tau in 1..t {
            let n = anchor + tau;
            let cqi = match (fdd_cqi, model.is_ideal()) {
                (_, true) if fdd.is_none() => trace.best_cqi_index[n],
                (Some(c), _) => c,
                (None, _) => choose(tau - 1),
            };
            let tp = slot_throughput(cqi, &trace.per_cqi[n], table, dims);
            acc.per_tau[tau - 1] += tp;
            acc.slot_tp.push(tp);
            *acc.errors.entry(trace.best_cqi_index[n] as i32 - cqi as i32).or_insert(0) += 1;
        }
    }
    let total_slots = acc.slot_tp.len() as f64;
    Ok(RunReport {
        predictor: model.label(),
        target: spec.target,
        t_csi: t,
        fdd_horizon: fdd,
        flops: model.flops(),
        conditioned_tp: acc.per_tau.iter().map(|s| s / intervals as f64).collect(),
        unconditioned_tp: acc.slot_tp.iter().sum::<f64>() / total_slots,
        mse_db: horizons
            .iter()
            .zip(&acc.sse)
            .map(|(&h, s)| (h, mse_to_db(s / acc.sse_n as f64)))
            .collect(),
        cqi_error_hist: acc.errors.into_iter().map(|(e, c)| (e, c as f64 / total_slots)).collect(),
        slot_tp: acc.slot_tp,
        intervals,
        config_hash: config_hash(config),
        seed: config.seed,
    })
}

/// TDD link adaptation: at every report the predictor forecasts each slot
/// of the coming interval and each slot gets its own CQI.
pub fn run_tdd_trace(
    trace: &EffSinrTrace,
    config: &ChannelConfig,
    table: &CqiTable,
    model: &PredictorModel,
) -> Result<RunReport> {
    if model.spec.mode != PredictionMode::TddVector {
        return Err(Error::Config("TDD runs need a tdd_vector predictor".into()));
    }
    run(trace, config, table, model, None)
}

/// FDD link adaptation: one CQI per interval, chosen from the forecast at
/// the predictor's horizon.
pub fn run_fdd_trace(
    trace: &EffSinrTrace,
    config: &ChannelConfig,
    table: &CqiTable,
    model: &PredictorModel,
) -> Result<RunReport> {
    match model.spec.mode {
        PredictionMode::FddScalar { horizon } => run(trace, config, table, model, Some(horizon)),
        PredictionMode::TddVector => Err(Error::Config("FDD runs need an fdd_scalar predictor".into())),
    }
}

pub fn run_tdd(grid: &SinrGrid, table: &CqiTable, model: &PredictorModel) -> Result<RunReport> {
    run_tdd_trace(&build_trace(grid, table)?, grid.config(), table, model)
}

pub fn run_fdd(grid: &SinrGrid, table: &CqiTable, model: &PredictorModel) -> Result<RunReport> {
    run_fdd_trace(&build_trace(grid, table)?, grid.config(), table, model)
}

/// Generates the channel of `config` and runs TDD on it.
pub fn run_tdd_config(config: &ChannelConfig, table: &CqiTable, model: &PredictorModel) -> Result<RunReport> {
    run_tdd(&generate_sinr_grid(config)?, table, model)
}
