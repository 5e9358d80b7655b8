//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::channel::ChannelConfig;
use crate::eesm::CqiTable;
use crate::error::{Error, Result};
use crate::neural::TrainConfig;
use crate::predictor::{PredictorKind, PredictorSpec};
use crate::sim::SplitFractions;
use crate::sweep::{SweepAxes, SweepContext};

/// Dataset sizes and splitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetOptions {
    pub fractions: SplitFractions,
    /// Anchor stride of training windows; unset means one window per report.
    pub stride: Option<usize>,
    pub test_slots: usize,
    pub mixed_slots: usize,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            fractions: SplitFractions::default(),
            stride: None,
            test_slots: 40_000,
            mixed_slots: 16_000,
        }
    }
}

/// Everything one run of the command-line tool needs.
///
/// Channel seeds are derived from the global `seed`; the `seed` key of the
/// channel table is ignored by the sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// CQI table file; the built-in table when absent.
    #[serde(default)]
    pub cqi_table: Option<PathBuf>,
    #[serde(default = "default_channel")]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub dataset: DatasetOptions,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default = "default_predictors")]
    pub predictors: Vec<PredictorSpec>,
    #[serde(default)]
    pub sweep: SweepAxes,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_channel() -> ChannelConfig {
    ChannelConfig::new(10.0, 110_000, 0)
}

fn default_predictors() -> Vec<PredictorSpec> {
    vec![
        PredictorSpec::tdd(PredictorKind::Wiener, 4, 16, 4),
        PredictorSpec::tdd(PredictorKind::Gru, 4, 16, 4),
    ]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: default_out_dir(),
            cqi_table: None,
            channel: default_channel(),
            dataset: DatasetOptions::default(),
            train: TrainConfig::default(),
            predictors: default_predictors(),
            sweep: SweepAxes::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML text; relative paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if let Some(p) = &cfg.cqi_table {
            if p.is_relative() {
                cfg.cqi_table = Some(base.join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| match e {
            Error::Parse(detail) => Error::Load {
                path: path.to_path_buf(),
                detail,
            },
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.cqi_table {
            if !p.is_file() {
                return Err(Error::Load {
                    path: p.clone(),
                    detail: "CQI table file does not exist".into(),
                });
            }
        }
        self.channel.validate()?;
        self.dataset.fractions.validate()?;
        if self.dataset.stride == Some(0) || self.dataset.test_slots == 0 || self.dataset.mixed_slots == 0 {
            return Err(Error::Config("dataset stride and slot counts must be >= 1".into()));
        }
        self.train.validate()?;
        if self.predictors.is_empty() {
            return Err(Error::Config("at least one predictor is required".into()));
        }
        for p in &self.predictors {
            p.validate()?;
        }
        self.sweep.validate()
    }

    pub fn table(&self) -> Result<CqiTable> {
        match &self.cqi_table {
            Some(p) => CqiTable::load(p),
            None => Ok(CqiTable::default()),
        }
    }

    /// Short digest of the whole configuration.
    pub fn hash(&self) -> String {
        Sha256::digest(format!("{self:?}").as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn sweep_context(&self) -> Result<SweepContext> {
        let mut ctx = SweepContext::new(self.table()?, self.channel.clone(), self.train.clone(), self.seed);
        ctx.fractions = self.dataset.fractions;
        ctx.stride = self.dataset.stride;
        ctx.test_slots = self.dataset.test_slots;
        ctx.mixed_slots = self.dataset.mixed_slots;
        ctx.input_len = self.sweep.reference_input_len;
        ctx.hidden = self.sweep.reference_hidden;
        ctx.config_hash = self.hash();
        Ok(ctx)
    }
}
