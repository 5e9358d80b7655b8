use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    Zoh,
    Wiener,
    Dnn,
    Gru,
    Lstm,
}

impl PredictorKind {
    pub fn is_neural(self) -> bool {
        matches!(self, Self::Dnn | Self::Gru | Self::Lstm)
    }
}

impl fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zoh => "zoh",
            Self::Wiener => "wiener",
            Self::Dnn => "dnn",
            Self::Gru => "gru",
            Self::Lstm => "lstm",
        })
    }
}

impl FromStr for PredictorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zoh" => Ok(Self::Zoh),
            "wiener" => Ok(Self::Wiener),
            "dnn" => Ok(Self::Dnn),
            "gru" => Ok(Self::Gru),
            "lstm" => Ok(Self::Lstm),
            other => Err(Error::Domain(format!("unknown predictor kind '{other}'"))),
        }
    }
}

/// TDD predicts every slot until the next report; FDD predicts one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMode {
    TddVector,
    FddScalar { horizon: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetStrategy {
    /// Predict only the effective SINR of the selected CQI.
    BestCqi,
    /// Predict the effective SINR of all 15 CQIs.
    ByCqi,
}

impl fmt::Display for TargetStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::BestCqi => "best_cqi",
            Self::ByCqi => "by_cqi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictorSpec {
    pub kind: PredictorKind,
    /// Past reports per input window.
    pub input_len: usize,
    /// Hidden width; ignored by ZOH and Wiener.
    #[serde(default)]
    pub hidden: usize,
    /// Reporting period in slots.
    pub t_csi: usize,
    pub mode: PredictionMode,
    pub target: TargetStrategy,
}

impl PredictorSpec {
    pub fn tdd(kind: PredictorKind, input_len: usize, hidden: usize, t_csi: usize) -> Self {
        Self {
            kind,
            input_len,
            hidden,
            t_csi,
            mode: PredictionMode::TddVector,
            target: TargetStrategy::BestCqi,
        }
    }

    pub fn fdd(kind: PredictorKind, input_len: usize, hidden: usize, t_csi: usize, horizon: usize) -> Self {
        Self {
            mode: PredictionMode::FddScalar { horizon },
            ..Self::tdd(kind, input_len, hidden, t_csi)
        }
    }

    pub fn by_cqi(mut self) -> Self {
        self.target = TargetStrategy::ByCqi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 {
            return Err(Error::Config("input length P must be >= 1".into()));
        }
        if self.t_csi < 2 {
            return Err(Error::Config("T_CSI must be >= 2".into()));
        }
        if let PredictionMode::FddScalar { horizon } = self.mode {
            if horizon == 0 || horizon >= self.t_csi {
                return Err(Error::Config(format!(
                    "FDD horizon must lie in 1..={}, got {horizon}",
                    self.t_csi - 1
                )));
            }
        }
        if self.kind.is_neural() && self.hidden == 0 {
            return Err(Error::Config("neural predictors need hidden >= 1".into()));
        }
        Ok(())
    }

    /// Horizons (slots after the report) the predictor emits, in order.
    pub fn horizons(&self) -> Vec<usize> {
        match self.mode {
            PredictionMode::TddVector => (1..self.t_csi).collect(),
            PredictionMode::FddScalar { horizon } => vec![horizon],
        }
    }

    pub fn output_len(&self) -> usize {
        match self.mode {
            PredictionMode::TddVector => self.t_csi - 1,
            PredictionMode::FddScalar { .. } => 1,
        }
    }

    pub fn n_tracks(&self) -> usize {
        match self.target {
            TargetStrategy::BestCqi => 1,
            TargetStrategy::ByCqi => crate::eesm::N_CQI,
        }
    }
}
