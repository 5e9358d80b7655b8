use std::path::Path;

use serde::{Deserialize, Serialize};

use super::spec::{PredictorKind, PredictorSpec};
use super::{flops, zoh};
use crate::eesm::Standardizer;
use crate::error::{Error, Result};
use crate::neural::NeuralModel;
use crate::wiener::WienerBank;

#[derive(Debug, Clone, PartialEq)]
pub enum Engine {
    Zoh,
    /// Genie: the simulation substitutes the true future values.
    Ideal,
    Wiener(WienerBank),
    Neural(NeuralModel),
}

/// Predictor for one effective-SINR track, with the statistics that map raw
/// values to the standardized domain it works in.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackPredictor {
    pub stats: Standardizer,
    pub engine: Engine,
}

impl TrackPredictor {
    /// Standardized prediction for a standardized window.
    pub fn predict(&self, window: &[f64], output_len: usize) -> Result<Vec<f64>> {
        match &self.engine {
            Engine::Zoh => Ok(zoh(window, output_len)),
            Engine::Ideal => Err(Error::Config("the ideal predictor has no forecast rule".into())),
            Engine::Wiener(bank) => Ok(bank.predict(window)),
            Engine::Neural(net) => net.forward(window),
        }
    }
}

/// A predictor specification with one track predictor per predicted track
/// (one in best-CQI mode, fifteen in by-CQI mode).
#[derive(Debug, Clone, PartialEq)]
pub struct PredictorModel {
    pub spec: PredictorSpec,
    pub tracks: Vec<TrackPredictor>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    spec: PredictorSpec,
    ideal: bool,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl PredictorModel {
    pub fn new(spec: PredictorSpec, tracks: Vec<TrackPredictor>) -> Result<Self> {
        spec.validate()?;
        if tracks.len() != spec.n_tracks() {
            return Err(Error::Config(format!(
                "{} target needs {} track predictors, got {}",
                spec.target,
                spec.n_tracks(),
                tracks.len()
            )));
        }
        for t in &tracks {
            let ok = match &t.engine {
                Engine::Zoh => spec.kind == PredictorKind::Zoh,
                Engine::Ideal => true,
                Engine::Wiener(b) => {
                    spec.kind == PredictorKind::Wiener
                        && b.input_len == spec.input_len
                        && b.filters.iter().map(|f| f.horizon).eq(spec.horizons())
                }
                Engine::Neural(n) => {
                    n.kind() == spec.kind && n.input_len() == spec.input_len && n.output_len() == spec.output_len()
                }
            };
            if !ok {
                return Err(Error::Config("track predictor does not match the predictor spec".into()));
            }
        }
        Ok(Self { spec, tracks })
    }

    /// Zero-order hold over the given track statistics.
    pub fn zoh(spec: PredictorSpec, stats: Vec<Standardizer>) -> Result<Self> {
        let tracks = stats
            .into_iter()
            .map(|stats| TrackPredictor { stats, engine: Engine::Zoh })
            .collect();
        Self::new(PredictorSpec { kind: PredictorKind::Zoh, ..spec }, tracks)
    }

    /// Perfect knowledge of the future channel.
    pub fn ideal(spec: PredictorSpec) -> Result<Self> {
        let spec = PredictorSpec { kind: PredictorKind::Zoh, ..spec };
        let tracks = (0..spec.n_tracks())
            .map(|_| TrackPredictor {
                stats: Standardizer::new(0.0, 1.0).expect("unit statistics"),
                engine: Engine::Ideal,
            })
            .collect();
        Self::new(spec, tracks)
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self.tracks.first().map(|t| &t.engine), Some(Engine::Ideal))
    }

    pub fn label(&self) -> String {
        if self.is_ideal() {
            "ideal".into()
        } else {
            self.spec.kind.to_string()
        }
    }

    pub fn flops(&self) -> u64 {
        if self.is_ideal() {
            0
        } else {
            flops(&self.spec)
        }
    }

    /// Raw-domain forecast for track `track` from a raw, most-recent-first
    /// window: standardize, predict, destandardize.
    pub fn predict_raw(&self, track: usize, window: &[f64]) -> Result<Vec<f64>> {
        let t = &self.tracks[track];
        let z = t.stats.standardize(window);
        let out = t.predict(&z, self.spec.output_len())?;
        Ok(t.stats.destandardize(&out))
    }

    /// Writes `model.toml` plus one engine file per track into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let manifest = Manifest {
            spec: self.spec,
            ideal: self.is_ideal(),
            means: self.tracks.iter().map(|t| t.stats.mean).collect(),
            stds: self.tracks.iter().map(|t| t.stats.std).collect(),
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(dir.join("model.toml"), text)?;
        for (i, t) in self.tracks.iter().enumerate() {
            match &t.engine {
                Engine::Wiener(b) => b.save(&dir.join(format!("track_{i:02}.bank")))?,
                Engine::Neural(n) => n.save(&dir.join(format!("track_{i:02}.net")))?,
                Engine::Zoh | Engine::Ideal => {}
            }
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("model.toml");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Load {
            path: path.clone(),
            detail: e.to_string(),
        })?;
        let m: Manifest = toml::from_str(&text).map_err(|e| Error::Load {
            path: path.clone(),
            detail: e.to_string(),
        })?;
        if m.ideal {
            return Self::ideal(m.spec);
        }
        if m.means.len() != m.stds.len() {
            return Err(Error::Load {
                path,
                detail: "statistics arrays differ in length".into(),
            });
        }
        let mut tracks = Vec::with_capacity(m.means.len());
        for (i, (&mean, &std)) in m.means.iter().zip(&m.stds).enumerate() {
            let stats = Standardizer::new(mean, std)?;
            let engine = match m.spec.kind {
                PredictorKind::Zoh => Engine::Zoh,
                PredictorKind::Wiener => Engine::Wiener(WienerBank::load(&dir.join(format!("track_{i:02}.bank")))?),
                _ => Engine::Neural(NeuralModel::load(&dir.join(format!("track_{i:02}.net")))?),
            };
            tracks.push(TrackPredictor { stats, engine });
        }
        Self::new(m.spec, tracks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiener::{build_filter_bank, Autocorrelation};

    #[test]
    fn raw_prediction_round_trips_statistics() {
        let spec = PredictorSpec::tdd(PredictorKind::Zoh, 3, 0, 4);
        let m = PredictorModel::zoh(spec, vec![Standardizer::new(5.0, 2.0).unwrap()]).unwrap();
        let y = m.predict_raw(0, &[9.0, 1.0, 3.0]).unwrap();
        assert_eq!(y, vec![9.0; 3]);
    }

    #[test]
    fn mismatched_track_count_is_rejected() {
        let spec = PredictorSpec::tdd(PredictorKind::Zoh, 3, 0, 4).by_cqi();
        let e = PredictorModel::zoh(spec, vec![Standardizer::new(0.0, 1.0).unwrap()]);
        assert!(matches!(e, Err(Error::Config(_))));
    }

    #[test]
    fn save_load_wiener() {
        let r = Autocorrelation::from_values((0..40).map(|m| 0.9f64.powi(m)).collect()).unwrap();
        let spec = PredictorSpec::tdd(PredictorKind::Wiener, 3, 0, 4);
        let bank = build_filter_bank(&r, 3, 4, &spec.horizons()).unwrap();
        let m = PredictorModel::new(
            spec,
            vec![TrackPredictor {
                stats: Standardizer::new(1.5, 0.5).unwrap(),
                engine: Engine::Wiener(bank),
            }],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        let back = PredictorModel::load(dir.path()).unwrap();
        let w = [1.0, 2.0, 0.5];
        let (a, b) = (m.predict_raw(0, &w).unwrap(), back.predict_raw(0, &w).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
