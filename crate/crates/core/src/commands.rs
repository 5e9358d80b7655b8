//! The generate / train / sweep / verify workflows behind the command-line
//! tool.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::eesm::Track;
use crate::predictor::{PredictionBatch, PredictorSpec};
use crate::sim::SplitFractions;
use crate::sweep::{run_figure, Figure};
use crate::verify::{run_all, Check, VerifyOptions};

/// Written next to a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seed: u64,
    pub channel_seed: u64,
    pub doppler_hz: f64,
    pub profile: String,
    pub n_slots: usize,
    pub input_len: usize,
    pub t_csi: usize,
    pub target: String,
    pub stride: usize,
    pub fractions: SplitFractions,
    pub train_windows: usize,
    pub val_windows: usize,
    pub test_windows: usize,
    pub tracks: Vec<TrackEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackEntry {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

fn track_name(t: Track) -> String {
    match t {
        Track::Best => "best".into(),
        Track::Cqi(i) => format!("cqi{i:02}"),
    }
}

fn write_with_comment(path: &Path, hash: &str, seed: u64, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = format!("# config_hash={hash} seed={seed}\n").into_bytes();
    body(&mut buf)?;
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, buf)?;
    fs::rename(tmp, path)?;
    Ok(())
}

fn write_batch(path: &Path, hash: &str, seed: u64, batch: &PredictionBatch) -> Result<()> {
    write_with_comment(path, hash, seed, |buf| batch.write_csv(buf))
}

/// Generates the dataset of the first configured predictor's shape and
/// writes one CSV per track and split plus `manifest.toml`.
pub fn cmd_generate(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest> {
    let spec = cfg.predictors[0];
    let ctx = cfg.sweep_context()?;
    let channel = ctx.train_config(&cfg.channel.profile, cfg.channel.doppler_hz);
    let ds = ctx.dataset(std::slice::from_ref(&channel), spec.input_len, spec.t_csi, spec.target)?;
    fs::create_dir_all(out)?;
    let hash = cfg.hash();
    for t in &ds.tracks {
        let name = track_name(t.track);
        for (split, batch) in [("train", &t.train), ("val", &t.val), ("test", &t.test)] {
            write_batch(&out.join(format!("{name}_{split}.csv")), &hash, cfg.seed, batch)?;
        }
    }
    let trace = ctx.trace(&channel)?;
    write_with_comment(&out.join("trace.csv"), &hash, cfg.seed, |buf| trace.write_csv(buf))?;

    let (train_windows, val_windows, test_windows) = ds.split_sizes();
    let manifest = Manifest {
        config_hash: hash,
        seed: cfg.seed,
        channel_seed: channel.seed,
        doppler_hz: channel.doppler_hz,
        profile: channel.profile.clone(),
        n_slots: channel.n_slots,
        input_len: spec.input_len,
        t_csi: spec.t_csi,
        target: spec.target.to_string(),
        stride: ds.spec.stride(),
        fractions: ds.spec.fractions,
        train_windows,
        val_windows,
        test_windows,
        tracks: ds
            .tracks
            .iter()
            .map(|t| TrackEntry {
                name: track_name(t.track),
                mean: t.stats.mean,
                std: t.stats.std,
            })
            .collect(),
    };
    let text = toml::to_string(&manifest).map_err(|e| crate::Error::Parse(e.to_string()))?;
    fs::write(out.join("manifest.toml"), text)?;
    Ok(manifest)
}

fn model_dir_name(i: usize, spec: &PredictorSpec) -> String {
    let mode = match spec.mode {
        crate::predictor::PredictionMode::TddVector => "tdd".to_string(),
        crate::predictor::PredictionMode::FddScalar { horizon } => format!("fdd{horizon}"),
    };
    format!("{i:02}_{}_p{}_t{}_{}_{mode}", spec.kind, spec.input_len, spec.t_csi, spec.target)
}

/// Fits every configured predictor, saves it under `out/models`, and
/// writes `train_summary.csv` with held-out MSE.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let ctx = cfg.sweep_context()?;
    let profile = cfg.channel.profile.clone();
    let channel = ctx.train_config(&profile, cfg.channel.doppler_hz);
    let test = ctx.trace(&ctx.test_config(&profile, cfg.channel.doppler_hz))?;
    let hash = cfg.hash();
    let mut dirs = Vec::new();
    let mut rows = Vec::new();
    for (i, &spec) in cfg.predictors.iter().enumerate() {
        let ds = ctx.dataset(std::slice::from_ref(&channel), spec.input_len, spec.t_csi, spec.target)?;
        let seed = ctx.derive_seed(&format!("init/{}/{}", spec.kind, spec.hidden));
        let (model, history) = crate::sim::fit_predictor(&ds, spec, &cfg.train, seed)?;
        let dir = out.join("models").join(model_dir_name(i, &spec));
        model.save(&dir)?;
        if let Some(h) = history {
            write_with_comment(&dir.join("loss.csv"), &hash, cfg.seed, |buf| h.write_csv(buf))?;
        }
        let curve = ctx.mse(&model, &test)?;
        log::info!("{}: held-out MSE {:.2} dB", dir.display(), curve.average_db);
        rows.push(format!(
            "{},{},{},{},{},{},{},{:.4}",
            dir.file_name().unwrap().to_string_lossy(),
            spec.kind,
            spec.target,
            spec.t_csi,
            spec.input_len,
            spec.hidden,
            model.flops(),
            curve.average_db
        ));
        dirs.push(dir);
    }
    write_with_comment(&out.join("train_summary.csv"), &hash, cfg.seed, |buf| {
        writeln!(buf, "model,predictor,target,t_csi,input_len,hidden,flops,mse_db")?;
        for r in &rows {
            writeln!(buf, "{r}")?;
        }
        Ok(())
    })?;
    Ok(dirs)
}

/// Runs one figure sweep and writes its CSVs into `out`.
pub fn cmd_sweep(cfg: &ExperimentConfig, figure: Figure, out: &Path) -> Result<Vec<PathBuf>> {
    let ctx = cfg.sweep_context()?;
    run_figure(&ctx, &cfg.sweep, figure, out)
}

/// Runs the oracle suite against the configured CQI table.
pub fn cmd_verify(cfg: &ExperimentConfig, opts: VerifyOptions) -> Result<Vec<Check>> {
    let table = cfg.table()?;
    Ok(run_all(&VerifyOptions {
        table: Some(table),
        seed: cfg.seed,
        ..opts
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        let text = r#"
            seed = 3
            [channel]
            doppler_hz = 10.0
            n_slots = 2000
            [dataset]
            test_slots = 800
            [train]
            epochs = 2
            batch_size = 32
            [[predictors]]
            kind = "wiener"
            input_len = 3
            t_csi = 4
            mode = "tdd_vector"
            target = "best_cqi"
            [[predictors]]
            kind = "dnn"
            input_len = 3
            hidden = 4
            t_csi = 4
            mode = "tdd_vector"
            target = "best_cqi"
        "#;
        ExperimentConfig::parse(text, Path::new(".")).unwrap()
    }

    #[test]
    fn generate_is_deterministic_and_reports_fractions() {
        let cfg = small_config();
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = cmd_generate(&cfg, a.path()).unwrap();
        let mb = cmd_generate(&cfg, b.path()).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(ma.fractions, SplitFractions::default());
        for f in ["manifest.toml", "best_train.csv", "best_val.csv", "best_test.csv", "trace.csv"] {
            let x = fs::read(a.path().join(f)).unwrap();
            assert_eq!(x, fs::read(b.path().join(f)).unwrap(), "{f}");
        }
        let text = fs::read_to_string(a.path().join("best_val.csv")).unwrap();
        assert!(text.starts_with("# config_hash="));
        let back = PredictionBatch::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back.len(), ma.val_windows);
    }

    #[test]
    fn train_saves_loadable_models() {
        let cfg = small_config();
        let dir = tempfile::tempdir().unwrap();
        let dirs = cmd_train(&cfg, dir.path()).unwrap();
        assert_eq!(dirs.len(), 2);
        for d in &dirs {
            crate::predictor::PredictorModel::load(d).unwrap();
        }
        assert!(dirs[1].join("loss.csv").exists());
        let summary = fs::read_to_string(dir.path().join("train_summary.csv")).unwrap();
        assert_eq!(summary.lines().count(), 4);
    }
}
