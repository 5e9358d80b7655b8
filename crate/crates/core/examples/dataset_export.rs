//! Writes a dataset (per-track window CSVs, trace CSV and manifest) from an
//! experiment configuration file.
//!
//! cargo run --release --example dataset_export -- [config.toml] [out_dir]

use std::path::{Path, PathBuf};

use csi_predict::commands::cmd_generate;
use csi_predict::config::ExperimentConfig;

fn main() -> csi_predict::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(p) => ExperimentConfig::load(Path::new(&p))?,
        None => ExperimentConfig::parse("[channel]\ndoppler_hz = 10.0\nn_slots = 20000\n", Path::new("."))?,
    };
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("csipred_dataset"));
    let m = cmd_generate(&cfg, &out)?;
    println!(
        "{}: {} train / {} val / {} test windows, config {}",
        out.display(),
        m.train_windows,
        m.val_windows,
        m.test_windows,
        m.config_hash
    );
    for t in &m.tracks {
        println!("  {}: mean {:.4}, std {:.4}", t.name, t.mean, t.std);
    }
    Ok(())
}
