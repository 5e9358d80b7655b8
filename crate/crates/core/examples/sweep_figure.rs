//! Runs one figure sweep at reduced size and writes its CSVs.
//!
//! cargo run --release --example sweep_figure -- [figure] [out_dir]

use std::path::PathBuf;

use csi_predict::channel::ChannelConfig;
use csi_predict::eesm::CqiTable;
use csi_predict::neural::TrainConfig;
use csi_predict::sweep::{run_figure, Figure, SweepAxes, SweepContext};

fn main() -> csi_predict::Result<()> {
    let mut args = std::env::args().skip(1);
    let figure: Figure = args.next().unwrap_or_else(|| "target_strategy".into()).parse()?;
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("csipred_sweep"));

    let train = TrainConfig {
        epochs: 30,
        batch_size: 256,
        learning_rate: 3e-3,
        shuffle_seed: 1,
        patience: Some(5),
    };
    let mut ctx = SweepContext::new(CqiTable::default(), ChannelConfig::new(10.0, 20_000, 0), train, 1);
    ctx.test_slots = 10_000;
    ctx.mixed_slots = 2_000;
    ctx.hidden = 8;
    let axes = SweepAxes {
        mixed_doppler_hz: (1..=50).step_by(7).map(f64::from).collect(),
        ..SweepAxes::default()
    };
    for path in run_figure(&ctx, &axes, figure, &out)? {
        println!("{}", path.display());
        for line in std::fs::read_to_string(&path)?.lines().take(8) {
            println!("  {line}");
        }
    }
    Ok(())
}
