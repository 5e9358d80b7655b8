//! Trains a GRU predictor, writes its loss history and checkpoint, and
//! reloads it.
//!
//! cargo run --release --example train_gru -- [out_dir]

use std::path::PathBuf;

use csi_predict::channel::ChannelConfig;
use csi_predict::eesm::{trace_from_config, CqiTable};
use csi_predict::neural::TrainConfig;
use csi_predict::predictor::{PredictorKind, PredictorModel, PredictorSpec, TargetStrategy};
use csi_predict::sim::{average_mse_db, eval_batches, generate_dataset, train_neural, DatasetSpec};

fn main() -> csi_predict::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("csipred_gru"));
    let (fd, p, t) = (10.0, 4, 4);
    let table = CqiTable::default();
    let ds = generate_dataset(
        &[ChannelConfig::new(fd, 40_000, 1)],
        &table,
        DatasetSpec::new(p, t, TargetStrategy::BestCqi).with_stride(2),
    )?;
    println!("windows (train, val, test): {:?}", ds.split_sizes());

    let cfg = TrainConfig {
        epochs: 60,
        batch_size: 256,
        learning_rate: 3e-3,
        shuffle_seed: 1,
        patience: Some(10),
    };
    let spec = PredictorSpec::tdd(PredictorKind::Gru, p, 16, t);
    let (model, history) = train_neural(&ds, spec, &cfg, 7)?;
    for e in history.epochs.iter().step_by(5) {
        println!("epoch {:3}  train {:.4}  val {:.4}", e.epoch, e.train_loss, e.val_loss);
    }
    println!("kept epoch {} (val {:.4}), {} FLOPs per report", history.best_epoch, history.best_val_loss(), model.flops());

    model.save(&out)?;
    history.write_csv(std::fs::File::create(out.join("loss.csv"))?)?;
    let back = PredictorModel::load(&out)?;
    let test = trace_from_config(&ChannelConfig::new(fd, 20_000, 2), &table)?;
    let batches = eval_batches(&test, TargetStrategy::BestCqi, &ds.stats(), p, t)?;
    println!("reloaded from {}: held-out MSE {:.2} dB", out.display(), average_mse_db(&back, &batches)?);
    Ok(())
}
