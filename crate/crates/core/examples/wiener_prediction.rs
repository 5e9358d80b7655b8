//! Fits a Wiener filter bank on one channel realization and compares its
//! per-horizon MSE with zero-order hold on a second one.
//!
//! cargo run --release --example wiener_prediction -- [doppler_hz] [t_csi] [input_len]

use csi_predict::channel::ChannelConfig;
use csi_predict::eesm::{trace_from_config, CqiTable};
use csi_predict::predictor::{PredictorKind, PredictorModel, PredictorSpec, TargetStrategy};
use csi_predict::sim::{eval_batches, evaluate_mse, fit_wiener, generate_dataset, DatasetSpec};

fn main() -> csi_predict::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).map(|a| a.parse().expect("number")).unwrap_or(d);
    let (fd, t, p) = (arg(0, 10.0), arg(1, 8.0) as usize, arg(2, 4.0) as usize);
    let table = CqiTable::default();

    let ds = generate_dataset(
        &[ChannelConfig::new(fd, 50_000, 1)],
        &table,
        DatasetSpec::new(p, t, TargetStrategy::BestCqi),
    )?;
    let spec = PredictorSpec::tdd(PredictorKind::Wiener, p, 0, t);
    let wiener = fit_wiener(&ds, spec)?;
    let zoh = PredictorModel::zoh(spec, ds.stats())?;

    let test = trace_from_config(&ChannelConfig::new(fd, 20_000, 2), &table)?;
    let batches = eval_batches(&test, TargetStrategy::BestCqi, &ds.stats(), p, t)?;
    let w = evaluate_mse(&wiener, &batches)?;
    let z = evaluate_mse(&zoh, &batches)?;
    println!("f_D = {fd} Hz, T_CSI = {t}, P = {p}");
    println!("tau  wiener(dB)  zoh(dB)");
    for (h, (a, b)) in spec.horizons().iter().zip(w.iter().zip(&z)) {
        println!("{h:3}  {a:10.2}  {b:7.2}");
    }
    if let csi_predict::predictor::Engine::Wiener(bank) = &wiener.tracks[0].engine {
        for f in &bank.filters {
            println!("tau {:2}: a = {:?}", f.horizon, f.coefficients.iter().map(|c| (c * 1e4).round() / 1e4).collect::<Vec<_>>());
        }
    }
    Ok(())
}
