//! Inference cost per report for every predictor, counted both from the
//! closed forms and from an instrumented forward pass.

use csi_predict::neural::NeuralModel;
use csi_predict::predictor::{flops, PredictorKind, PredictorSpec};

fn main() -> csi_predict::Result<()> {
    let (p, t) = (4, 4);
    println!("kind    D   best-CQI   by-CQI   counted");
    let w = PredictorSpec::tdd(PredictorKind::Wiener, p, 0, t);
    println!("wiener  -   {:8}  {:7}  -", flops(&w), flops(&w.by_cqi()));
    for kind in [PredictorKind::Dnn, PredictorKind::Gru, PredictorKind::Lstm] {
        for d in [4, 8, 16, 32] {
            let spec = PredictorSpec::tdd(kind, p, d, t);
            let (_, counted) = NeuralModel::new(kind, p, d, t - 1, 0)?.forward_counted(&[0.1; 4])?;
            println!("{kind:6} {d:3}  {:8}  {:7}  {counted}", flops(&spec), flops(&spec.by_cqi()));
        }
    }
    Ok(())
}
