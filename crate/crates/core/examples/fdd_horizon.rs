//! FDD loop: one CQI per interval chosen from a Wiener forecast at horizon
//! `h`, for several horizons.

use csi_predict::channel::ChannelConfig;
use csi_predict::eesm::{trace_from_config, CqiTable};
use csi_predict::predictor::{PredictorKind, PredictorModel, PredictorSpec, TargetStrategy};
use csi_predict::sim::{fit_wiener, generate_dataset, run_fdd_trace, DatasetSpec};

fn main() -> csi_predict::Result<()> {
    let (fd, p, t) = (10.0, 4, 32);
    let table = CqiTable::default();
    let ds = generate_dataset(&[ChannelConfig::new(fd, 60_000, 1)], &table, DatasetSpec::new(p, t, TargetStrategy::BestCqi))?;
    let test_cfg = ChannelConfig::new(fd, 32_000, 2);
    let trace = trace_from_config(&test_cfg, &table)?;

    println!("model   h   Mbps     std(tau)  P(-1)  P(0)   P(+1)");
    for h in [2, 8, 16, 24, 31] {
        let spec = PredictorSpec::fdd(PredictorKind::Wiener, p, 0, t, h);
        for m in [PredictorModel::zoh(spec, ds.stats())?, fit_wiener(&ds, spec)?] {
            let r = run_fdd_trace(&trace, &test_cfg, &table, &m)?;
            println!(
                "{:6} {h:3}  {:7.3}  {:7.3}  {:.3}  {:.3}  {:.3}",
                r.predictor,
                r.unconditioned_tp,
                r.conditioned_spread(),
                r.error_probability(-1),
                r.error_probability(0),
                r.error_probability(1)
            );
        }
    }
    Ok(())
}
