//! TDD loop with ZOH, ideal CSI and a Wiener predictor; writes the CSV
//! bundles of each run.
//!
//! cargo run --release --example tdd_link_adaptation -- [out_dir] [t_csi]

use std::path::PathBuf;

use csi_predict::channel::ChannelConfig;
use csi_predict::eesm::{trace_from_config, CqiTable};
use csi_predict::predictor::{PredictorKind, PredictorModel, PredictorSpec, TargetStrategy};
use csi_predict::sim::{fit_wiener, generate_dataset, run_tdd_trace, write_summary, DatasetSpec};

fn main() -> csi_predict::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("csipred_tdd"));
    let t: usize = args.next().map(|a| a.parse().expect("t_csi")).unwrap_or(32);
    let (fd, p) = (10.0, 4);
    let table = CqiTable::default();

    let ds = generate_dataset(&[ChannelConfig::new(fd, 60_000, 1)], &table, DatasetSpec::new(p, t, TargetStrategy::BestCqi))?;
    let spec = PredictorSpec::tdd(PredictorKind::Wiener, p, 0, t);
    let models = [
        PredictorModel::zoh(spec, ds.stats())?,
        PredictorModel::ideal(spec)?,
        fit_wiener(&ds, spec)?,
    ];

    let test_cfg = ChannelConfig::new(fd, 32_000, 2);
    let trace = trace_from_config(&test_cfg, &table)?;
    let mut reports = Vec::new();
    for m in &models {
        let r = run_tdd_trace(&trace, &test_cfg, &table, m)?;
        println!(
            "{:7} {:8.3} Mbps (+/- {:.3}), conditioned tau=1 {:.2}, tau={} {:.2}",
            r.predictor,
            r.unconditioned_tp,
            r.standard_error(),
            r.conditioned_tp[0],
            t - 1,
            r.conditioned_tp[t - 2]
        );
        r.write_bundle(&out.join(&r.predictor))?;
        reports.push(r);
    }
    write_summary(&out.join("summary.csv"), &reports)?;
    println!("bundles written to {}", out.display());
    Ok(())
}
