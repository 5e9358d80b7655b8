//! Reconstructs an effective-SINR track from reports every `T_CSI` slots
//! with linear and LMMSE interpolation.

use csi_predict::channel::ChannelConfig;
use csi_predict::eesm::{trace_from_config, CqiTable, Track};
use csi_predict::predictor::{interpolate, InterpMethod};
use csi_predict::wiener::estimate_autocorrelation;

fn main() -> csi_predict::Result<()> {
    let table = CqiTable::default();
    let trace = trace_from_config(&ChannelConfig::new(10.0, 40_000, 5), &table)?;
    let z = trace.stats.standardize(&trace.track(Track::Best));
    println!("T_CSI  linear(dB)  lmmse(dB)");
    for t in [4usize, 8, 16, 32, 40] {
        let r = estimate_autocorrelation(&z, t)?;
        let autocorr = |m: usize| r.at(m);
        let sparse: Vec<f64> = z.iter().step_by(t).copied().collect();
        let mut row = Vec::new();
        for method in [InterpMethod::Linear, InterpMethod::Lmmse] {
            let dense = interpolate(&sparse, t, method, Some(&autocorr))?;
            let mse = dense.iter().zip(&z).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / dense.len() as f64;
            row.push(10.0 * mse.log10());
        }
        println!("{t:5}  {:10.2}  {:9.2}", row[0], row[1]);
    }
    Ok(())
}
