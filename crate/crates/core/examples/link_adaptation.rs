//! EESM compression, CQI selection and expected throughput for one slot.
//!
//! cargo run --release --example link_adaptation -- [snr_db]

use csi_predict::channel::{generate_sinr_grid, ChannelConfig};
use csi_predict::eesm::{bler, effective_sinr_all_cqi, select_cqi, to_db, CqiTable};
use csi_predict::sim::{slot_throughput, LinkDims};

fn main() -> csi_predict::Result<()> {
    let snr: f64 = std::env::args().nth(1).map(|a| a.parse().expect("snr_db")).unwrap_or(12.5);
    let mut config = ChannelConfig::new(10.0, 50, 3);
    config.avg_snr_db = snr;
    let table = CqiTable::default();
    let grid = generate_sinr_grid(&config)?;
    let dims = LinkDims::from(&config);

    let slot = grid.slot(0);
    let eff = effective_sinr_all_cqi(slot, &table)?;
    let cqi = select_cqi(&eff, &table)?;
    println!("cqi  beta     gamma_eff(dB)  BLER");
    for (i, (e, g)) in table.entries().iter().zip(eff).enumerate() {
        let mark = if i + 1 == cqi { " <- selected" } else { "" };
        println!("{:3}  {:7.4}  {:12.2}  {:.4}{mark}", i + 1, e.beta, to_db(g), bler(i + 1, g, &table)?);
    }
    println!("throughput at CQI {cqi}: {:.2} Mbps", slot_throughput(cqi, &eff, &table, dims));

    let mut total = 0.0;
    for n in 0..grid.n_slots() {
        let eff = effective_sinr_all_cqi(grid.slot(n), &table)?;
        total += slot_throughput(select_cqi(&eff, &table)?, &eff, &table, dims);
    }
    println!("ideal-CSI average over {} slots: {:.2} Mbps", grid.n_slots(), total / grid.n_slots() as f64);
    Ok(())
}
