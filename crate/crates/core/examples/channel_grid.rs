//! Generates a per-layer, per-RB SINR grid and compares the tap
//! autocorrelation of the fading process with J0.
//!
//! cargo run --release --example channel_grid -- [doppler_hz] [profile]

use std::f64::consts::PI;

use csi_predict::channel::{generate_sinr_grid, generate_tap_process, normalized_autocorrelation, ChannelConfig};
use csi_predict::eesm::to_db;

fn main() -> csi_predict::Result<()> {
    let mut args = std::env::args().skip(1);
    let fd: f64 = args.next().map(|a| a.parse().expect("doppler_hz")).unwrap_or(10.0);
    let profile = args.next().unwrap_or_else(|| "tdl-a".into());

    let config = ChannelConfig::new(fd, 2000, 1).with_profile(&profile);
    let grid = generate_sinr_grid(&config)?;
    println!(
        "{profile} at {fd} Hz: {} slots x {} layers x {} RBs, mean SINR {:.2} dB",
        grid.n_slots(),
        config.n_layers,
        config.n_rb,
        to_db(grid.mean())
    );
    for n in [0, 1, 10, 100, 1000] {
        let s = grid.slot(n);
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("  slot {n:4}: layer0/rb0 {:6.2} dB, range [{:.2}, {:.2}] dB", to_db(grid.get(n, 0, 0)), to_db(lo), to_db(hi));
    }

    let taps = generate_tap_process(fd, 200_000, config.slot_duration, 0.0, 7)?;
    println!("lag  measured  J0");
    for m in [1usize, 8, 32, 64, 128] {
        let j0 = libm::j0(2.0 * PI * fd * m as f64 * config.slot_duration);
        println!("{m:4}  {:8.4}  {j0:7.4}", normalized_autocorrelation(&taps, m));
    }
    Ok(())
}
