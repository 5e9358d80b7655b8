//! Time-varying per-layer, per-RB SINR generation.

mod fading;
mod profile;

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use fading::{generate_tap_process, normalized_autocorrelation, TapProcess, SINUSOIDS};
pub use profile::{
    default_profiles, load_profiles, parse_profiles, pdp_profile, PowerDelayProfile, Tap,
    PROFILE_NAMES, REFERENCE_DELAY_SPREAD,
};

use crate::error::{ensure_finite, Error, Result};

pub const SUBCARRIER_SPACING_HZ: f64 = 15e3;
pub const SUBCARRIERS_PER_RB: usize = 12;
pub const SYMBOLS_PER_SLOT: usize = 14;

/// Grids above this size must be streamed instead of materialized.
pub const DEFAULT_GRID_BUDGET_BYTES: usize = 1 << 30;

const DUMP_MAGIC: &[u8; 8] = b"SINRGRD1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub doppler_hz: f64,
    pub n_slots: usize,
    #[serde(default = "default_slot_duration")]
    pub slot_duration: f64,
    #[serde(default = "default_layers")]
    pub n_layers: usize,
    #[serde(default = "default_rb")]
    pub n_rb: usize,
    #[serde(default = "default_snr")]
    pub avg_snr_db: f64,
    #[serde(default = "default_profile")]
    pub profile: String,
    #[serde(default = "default_delay_spread")]
    pub delay_spread: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_slot_duration() -> f64 {
    1e-3
}
fn default_layers() -> usize {
    4
}
fn default_rb() -> usize {
    52
}
fn default_snr() -> f64 {
    12.5
}
fn default_profile() -> String {
    "tdl-a".into()
}
fn default_delay_spread() -> f64 {
    REFERENCE_DELAY_SPREAD
}

impl ChannelConfig {
    /// Defaults from the reference simulation table: 4 layers, 52 RBs,
    /// 12.5 dB average SNR, 1 ms slots, TDL-A at 300 ns.
    pub fn new(doppler_hz: f64, n_slots: usize, seed: u64) -> Self {
        Self {
            doppler_hz,
            n_slots,
            slot_duration: default_slot_duration(),
            n_layers: default_layers(),
            n_rb: default_rb(),
            avg_snr_db: default_snr(),
            profile: default_profile(),
            delay_spread: default_delay_spread(),
            seed,
        }
    }

    pub fn with_profile(mut self, name: &str) -> Self {
        self.profile = name.to_string();
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_finite("doppler_hz", self.doppler_hz)?;
        ensure_finite("avg_snr_db", self.avg_snr_db)?;
        ensure_finite("slot_duration", self.slot_duration)?;
        if self.doppler_hz < 0.0 {
            return Err(Error::Config("doppler_hz must be >= 0".into()));
        }
        if self.n_slots == 0 || self.n_layers == 0 || self.n_rb == 0 {
            return Err(Error::Config(
                "n_slots, n_layers and n_rb must all be >= 1".into(),
            ));
        }
        if self.slot_duration <= 0.0 {
            return Err(Error::Config("slot_duration must be positive".into()));
        }
        Ok(())
    }

    pub fn resolve_profile(&self) -> Result<PowerDelayProfile> {
        pdp_profile(&self.profile, self.delay_spread)
    }

    pub fn avg_snr_linear(&self) -> f64 {
        10f64.powf(self.avg_snr_db / 10.0)
    }

    pub fn values_per_slot(&self) -> usize {
        self.n_layers * self.n_rb
    }
}

/// Center frequency of resource block `m` relative to the carrier.
pub fn rb_center_frequency(m: usize, n_rb: usize) -> f64 {
    let rb_width = SUBCARRIER_SPACING_HZ * SUBCARRIERS_PER_RB as f64;
    (m as f64 - (n_rb as f64 - 1.0) / 2.0) * rb_width
}

/// Produces SINR slots one at a time, without materializing the grid.
#[derive(Debug, Clone)]
pub struct SlotGenerator {
    n_layers: usize,
    n_rb: usize,
    snr: f64,
    /// [layer][tap]
    taps: Vec<Vec<TapProcess>>,
    /// [tap][rb]: sqrt(power) * exp(-j 2 pi f_m delay)
    steering: Vec<Vec<Complex64>>,
    remaining: usize,
    gains: Vec<Complex64>,
    response: Vec<Complex64>,
}

impl SlotGenerator {
    pub fn new(config: &ChannelConfig) -> Result<Self> {
        let profile = config.resolve_profile()?;
        Self::with_profile(config, &profile)
    }

    pub fn with_profile(config: &ChannelConfig, profile: &PowerDelayProfile) -> Result<Self> {
        config.validate()?;
        let mut taps = Vec::with_capacity(config.n_layers);
        for layer in 0..config.n_layers {
            let mut per_layer = Vec::with_capacity(profile.taps.len());
            for (i, tap) in profile.taps.iter().enumerate() {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream((layer * profile.taps.len() + i) as u64 + 1);
                per_layer.push(TapProcess::new(
                    config.doppler_hz,
                    config.slot_duration,
                    tap.rician_k,
                    &mut rng,
                )?);
            }
            taps.push(per_layer);
        }
        let steering = profile
            .taps
            .iter()
            .map(|tap| {
                (0..config.n_rb)
                    .map(|m| {
                        let f = rb_center_frequency(m, config.n_rb);
                        Complex64::from_polar(tap.power.sqrt(), -2.0 * PI * f * tap.delay)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            n_layers: config.n_layers,
            n_rb: config.n_rb,
            snr: config.avg_snr_linear(),
            taps,
            steering,
            remaining: config.n_slots,
            gains: vec![Complex64::default(); profile.taps.len()],
            response: vec![Complex64::default(); config.n_rb],
        })
    }

    pub fn values_per_slot(&self) -> usize {
        self.n_layers * self.n_rb
    }

    /// Writes the next slot's `n_layers x n_rb` SINRs (layer-major) into
    /// `out`. Returns `false` once all configured slots are consumed.
    pub fn next_slot(&mut self, out: &mut [f64]) -> bool {
        if self.remaining == 0 {
            return false;
        }
        self.remaining -= 1;
        assert_eq!(out.len(), self.values_per_slot());
        for (layer, row) in out.chunks_exact_mut(self.n_rb).enumerate() {
            for (g, tap) in self.gains.iter_mut().zip(&mut self.taps[layer]) {
                *g = tap.next_gain();
            }
            self.response.iter_mut().for_each(|h| *h = Complex64::default());
            for (g, steer) in self.gains.iter().zip(&self.steering) {
                for (h, s) in self.response.iter_mut().zip(steer) {
                    *h += g * s;
                }
            }
            for (v, h) in row.iter_mut().zip(&self.response) {
                *v = (self.snr * h.norm_sqr()).max(f64::MIN_POSITIVE);
            }
        }
        true
    }
}

/// Instantiated SINR tensor `[n_slots x n_layers x n_rb]`, linear scale.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrGrid {
    values: Vec<f64>,
    config: ChannelConfig,
}

impl SinrGrid {
    pub fn from_values(config: ChannelConfig, values: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let expected = config.n_slots * config.values_per_slot();
        if values.len() != expected {
            return Err(Error::Domain(format!(
                "grid has {} values, dimensions need {expected}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Domain(format!("SINR entries must be finite and > 0, got {bad}")));
        }
        Ok(Self { values, config })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn n_slots(&self) -> usize {
        self.config.n_slots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// All `n_layers x n_rb` values of slot `n`, layer-major.
    pub fn slot(&self, n: usize) -> &[f64] {
        let w = self.config.values_per_slot();
        &self.values[n * w..(n + 1) * w]
    }

    pub fn get(&self, n: usize, layer: usize, rb: usize) -> f64 {
        self.slot(n)[layer * self.config.n_rb + rb]
    }

    pub fn slots(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.config.values_per_slot())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Multiplies every entry by a linear factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            config: self.config.clone(),
        }
    }

    /// Little-endian dump: 8-byte magic `SINRGRD1`, then `n_slots`,
    /// `n_layers`, `n_rb` as u64, then the values row-major as f64.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        for dim in [self.config.n_slots, self.config.n_layers, self.config.n_rb] {
            w.write_all(&(dim as u64).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump back; `config` supplies the non-dimensional fields and
    /// must agree with the stored dimensions.
    pub fn read_dump<R: Read>(mut r: R, config: ChannelConfig) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Parse("not a SINR grid dump".into()));
        }
        let mut dims = [0usize; 3];
        for d in &mut dims {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *d = u64::from_le_bytes(b) as usize;
        }
        if dims != [config.n_slots, config.n_layers, config.n_rb] {
            return Err(Error::Parse(format!(
                "dump dimensions {dims:?} disagree with config"
            )));
        }
        let count = dims.iter().product::<usize>();
        let mut values = Vec::with_capacity(count);
        let mut b = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut b)?;
            values.push(f64::from_le_bytes(b));
        }
        Self::from_values(config, values)
    }
}

/// Materializes a full grid, refusing anything above the default budget.
pub fn generate_sinr_grid(config: &ChannelConfig) -> Result<SinrGrid> {
    generate_sinr_grid_with_budget(config, DEFAULT_GRID_BUDGET_BYTES)
}

pub fn generate_sinr_grid_with_budget(config: &ChannelConfig, budget_bytes: usize) -> Result<SinrGrid> {
    config.validate()?;
    let bytes = config
        .n_slots
        .checked_mul(config.values_per_slot())
        .and_then(|n| n.checked_mul(std::mem::size_of::<f64>()));
    match bytes {
        Some(b) if b <= budget_bytes => {}
        _ => {
            return Err(Error::Resource(format!(
                "grid of {} x {} x {} exceeds the {budget_bytes}-byte budget",
                config.n_slots, config.n_layers, config.n_rb
            )))
        }
    }
    let mut gen = SlotGenerator::new(config)?;
    let w = gen.values_per_slot();
    let mut values = vec![0.0; config.n_slots * w];
    for chunk in values.chunks_exact_mut(w) {
        gen.next_slot(chunk);
    }
    Ok(SinrGrid {
        values,
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(doppler: f64, slots: usize) -> ChannelConfig {
        let mut c = ChannelConfig::new(doppler, slots, 42);
        c.n_rb = 8;
        c.n_layers = 2;
        c
    }

    #[test]
    fn static_single_tap_is_constant_and_flat() {
        let config = small(0.0, 50);
        let grid = SlotGenerator::with_profile(&config, &PowerDelayProfile::single_tap()).unwrap();
        let mut gen = grid;
        let mut first = vec![0.0; 16];
        gen.next_slot(&mut first);
        let mut buf = vec![0.0; 16];
        while gen.next_slot(&mut buf) {
            for (a, b) in first.iter().zip(&buf) {
                assert!((a - b).abs() <= 1e-12 * a);
            }
        }
        for layer in first.chunks(8) {
            assert!(layer.iter().all(|v| (v - layer[0]).abs() <= 1e-12 * layer[0]));
        }
    }

    #[test]
    fn rb_frequencies_are_centered() {
        assert!((rb_center_frequency(0, 2) + 90e3).abs() < 1e-9);
        assert!((rb_center_frequency(1, 2) - 90e3).abs() < 1e-9);
        assert!(rb_center_frequency(2, 5).abs() < 1e-9);
    }

    #[test]
    fn memory_budget_is_enforced() {
        let config = small(10.0, 1000);
        let err = generate_sinr_grid_with_budget(&config, 1024).unwrap_err();
        assert!(matches!(err, Error::Resource(_)));
    }

    #[test]
    fn grids_are_deterministic() {
        let config = small(10.0, 200);
        let a = generate_sinr_grid(&config).unwrap();
        let b = generate_sinr_grid(&config).unwrap();
        assert_eq!(a, b);
        let mut other = config.clone();
        other.seed += 1;
        assert_ne!(a, generate_sinr_grid(&other).unwrap());
    }

    #[test]
    fn dump_round_trips() {
        let config = small(5.0, 20);
        let grid = generate_sinr_grid(&config).unwrap();
        let mut buf = Vec::new();
        grid.write_dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 24 + 8 * 20 * 16);
        assert_eq!(&buf[8..16], &20u64.to_le_bytes());
        let back = SinrGrid::read_dump(buf.as_slice(), config).unwrap();
        assert_eq!(back, grid);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut c = small(10.0, 10);
        c.n_layers = 0;
        assert!(generate_sinr_grid(&c).is_err());
        let mut c = small(-1.0, 10);
        c.doppler_hz = -1.0;
        assert!(generate_sinr_grid(&c).is_err());
    }
}
