//! Exponential effective-SINR mapping, logistic AWGN BLER curves, CQI
//! selection and standardization of effective-SINR tracks.

use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::channel::{ChannelConfig, SinrGrid, SlotGenerator};
use crate::error::{Error, Result};

pub const N_CQI: usize = 15;

const DEFAULT_TABLE: &str = include_str!("../config/cqi_table.toml");

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CqiEntry {
    pub beta: f64,
    pub bler_mid_db: f64,
    pub bler_slope: f64,
    pub spectral_eff: f64,
}

/// Per-CQI calibration and reference-curve parameters.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CqiTable {
    #[serde(rename = "cqi")]
    entries: Vec<CqiEntry>,
    bler_target: f64,
}

impl Default for CqiTable {
    fn default() -> Self {
        Self::parse(DEFAULT_TABLE).expect("shipped CQI table is valid")
    }
}

impl CqiTable {
    pub fn new(entries: Vec<CqiEntry>, bler_target: f64) -> Result<Self> {
        let table = Self {
            entries,
            bler_target,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.len() != N_CQI {
            return Err(Error::Config(format!(
                "CQI table needs exactly {N_CQI} entries, got {}",
                self.entries.len()
            )));
        }
        if !(self.bler_target > 0.0 && self.bler_target < 1.0) {
            return Err(Error::Config(format!(
                "bler_target must lie in (0, 1), got {}",
                self.bler_target
            )));
        }
        for (i, e) in self.entries.iter().enumerate() {
            let finite = [e.beta, e.bler_mid_db, e.bler_slope, e.spectral_eff]
                .iter()
                .all(|v| v.is_finite());
            if !finite || e.beta <= 0.0 || e.bler_slope <= 0.0 || e.spectral_eff <= 0.0 {
                return Err(Error::Config(format!(
                    "CQI {}: beta, slope and spectral efficiency must be finite and positive",
                    i + 1
                )));
            }
        }
        for (i, w) in self.entries.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let checks = [
                ("beta", a.beta < b.beta),
                ("bler_mid_db", a.bler_mid_db < b.bler_mid_db),
                ("spectral_eff", a.spectral_eff < b.spectral_eff),
            ];
            if let Some((name, _)) = checks.iter().find(|(_, ok)| !ok) {
                return Err(Error::Config(format!(
                    "CQI table {name} is not strictly increasing at index {}",
                    i + 2
                )));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[CqiEntry] {
        &self.entries
    }

    /// Entry for a 1-based CQI index.
    pub fn entry(&self, cqi: usize) -> Result<&CqiEntry> {
        if (1..=N_CQI).contains(&cqi) {
            Ok(&self.entries[cqi - 1])
        } else {
            Err(Error::Domain(format!("CQI index {cqi} outside 1..={N_CQI}")))
        }
    }

    pub fn bler_target(&self) -> f64 {
        self.bler_target
    }

    pub fn betas(&self) -> [f64; N_CQI] {
        std::array::from_fn(|i| self.entries[i].beta)
    }

    /// Mutable access for building deliberately broken tables in tests.
    #[doc(hidden)]
    pub fn entries_mut_unchecked(&mut self) -> &mut Vec<CqiEntry> {
        &mut self.entries
    }
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Exponential effective SINR of a set of per-resource SINRs:
/// `-beta * ln(mean(exp(-gamma / beta)))`, evaluated shifted by the minimum
/// so small betas cannot underflow.
pub fn eesm_compress(sinrs: &[f64], beta: f64) -> Result<f64> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Domain(format!("beta must be finite and > 0, got {beta}")));
    }
    if sinrs.is_empty() {
        return Err(Error::Domain("EESM of an empty grid".into()));
    }
    if let Some(bad) = sinrs.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("SINR must be finite and > 0, got {bad}")));
    }
    Ok(eesm_unchecked(sinrs, beta))
}

pub(crate) fn eesm_unchecked(sinrs: &[f64], beta: f64) -> f64 {
    let (lo, hi) = sinrs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let inv = 1.0 / beta;
    let sum: f64 = sinrs.iter().map(|&v| (-(v - lo) * inv).exp()).sum();
    let value = lo - beta * (sum / sinrs.len() as f64).ln();
    value.clamp(lo, hi)
}

/// Effective SINR for every CQI's beta.
pub fn effective_sinr_all_cqi(sinrs: &[f64], table: &CqiTable) -> Result<[f64; N_CQI]> {
    eesm_compress(sinrs, 1.0)?;
    Ok(effective_all_unchecked(sinrs, table))
}

pub(crate) fn effective_all_unchecked(sinrs: &[f64], table: &CqiTable) -> [f64; N_CQI] {
    let lo = sinrs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sinrs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n = sinrs.len() as f64;
    std::array::from_fn(|i| {
        let beta = table.entries[i].beta;
        let inv = 1.0 / beta;
        let sum: f64 = sinrs.iter().map(|&v| (-(v - lo) * inv).exp()).sum();
        (lo - beta * (sum / n).ln()).clamp(lo, hi)
    })
}

/// Logistic AWGN BLER of CQI `cqi` (1-based) at effective SINR `eff_sinr`.
pub fn bler(cqi: usize, eff_sinr: f64, table: &CqiTable) -> Result<f64> {
    let entry = table.entry(cqi)?;
    if !(eff_sinr > 0.0) || eff_sinr.is_nan() {
        return Err(Error::Domain(format!("effective SINR must be > 0, got {eff_sinr}")));
    }
    Ok(logistic_bler(entry, eff_sinr))
}

pub(crate) fn logistic_bler(entry: &CqiEntry, eff_sinr: f64) -> f64 {
    let x = entry.bler_slope * (to_db(eff_sinr) - entry.bler_mid_db);
    1.0 / (1.0 + x.exp())
}

/// Highest CQI whose own effective SINR meets the BLER target, or 0 when
/// none does.
pub fn select_cqi(per_cqi_sinr: &[f64], table: &CqiTable) -> Result<usize> {
    if per_cqi_sinr.len() != N_CQI {
        return Err(Error::Domain(format!(
            "expected {N_CQI} effective SINRs, got {}",
            per_cqi_sinr.len()
        )));
    }
    if let Some(bad) = per_cqi_sinr.iter().find(|v| !(**v > 0.0) || v.is_nan()) {
        return Err(Error::Domain(format!("effective SINR must be > 0, got {bad}")));
    }
    Ok(select_cqi_unchecked(per_cqi_sinr, table))
}

pub(crate) fn select_cqi_unchecked(per_cqi_sinr: &[f64], table: &CqiTable) -> usize {
    (1..=N_CQI)
        .rev()
        .find(|&i| logistic_bler(&table.entries[i - 1], per_cqi_sinr[i - 1]) <= table.bler_target)
        .unwrap_or(0)
}

/// CQI selection from a single effective SINR checked against every CQI's
/// curve. Non-positive inputs select 0.
pub fn select_cqi_scalar(eff_sinr: f64, table: &CqiTable) -> usize {
    if !(eff_sinr > 0.0) {
        return 0;
    }
    (1..=N_CQI)
        .rev()
        .find(|&i| logistic_bler(&table.entries[i - 1], eff_sinr) <= table.bler_target)
        .unwrap_or(0)
}

/// Mean and (population) standard deviation used to standardize a track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardizer {
    pub mean: f64,
    pub std: f64,
}

impl Standardizer {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
            return Err(Error::Domain(format!(
                "standardization needs finite mean and std > 0, got ({mean}, {std})"
            )));
        }
        Ok(Self { mean, std })
    }

    pub fn fit(series: &[f64]) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::Domain("cannot fit statistics to an empty series".into()));
        }
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self::new(mean, var.sqrt())
    }

    /// Like [`fit`](Self::fit) but a constant series gets unit spread, so
    /// standardizing only centres it.
    pub fn fit_or_unit(series: &[f64]) -> Self {
        Self::fit(series).unwrap_or_else(|_| {
            let mean = series.iter().sum::<f64>() / series.len().max(1) as f64;
            Self { mean, std: 1.0 }
        })
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.std
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.std + self.mean
    }

    pub fn standardize(&self, series: &[f64]) -> Vec<f64> {
        series.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn destandardize(&self, series: &[f64]) -> Vec<f64> {
        series.iter().map(|&z| self.invert(z)).collect()
    }
}

/// `(x - mean) / std` element-wise.
pub fn standardize(series: &[f64], mean: f64, std: f64) -> Result<Vec<f64>> {
    Ok(Standardizer::new(mean, std)?.standardize(series))
}

pub fn destandardize(series: &[f64], mean: f64, std: f64) -> Result<Vec<f64>> {
    Ok(Standardizer::new(mean, std)?.destandardize(series))
}

/// Which effective-SINR track(s) a predictor consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Track {
    /// `gamma_eff^(i*(n))(n)`.
    Best,
    /// The track of one CQI, 1-based.
    Cqi(usize),
}

/// Per-slot effective SINRs and best-CQI track of one channel run.
#[derive(Debug, Clone, PartialEq)]
pub struct EffSinrTrace {
    pub per_cqi: Vec<[f64; N_CQI]>,
    pub best_cqi_index: Vec<usize>,
    pub best_cqi_sinr: Vec<f64>,
    /// Statistics of the best-CQI track.
    pub stats: Standardizer,
    /// Statistics of each per-CQI track.
    pub cqi_stats: [Standardizer; N_CQI],
}

impl EffSinrTrace {
    fn from_rows(per_cqi: Vec<[f64; N_CQI]>, table: &CqiTable) -> Self {
        let best_cqi_index: Vec<usize> = per_cqi
            .iter()
            .map(|row| select_cqi_unchecked(row, table))
            .collect();
        let best_cqi_sinr = per_cqi
            .iter()
            .zip(&best_cqi_index)
            .map(|(row, &i)| row[i.max(1) - 1])
            .collect::<Vec<_>>();
        let stats = Standardizer::fit_or_unit(&best_cqi_sinr);
        let cqi_stats = std::array::from_fn(|i| {
            let col: Vec<f64> = per_cqi.iter().map(|r| r[i]).collect();
            Standardizer::fit_or_unit(&col)
        });
        Self {
            per_cqi,
            best_cqi_index,
            best_cqi_sinr,
            stats,
            cqi_stats,
        }
    }

    pub fn len(&self) -> usize {
        self.per_cqi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_cqi.is_empty()
    }

    /// Raw (linear) values of a track.
    pub fn track(&self, track: Track) -> Vec<f64> {
        match track {
            Track::Best => self.best_cqi_sinr.clone(),
            Track::Cqi(i) => self.per_cqi.iter().map(|r| r[i - 1]).collect(),
        }
    }

    pub fn stats_for(&self, track: Track) -> Standardizer {
        match track {
            Track::Best => self.stats,
            Track::Cqi(i) => self.cqi_stats[i - 1],
        }
    }

    /// Recomputes the standardization statistics over slots `range` only.
    pub fn refit_stats(&mut self, range: std::ops::Range<usize>) {
        self.stats = Standardizer::fit_or_unit(&self.best_cqi_sinr[range.clone()]);
        for i in 0..N_CQI {
            let col: Vec<f64> = self.per_cqi[range.clone()].iter().map(|r| r[i]).collect();
            self.cqi_stats[i] = Standardizer::fit_or_unit(&col);
        }
    }

    /// CSV with columns `slot, gamma_eff_cqi_1..15` (dB), `best_cqi`,
    /// `gamma_eff_best` (dB).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["slot".to_string()];
        header.extend((1..=N_CQI).map(|i| format!("gamma_eff_cqi_{i}")));
        header.push("best_cqi".into());
        header.push("gamma_eff_best".into());
        wtr.write_record(&header)?;
        for (n, row) in self.per_cqi.iter().enumerate() {
            let mut rec = vec![n.to_string()];
            rec.extend(row.iter().map(|v| format!("{:.6}", to_db(*v))));
            rec.push(self.best_cqi_index[n].to_string());
            rec.push(format!("{:.6}", to_db(self.best_cqi_sinr[n])));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Compresses every slot of a grid and selects its CQI.
pub fn build_trace(grid: &SinrGrid, table: &CqiTable) -> Result<EffSinrTrace> {
    table.validate()?;
    let rows = grid
        .slots()
        .map(|slot| effective_all_unchecked(slot, table))
        .collect();
    Ok(EffSinrTrace::from_rows(rows, table))
}

/// Same as generating the grid and calling [`build_trace`], but slot by slot
/// so arbitrarily long runs fit in memory.
pub fn trace_from_config(config: &ChannelConfig, table: &CqiTable) -> Result<EffSinrTrace> {
    table.validate()?;
    let mut gen = SlotGenerator::new(config)?;
    let mut buf = vec![0.0; gen.values_per_slot()];
    let mut rows = Vec::with_capacity(config.n_slots);
    while gen.next_slot(&mut buf) {
        rows.push(effective_all_unchecked(&buf, table));
    }
    Ok(EffSinrTrace::from_rows(rows, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_is_exact() {
        assert!((eesm_compress(&[4.0; 6], 1.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn two_point_grid_matches_direct_evaluation() {
        let expected = -(((-1f64).exp() + (-3f64).exp()) / 2.0).ln();
        let got = eesm_compress(&[1.0, 3.0], 1.0).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 1.5662).abs() < 5e-5);
    }

    #[test]
    fn large_beta_tends_to_arithmetic_mean() {
        let got = eesm_compress(&[1.0, 3.0], 1e6).unwrap();
        assert!((got - 2.0).abs() < 1e-4);
    }

    #[test]
    fn tiny_beta_does_not_underflow() {
        let got = eesm_compress(&[1000.0, 2000.0], 0.01).unwrap();
        assert!((got - (1000.0 + 0.01 * 2f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(eesm_compress(&[1.0, f64::NAN], 1.0).is_err());
        assert!(eesm_compress(&[1.0, 0.0], 1.0).is_err());
        assert!(eesm_compress(&[1.0], 0.0).is_err());
    }

    #[test]
    fn single_element_grid_ignores_beta() {
        let t = CqiTable::default();
        let all = effective_sinr_all_cqi(&[7.5], &t).unwrap();
        assert!(all.iter().all(|v| (v - 7.5).abs() < 1e-12));
    }

    #[test]
    fn bler_midpoint_and_tails() {
        let t = CqiTable::default();
        let e = t.entry(5).unwrap();
        let at_mid = bler(5, from_db(e.bler_mid_db), &t).unwrap();
        assert!((at_mid - 0.5).abs() < 1e-12);
        assert!(bler(5, 1e9, &t).unwrap() < 1e-12);
        assert!(bler(5, 1e-9, &t).unwrap() > 1.0 - 1e-12);
        assert!(matches!(bler(0, 1.0, &t), Err(Error::Domain(_))));
        assert!(matches!(bler(16, 1.0, &t), Err(Error::Domain(_))));
    }

    #[test]
    fn selection_extremes() {
        let t = CqiTable::default();
        let high: Vec<f64> = t.entries().iter().map(|e| from_db(e.bler_mid_db + 30.0)).collect();
        let low: Vec<f64> = t.entries().iter().map(|e| from_db(e.bler_mid_db - 30.0)).collect();
        assert_eq!(select_cqi(&high, &t).unwrap(), 15);
        assert_eq!(select_cqi(&low, &t).unwrap(), 0);
        assert!(select_cqi(&high[..14], &t).is_err());
    }

    #[test]
    fn selection_with_exactly_seven_feasible() {
        let t = CqiTable::default();
        let v: Vec<f64> = t
            .entries()
            .iter()
            .enumerate()
            .map(|(i, e)| from_db(e.bler_mid_db + if i < 7 { 5.0 } else { -1.0 }))
            .collect();
        let brute = (1..=N_CQI)
            .filter(|&i| bler(i, v[i - 1], &t).unwrap() <= t.bler_target())
            .max()
            .unwrap_or(0);
        assert_eq!(brute, 7);
        assert_eq!(select_cqi(&v, &t).unwrap(), 7);
    }

    #[test]
    fn standardize_hand_example() {
        let s = Standardizer::fit(&[2.0, 4.0, 6.0]).unwrap();
        let z = s.standardize(&[2.0, 4.0, 6.0]);
        let expected = 2.0 / (8.0f64 / 3.0).sqrt();
        assert!((z[0] + expected).abs() < 1e-12);
        assert!(z[1].abs() < 1e-12);
        assert!((z[2] - expected).abs() < 1e-12);
        assert!((expected - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn constant_series_cannot_be_standardized() {
        assert!(Standardizer::fit(&[3.0; 5]).is_err());
        assert!(standardize(&[1.0], 0.0, 0.0).is_err());
        assert!(standardize(&[1.0], 0.0, -1.0).is_err());
    }

    #[test]
    fn broken_tables_fail_validation() {
        let mut t = CqiTable::default();
        t.entries_mut_unchecked()[3].beta = 0.5;
        assert!(t.validate().is_err());
        let mut t = CqiTable::default();
        t.entries_mut_unchecked().pop();
        assert!(t.validate().is_err());
        let text = DEFAULT_TABLE.replace("bler_target = 0.1", "bler_target = 1.5");
        assert!(CqiTable::parse(&text).is_err());
    }

    #[test]
    fn trace_csv_has_expected_columns() {
        let mut config = ChannelConfig::new(10.0, 5, 1);
        config.n_rb = 4;
        let trace = trace_from_config(&config, &CqiTable::default()).unwrap();
        let mut out = Vec::new();
        trace.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let header = text.lines().next().unwrap();
        assert!(header.starts_with("slot,gamma_eff_cqi_1,"));
        assert!(header.ends_with("gamma_eff_cqi_15,best_cqi,gamma_eff_best"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn streaming_trace_matches_grid_trace() {
        let mut config = ChannelConfig::new(10.0, 40, 9);
        config.n_rb = 6;
        let table = CqiTable::default();
        let grid = crate::channel::generate_sinr_grid(&config).unwrap();
        assert_eq!(
            build_trace(&grid, &table).unwrap(),
            trace_from_config(&config, &table).unwrap()
        );
    }
}
