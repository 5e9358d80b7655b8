//! Tapped-delay-line power-delay profiles.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Delay spread the shipped tables are tabulated at.
pub const REFERENCE_DELAY_SPREAD: f64 = 300e-9;

const DEFAULT_PROFILES: &str = include_str!("../../config/profiles.toml");

/// The five recognised profile identifiers.
pub const PROFILE_NAMES: [&str; 5] = ["tdl-a", "tdl-b", "tdl-c", "tdl-d", "tdl-e"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    /// Excess delay in seconds.
    pub delay: f64,
    /// Linear power; all taps of a profile sum to one.
    pub power: f64,
    /// Linear Rician K-factor, zero for Rayleigh taps.
    pub rician_k: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub name: String,
    pub taps: Vec<Tap>,
    pub delay_spread: f64,
}

impl PowerDelayProfile {
    pub fn is_los(&self) -> bool {
        is_los_name(&self.name)
    }

    /// Single static-capable tap at zero delay, handy for tests.
    pub fn single_tap() -> Self {
        Self {
            name: "tdl-a".into(),
            taps: vec![Tap {
                delay: 0.0,
                power: 1.0,
                rician_k: 0.0,
            }],
            delay_spread: REFERENCE_DELAY_SPREAD,
        }
    }

    /// Builds a profile from raw taps, normalizing powers and checking the
    /// structural rules for the named profile family.
    pub fn new(name: &str, mut taps: Vec<Tap>, delay_spread: f64) -> Result<Self> {
        if !PROFILE_NAMES.contains(&name) {
            return Err(Error::Config(format!(
                "unknown profile '{name}', expected one of {}",
                PROFILE_NAMES.join(", ")
            )));
        }
        if taps.is_empty() {
            return Err(Error::Config(format!("profile '{name}' has no taps")));
        }
        if !(delay_spread.is_finite() && delay_spread > 0.0) {
            return Err(Error::Config(format!(
                "delay spread must be positive, got {delay_spread}"
            )));
        }
        let mut prev = f64::NEG_INFINITY;
        for tap in &taps {
            if !(tap.delay.is_finite() && tap.delay >= 0.0) || tap.delay <= prev {
                return Err(Error::Config(format!(
                    "profile '{name}': tap delays must be non-negative and strictly increasing"
                )));
            }
            prev = tap.delay;
            if !(tap.power.is_finite() && tap.power > 0.0) {
                return Err(Error::Config(format!(
                    "profile '{name}': tap power must be positive"
                )));
            }
            if !(tap.rician_k.is_finite() && tap.rician_k >= 0.0) {
                return Err(Error::Config(format!(
                    "profile '{name}': rician K must be finite and >= 0"
                )));
            }
        }
        let los = is_los_name(name);
        for (i, tap) in taps.iter().enumerate() {
            if tap.rician_k > 0.0 && (!los || i > 0) {
                return Err(Error::Config(format!(
                    "profile '{name}': only the first tap of a LOS profile may be Rician"
                )));
            }
        }
        if los && taps[0].rician_k <= 0.0 {
            return Err(Error::Config(format!(
                "LOS profile '{name}' needs a Rician first tap"
            )));
        }
        let total: f64 = taps.iter().map(|t| t.power).sum();
        for tap in &mut taps {
            tap.power /= total;
        }
        Ok(Self {
            name: name.to_string(),
            taps,
            delay_spread,
        })
    }

    /// Rescales all delays to a new delay spread.
    pub fn scaled_to(&self, delay_spread: f64) -> Result<Self> {
        let factor = delay_spread / self.delay_spread;
        let taps = self
            .taps
            .iter()
            .map(|t| Tap {
                delay: t.delay * factor,
                ..*t
            })
            .collect();
        Self::new(&self.name, taps, delay_spread)
    }

    /// Power-weighted RMS delay in seconds.
    pub fn rms_delay(&self) -> f64 {
        let mean: f64 = self.taps.iter().map(|t| t.power * t.delay).sum();
        let second: f64 = self.taps.iter().map(|t| t.power * t.delay * t.delay).sum();
        (second - mean * mean).max(0.0).sqrt()
    }
}

fn is_los_name(name: &str) -> bool {
    matches!(name, "tdl-d" | "tdl-e")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    profile: Vec<ProfileEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileEntry {
    name: String,
    #[serde(default = "default_spread_ns")]
    delay_spread_ns: f64,
    taps: Vec<TapEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TapEntry {
    delay_ns: f64,
    power_db: f64,
    rician_k_db: Option<f64>,
}

fn default_spread_ns() -> f64 {
    REFERENCE_DELAY_SPREAD * 1e9
}

/// Parses a profile table from TOML text.
pub fn parse_profiles(text: &str) -> Result<Vec<PowerDelayProfile>> {
    let file: ProfileFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.profile
        .into_iter()
        .map(|entry| {
            let taps = entry
                .taps
                .iter()
                .map(|t| Tap {
                    delay: t.delay_ns * 1e-9,
                    power: 10f64.powf(t.power_db / 10.0),
                    rician_k: t.rician_k_db.map_or(0.0, |k| 10f64.powf(k / 10.0)),
                })
                .collect();
            PowerDelayProfile::new(&entry.name, taps, entry.delay_spread_ns * 1e-9)
        })
        .collect()
}

pub fn load_profiles(path: &Path) -> Result<Vec<PowerDelayProfile>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    parse_profiles(&text)
}

pub fn default_profiles() -> Vec<PowerDelayProfile> {
    parse_profiles(DEFAULT_PROFILES).expect("shipped profile table is valid")
}

/// Looks up one of the shipped profiles and rescales it to `delay_spread`.
pub fn pdp_profile(name: &str, delay_spread: f64) -> Result<PowerDelayProfile> {
    let lower = name.to_ascii_lowercase();
    default_profiles()
        .into_iter()
        .find(|p| p.name == lower)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown profile '{name}', expected one of {}",
                PROFILE_NAMES.join(", ")
            ))
        })?
        .scaled_to(delay_spread)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_profiles_are_normalized() {
        for name in PROFILE_NAMES {
            let p = pdp_profile(name, 300e-9).unwrap();
            let sum: f64 = p.taps.iter().map(|t| t.power).sum();
            assert!((sum - 1.0).abs() < 1e-9, "{name}");
            assert_eq!(p.taps.len(), 5);
        }
    }

    #[test]
    fn nlos_profiles_have_no_rician_taps() {
        let p = pdp_profile("tdl-a", 300e-9).unwrap();
        assert!(p.taps.iter().all(|t| t.rician_k == 0.0));
        assert!(!p.is_los());
    }

    #[test]
    fn los_profiles_have_rician_first_tap() {
        for name in ["tdl-d", "tdl-e"] {
            let p = pdp_profile(name, 300e-9).unwrap();
            assert!(p.taps[0].rician_k > 0.0);
            assert!(p.taps[1..].iter().all(|t| t.rician_k == 0.0));
        }
    }

    #[test]
    fn unknown_profile_is_rejected() {
        assert!(matches!(pdp_profile("tdl-z", 300e-9), Err(Error::Config(_))));
    }

    #[test]
    fn delays_scale_with_spread() {
        let a = pdp_profile("tdl-c", 300e-9).unwrap();
        let b = pdp_profile("tdl-c", 100e-9).unwrap();
        for (x, y) in a.taps.iter().zip(&b.taps) {
            assert!((x.delay / 3.0 - y.delay).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_unsorted_delays() {
        let taps = vec![
            Tap { delay: 1e-7, power: 1.0, rician_k: 0.0 },
            Tap { delay: 0.0, power: 1.0, rician_k: 0.0 },
        ];
        assert!(PowerDelayProfile::new("tdl-a", taps, 3e-7).is_err());
    }

    #[test]
    fn rejects_rician_tap_on_nlos_profile() {
        let text = r#"
            [[profile]]
            name = "tdl-b"
            taps = [{ delay_ns = 0.0, power_db = 0.0, rician_k_db = 10.0 }]
        "#;
        assert!(parse_profiles(text).is_err());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = r#"
            [[profile]]
            name = "tdl-a"
            taps = [{ delay_ns = 0.0, power_db = 0.0, phase = 1.0 }]
        "#;
        assert!(matches!(parse_profiles(text), Err(Error::Parse(_))));
    }
}
