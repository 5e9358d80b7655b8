//! Sum-of-sinusoids Rayleigh/Rician tap processes with a Clarke Doppler
//! spectrum.
//!
//! Each diffuse process is
//!
//! ```text
//! g(t) = 1/sqrt(M) * sum_n [ cos(w_n t + phi_n) + j cos(w_n t + psi_n) ]
//! w_n  = 2 pi f_D cos(alpha_n),   alpha_n = (2 pi n - pi + theta) / (4 M)
//! ```
//!
//! with independent uniform phases and a random rotation `theta` per
//! process. The arrival angles are spread evenly over a quarter circle, so a
//! single realization's time-averaged autocorrelation is a midpoint-rule
//! approximation of `J0(2 pi f_D tau)` instead of a Monte Carlo one.

use std::f64::consts::{FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure_finite, Error, Result};

/// Sinusoids per tap process.
pub const SINUSOIDS: usize = 64;

/// Exact phasors are recomputed this often to bound rotation drift.
const RESYNC_INTERVAL: u64 = 1024;

/// Arrival angle of the Rician specular component.
const LOS_ANGLE: f64 = FRAC_PI_4;

/// One fading tap, advanced slot by slot.
#[derive(Debug, Clone)]
pub struct TapProcess {
    /// Per-slot phase increments, radians.
    steps: Vec<f64>,
    in_phase: Vec<Complex64>,
    quadrature: Vec<Complex64>,
    rotors: Vec<Complex64>,
    step_rotors: Vec<Complex64>,
    diffuse_scale: f64,
    los_amplitude: f64,
    los_step: f64,
    los_phase: f64,
    slot: u64,
}

impl TapProcess {
    /// Builds a process from its own RNG stream.
    pub fn new(
        doppler_hz: f64,
        slot_duration: f64,
        rician_k: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        ensure_finite("doppler_hz", doppler_hz)?;
        ensure_finite("slot_duration", slot_duration)?;
        ensure_finite("rician_k", rician_k)?;
        if doppler_hz < 0.0 {
            return Err(Error::Config(format!(
                "doppler_hz must be >= 0, got {doppler_hz}"
            )));
        }
        if slot_duration <= 0.0 {
            return Err(Error::Config("slot_duration must be positive".into()));
        }
        if rician_k < 0.0 {
            return Err(Error::Config("rician_k must be >= 0".into()));
        }

        let omega = 2.0 * PI * doppler_hz * slot_duration;
        let theta: f64 = rng.gen_range(-PI..PI);
        let m = SINUSOIDS as f64;
        let mut steps = Vec::with_capacity(SINUSOIDS);
        let mut in_phase = Vec::with_capacity(SINUSOIDS);
        let mut quadrature = Vec::with_capacity(SINUSOIDS);
        for n in 1..=SINUSOIDS {
            let alpha = (2.0 * PI * n as f64 - PI + theta) / (4.0 * m);
            steps.push(omega * alpha.cos());
            in_phase.push(Complex64::from_polar(1.0, rng.gen_range(-PI..PI)));
            quadrature.push(Complex64::from_polar(1.0, rng.gen_range(-PI..PI)));
        }
        let los_phase: f64 = rng.gen_range(-PI..PI);
        let step_rotors = steps.iter().map(|&w| Complex64::from_polar(1.0, w)).collect();

        let mut tap = Self {
            steps,
            in_phase,
            quadrature,
            rotors: vec![Complex64::new(1.0, 0.0); SINUSOIDS],
            step_rotors,
            diffuse_scale: (1.0 / (rician_k + 1.0)).sqrt() / m.sqrt(),
            los_amplitude: (rician_k / (rician_k + 1.0)).sqrt(),
            los_step: omega * LOS_ANGLE.cos(),
            los_phase,
            slot: 0,
        };
        tap.resync();
        Ok(tap)
    }

    fn resync(&mut self) {
        let t = self.slot as f64;
        for (rotor, &w) in self.rotors.iter_mut().zip(&self.steps) {
            *rotor = Complex64::from_polar(1.0, (w * t).rem_euclid(2.0 * PI));
        }
    }

    /// Complex gain at the current slot; advances to the next slot.
    pub fn next_gain(&mut self) -> Complex64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for ((z, a), b) in self.rotors.iter().zip(&self.in_phase).zip(&self.quadrature) {
            re += a.re * z.re - a.im * z.im;
            im += b.re * z.re - b.im * z.im;
        }
        let mut g = Complex64::new(re, im) * self.diffuse_scale;
        if self.los_amplitude > 0.0 {
            let phase = self.los_step * self.slot as f64 + self.los_phase;
            g += Complex64::from_polar(self.los_amplitude, phase);
        }

        self.slot += 1;
        if self.slot % RESYNC_INTERVAL == 0 {
            self.resync();
        } else {
            for (z, s) in self.rotors.iter_mut().zip(&self.step_rotors) {
                *z *= s;
            }
        }
        g
    }
}

/// Generates `n_slots` complex gains of a single tap.
pub fn generate_tap_process(
    doppler_hz: f64,
    n_slots: usize,
    slot_duration: f64,
    rician_k: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    if n_slots == 0 {
        return Err(Error::Config("n_slots must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tap = TapProcess::new(doppler_hz, slot_duration, rician_k, &mut rng)?;
    Ok((0..n_slots).map(|_| tap.next_gain()).collect())
}

/// Normalized (by lag-0 power) real part of the time-averaged
/// autocorrelation at `lag`.
pub fn normalized_autocorrelation(gains: &[Complex64], lag: usize) -> f64 {
    let n = gains.len();
    if lag >= n {
        return 0.0;
    }
    let power: f64 = gains.iter().map(|g| g.norm_sqr()).sum::<f64>() / n as f64;
    let cross: f64 = gains[lag..]
        .iter()
        .zip(gains)
        .map(|(a, b)| (a * b.conj()).re)
        .sum::<f64>()
        / (n - lag) as f64;
    cross / power
}
