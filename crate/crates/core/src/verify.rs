//! Oracle suite: closed forms, analytic limits and finite differences that
//! the implementation must reproduce.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{generate_tap_process, normalized_autocorrelation};
use crate::eesm::{eesm_compress, from_db, CqiTable};
use crate::neural::NeuralModel;
use crate::predictor::{flops, flops_single, PredictorKind, PredictorSpec};
use crate::wiener::{estimate_autocorrelation, wiener_filter};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}: {}", self.name, self.detail)
    }
}

/// Negative-control hooks and inputs of [`run_all`].
#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Table to validate; the built-in table when `None`.
    pub table: Option<CqiTable>,
    /// Swap two betas before validating the table.
    pub corrupt_cqi_table: bool,
    /// Perturb the analytic gradient before comparing.
    pub gradient_bug: bool,
    pub seed: u64,
}

/// Unit-variance AR(1) series `x(n) = rho x(n-1) + sqrt(1 - rho^2) w(n)`.
pub fn ar1_series(rho: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = (1.0 - rho * rho).sqrt();
    let mut x: f64 = rng.sample(StandardNormal);
    (0..n)
        .map(|_| {
            let out = x;
            let w: f64 = rng.sample(StandardNormal);
            x = rho * x + g * w;
            out
        })
        .collect()
}

/// Closed-form FLOP counts over P 1..8, D {4,8,16,32}, T_CSI {4,32,40},
/// against both the formula module and instrumented forward passes.
pub fn check_flops() -> Check {
    let mut mismatches = Vec::new();
    let mut n = 0;
    for p in 1..=8u64 {
        for d in [4u64, 8, 16, 32] {
            for t in [4u64, 32, 40] {
                let o = t - 1;
                let expected = [
                    (PredictorKind::Wiener, o * (2 * p - 1)),
                    (PredictorKind::Dnn, 2 * d * (p + o)),
                    (PredictorKind::Lstm, p * (8 * d * d + 12 * d) + 2 * d * o),
                    (PredictorKind::Gru, p * (6 * d * d + 11 * d) + 2 * d * o),
                ];
                for (kind, want) in expected {
                    let spec = PredictorSpec::tdd(kind, p as usize, d as usize, t as usize);
                    let mut got = vec![flops(&spec), flops(&spec.by_cqi()) / 15];
                    if kind.is_neural() {
                        let m = NeuralModel::new(kind, p as usize, d as usize, o as usize, 0).unwrap();
                        got.push(m.forward_counted(&vec![0.5; p as usize]).unwrap().1);
                    }
                    n += 1;
                    if got.iter().any(|&g| g != want) || flops(&spec.by_cqi()) != 15 * want {
                        mismatches.push(format!("{kind} P={p} D={d} T={t}: {got:?} vs {want}"));
                    }
                }
            }
        }
    }
    let gru = flops_single(PredictorKind::Gru, 4, 16, 3);
    let passed = mismatches.is_empty() && gru == 6944;
    let detail = if passed {
        format!("{n} grid points exact, GRU(P=4, D=16, T_CSI=4) = {gru}")
    } else {
        format!("GRU reference {gru}; mismatches: {}", mismatches.join("; "))
    };
    Check::new("flops closed forms", passed, detail)
}

/// Empirical Wiener MSE on AR(1) data against `1 - rho^(2 tau)`, the
/// orthogonality of the residual to every input, and the filter's own MMSE.
pub fn check_wiener_ar1(rho: f64, n: usize, seed: u64) -> Check {
    let x = ar1_series(rho, n, seed);
    let p = 4;
    let r = match estimate_autocorrelation(&x, p + 4) {
        Ok(r) => r,
        Err(e) => return Check::new("wiener AR(1)", false, e.to_string()),
    };
    let mut passed = true;
    let mut parts = Vec::new();
    for tau in [1usize, 2, 4] {
        let f = match wiener_filter(&r, p, 1, tau) {
            Ok(f) => f,
            Err(e) => return Check::new("wiener AR(1)", false, e.to_string()),
        };
        let mut sse = 0.0;
        let mut cross = vec![0.0; p];
        let mut count = 0usize;
        let mut window = vec![0.0; p];
        for n0 in p - 1..x.len() - tau {
            for (i, w) in window.iter_mut().enumerate() {
                *w = x[n0 - i];
            }
            let e = x[n0 + tau] - f.predict(&window);
            sse += e * e;
            for (c, w) in cross.iter_mut().zip(&window) {
                *c += e * w;
            }
            count += 1;
        }
        let mse = sse / count as f64;
        let closed = 1.0 - rho.powi(2 * tau as i32);
        let rel = (mse - closed).abs() / closed;
        let ortho = cross.iter().map(|c| (c / count as f64).abs()).fold(0.0, f64::max) / r.at(0);
        let mmse_rel = (f.analytic_mmse - mse).abs() / closed;
        passed &= rel < 0.05 && ortho < 0.01 && mmse_rel < 0.05;
        parts.push(format!(
            "tau={tau} mse={mse:.4} closed={closed:.4} rel={rel:.4} ortho={ortho:.2e} analytic={:.4}",
            f.analytic_mmse
        ));
    }
    Check::new("wiener AR(1)", passed, parts.join("; "))
}

/// Error power of zero-order hold at a lag where the AR(1)
/// autocorrelation has decayed below 0.05 (limit 2).
pub fn check_zoh_limit(rho: f64, n: usize, seed: u64) -> Check {
    let x = ar1_series(rho, n, seed);
    let lag = (0.05f64.ln() / rho.ln()).ceil() as usize;
    let power = (lag..x.len()).map(|i| (x[i] - x[i - lag]).powi(2)).sum::<f64>() / (x.len() - lag) as f64;
    Check::new(
        "zoh limit",
        (1.8..=2.2).contains(&power),
        format!("lag {lag} (rho^lag = {:.4}): error power {power:.4}", rho.powi(lag as i32)),
    )
}

/// Largest relative deviation between the analytic gradient and central
/// differences; `bug` perturbs the analytic gradient first.
pub fn gradient_error(model: &NeuralModel, inputs: &[f64], targets: &[f64], bug: bool) -> f64 {
    let (_, mut g) = model.loss_and_gradient(inputs, targets).unwrap();
    if bug {
        g[0] += 1e-2;
    }
    let mut m = model.clone();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..g.len() {
        let orig = m.params()[i];
        m.params_mut()[i] = orig + h;
        let lp = m.evaluate(inputs, targets).unwrap();
        m.params_mut()[i] = orig - h;
        let lm = m.evaluate(inputs, targets).unwrap();
        m.params_mut()[i] = orig;
        let fd = (lp - lm) / (2.0 * h);
        worst = worst.max((g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-3));
    }
    worst
}

/// Finite-difference gradient checks over `draws` random parameter draws
/// per architecture.
pub fn check_gradients(draws: usize, seed: u64, bug: bool) -> Check {
    let (p, d, out, batch) = (4, 6, 3, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parts = Vec::new();
    let mut passed = true;
    for kind in [PredictorKind::Dnn, PredictorKind::Gru, PredictorKind::Lstm] {
        let mut worst: f64 = 0.0;
        for draw in 0..draws {
            let mut m = NeuralModel::new(kind, p, d, out, seed + draw as u64).unwrap();
            for w in m.params_mut() {
                *w += rng.gen_range(-0.5..0.5);
            }
            let x: Vec<f64> = (0..batch * p).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..batch * out).map(|_| rng.gen_range(-2.0..2.0)).collect();
            worst = worst.max(gradient_error(&m, &x, &y, bug));
        }
        passed &= worst < 1e-4;
        parts.push(format!("{kind} max rel err {worst:.2e}"));
    }
    Check::new("gradient check", passed, format!("{draws} draws each: {}", parts.join(", ")))
}

/// EESM identities: constant grids map to themselves, single-entry
/// increases never lower the result, huge beta tends to the mean, and the
/// shifted evaluation agrees with the direct formula.
pub fn check_eesm(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let betas = CqiTable::default().betas();
    let grid = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..208).map(|_| from_db(rng.gen_range(-10.0..30.0))).collect() };

    let mut uniform_err: f64 = 0.0;
    for _ in 0..100 {
        let g = from_db(rng.gen_range(-20.0..40.0));
        let beta = rng.gen_range(0.5..50.0);
        let v = eesm_compress(&vec![g; 208], beta).unwrap();
        uniform_err = uniform_err.max((v - g).abs() / g);
    }

    let mut violations = 0;
    for _ in 0..1000 {
        let mut s = grid(&mut rng);
        let beta = betas[rng.gen_range(0..betas.len())];
        let before = eesm_compress(&s, beta).unwrap();
        let k = rng.gen_range(0..s.len());
        s[k] *= rng.gen_range(1.01..10.0);
        if eesm_compress(&s, beta).unwrap() < before {
            violations += 1;
        }
    }

    let mut mean_err: f64 = 0.0;
    for _ in 0..20 {
        let s = grid(&mut rng);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        mean_err = mean_err.max((eesm_compress(&s, 1e7).unwrap() - mean).abs() / mean);
    }

    let mut brute_err: f64 = 0.0;
    for _ in 0..100 {
        let s: Vec<f64> = (0..52).map(|_| from_db(rng.gen_range(-5.0..15.0))).collect();
        let beta = betas[rng.gen_range(0..betas.len())];
        let direct = -beta * (s.iter().map(|g| (-g / beta).exp()).sum::<f64>() / s.len() as f64).ln();
        brute_err = brute_err.max((eesm_compress(&s, beta).unwrap() - direct).abs() / direct);
    }

    let passed = uniform_err < 1e-9 && violations == 0 && mean_err < 1e-4 && brute_err < 1e-9;
    Check::new(
        "eesm properties",
        passed,
        format!(
            "uniform rel err {uniform_err:.1e}, monotonicity violations {violations}/1000, \
             large-beta mean rel err {mean_err:.1e}, brute-force rel err {brute_err:.1e}"
        ),
    )
}

pub fn check_cqi_table(table: &CqiTable) -> Check {
    match table.validate() {
        Ok(()) => Check::new("cqi table", true, format!("{} entries valid", table.entries().len())),
        Err(e) => Check::new("cqi table", false, e.to_string()),
    }
}

/// Time-averaged tap autocorrelation against `J0(2 pi f_D m T_slot)`,
/// averaged over `processes` independent taps per Doppler.
pub fn check_channel_autocorrelation(dopplers: &[f64], n_slots: usize, processes: usize, seed: u64) -> Check {
    let lags = [1usize, 8, 32];
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for &fd in dopplers {
        let mut acc = [0.0; 3];
        for k in 0..processes {
            let g = generate_tap_process(fd, n_slots, 1e-3, 0.0, seed + 1000 * k as u64).unwrap();
            for (a, &m) in acc.iter_mut().zip(&lags) {
                *a += normalized_autocorrelation(&g, m) / processes as f64;
            }
        }
        let errs: Vec<String> = lags
            .iter()
            .zip(acc)
            .map(|(&m, a)| {
                let j = libm::j0(2.0 * PI * fd * m as f64 * 1e-3);
                worst = worst.max((a - j).abs());
                format!("{m}:{a:.3}/{j:.3}")
            })
            .collect();
        parts.push(format!("{fd} Hz [{}]", errs.join(" ")));
    }
    Check::new(
        "channel autocorrelation",
        worst <= 0.05,
        format!("max |err| {worst:.4}; {}", parts.join(", ")),
    )
}

/// Every oracle, in a fixed order.
pub fn run_all(opts: &VerifyOptions) -> Vec<Check> {
    let mut table = opts.table.clone().unwrap_or_default();
    if opts.corrupt_cqi_table {
        let e = table.entries_mut_unchecked();
        let b = e[3].beta;
        e[3].beta = e[4].beta;
        e[4].beta = b;
    }
    vec![
        check_cqi_table(&table),
        check_flops(),
        check_eesm(opts.seed),
        check_wiener_ar1(0.9, 100_000, opts.seed),
        check_zoh_limit(0.9, 100_000, opts.seed + 1),
        check_gradients(10, opts.seed, opts.gradient_bug),
        check_channel_autocorrelation(&[5.0, 10.0, 20.0], 200_000, 4, opts.seed),
    ]
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ar1_series_has_unit_variance_and_lag_one_rho() {
        let x = ar1_series(0.9, 50_000, 1);
        let r = estimate_autocorrelation(&x, 1).unwrap();
        assert!((r.at(0) - 1.0).abs() < 0.05, "{}", r.at(0));
        assert!((r.at(1) / r.at(0) - 0.9).abs() < 0.01);
    }

    #[test]
    fn negative_controls_fail() {
        let mut t = CqiTable::default();
        t.entries_mut_unchecked().swap(2, 5);
        assert!(!check_cqi_table(&t).passed);
        assert!(!check_gradients(1, 3, true).passed);
        assert!(check_gradients(1, 3, false).passed);
    }

    #[test]
    fn fast_oracles_pass() {
        for c in [check_flops(), check_eesm(5), check_cqi_table(&CqiTable::default())] {
            assert!(c.passed, "{c}");
        }
    }
}
