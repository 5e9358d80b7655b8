//! Linear MMSE prediction from an estimated autocorrelation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Biased sample autocorrelation `R(m)`, `m = 0..=max_lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct Autocorrelation {
    values: Vec<f64>,
    samples: usize,
}

impl Autocorrelation {
    /// Wraps known autocorrelation values (e.g. an analytic model).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || !(values[0] > 0.0) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("autocorrelation needs finite values with R(0) > 0".into()));
        }
        Ok(Self { values, samples: 0 })
    }

    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    pub fn at(&self, lag: usize) -> f64 {
        self.values[lag]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of samples the estimate was formed from (0 if supplied).
    pub fn samples(&self) -> usize {
        self.samples
    }
}

/// Estimates `R(m) = (1/N) sum_n x(n) x(n+m)`.
///
/// The `1/N` normalization keeps the resulting Toeplitz matrices positive
/// semi-definite. Requires `N >= 10 * max_lag`.
pub fn estimate_autocorrelation(series: &[f64], max_lag: usize) -> Result<Autocorrelation> {
    estimate_autocorrelation_pooled(&[series], max_lag)
}

/// Pools lag products from several independent series.
pub fn estimate_autocorrelation_pooled(series: &[&[f64]], max_lag: usize) -> Result<Autocorrelation> {
    let total: usize = series.iter().map(|s| s.len()).sum();
    let required = (10 * max_lag).max(1);
    if total < required {
        return Err(Error::Sizing {
            what: format!("samples for autocorrelation up to lag {max_lag}"),
            required,
            available: total,
        });
    }
    let mut values = vec![0.0; max_lag + 1];
    for s in series {
        for (m, v) in values.iter_mut().enumerate() {
            if m < s.len() {
                *v += s[..s.len() - m].iter().zip(&s[m..]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
    }
    for v in &mut values {
        *v /= total as f64;
    }
    if !(values[0] > 0.0) {
        return Err(Error::Domain("autocorrelation estimate has zero power".into()));
    }
    Ok(Autocorrelation { values, samples: total })
}

/// One filter `a` with `s(n + horizon) ~ a . [s(n), s(n - T), ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerFilter {
    pub horizon: usize,
    pub coefficients: Vec<f64>,
    /// `R(0) - r^T a`.
    pub analytic_mmse: f64,
    /// Diagonal loading that had to be added, if any.
    pub loading: Option<f64>,
}

impl WienerFilter {
    pub fn predict(&self, window: &[f64]) -> f64 {
        self.coefficients.iter().zip(window).map(|(a, x)| a * x).sum()
    }
}

/// Filters for a set of horizons sharing `P` and `T_CSI`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerBank {
    pub input_len: usize,
    pub t_csi: usize,
    pub filters: Vec<WienerFilter>,
}

/// Solves the normal equations for one horizon.
pub fn wiener_filter(
    autocorr: &Autocorrelation,
    input_len: usize,
    spacing: usize,
    horizon: usize,
) -> Result<WienerFilter> {
    if input_len == 0 || spacing == 0 {
        return Err(Error::Config("Wiener filter needs P >= 1 and spacing >= 1".into()));
    }
    let needed = spacing * (input_len - 1) + horizon;
    if autocorr.max_lag() < needed {
        return Err(Error::Sizing {
            what: "autocorrelation lags for Wiener filter".into(),
            required: needed + 1,
            available: autocorr.max_lag() + 1,
        });
    }
    let r = |m: usize| autocorr.at(m);
    let p = input_len;
    let mut mat = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            mat[i * p + j] = r(spacing * i.abs_diff(j));
        }
    }
    let rhs: Vec<f64> = (0..p).map(|i| r(spacing * i + horizon)).collect();

    let mut loading = None;
    let mut lambda = 1e-8 * r(0);
    let chol = loop {
        let mut m = mat.clone();
        if let Some(l) = loading {
            for i in 0..p {
                m[i * p + i] += l;
            }
        }
        match cholesky(&m, p) {
            Some(c) => break c,
            None if lambda <= r(0) => {
                log::warn!("Wiener normal matrix not positive definite; loading diagonal with {lambda:e}");
                loading = Some(lambda);
                lambda *= 10.0;
            }
            None => return Err(Error::Domain("Wiener normal matrix is singular".into())),
        }
    };
    let coefficients = cholesky_solve(&chol, p, &rhs);
    let analytic_mmse = r(0) - rhs.iter().zip(&coefficients).map(|(a, b)| a * b).sum::<f64>();
    Ok(WienerFilter {
        horizon,
        coefficients,
        analytic_mmse,
        loading,
    })
}

/// Builds filters for `horizons`, with inputs spaced `t_csi` apart.
pub fn build_filter_bank(
    autocorr: &Autocorrelation,
    input_len: usize,
    t_csi: usize,
    horizons: &[usize],
) -> Result<WienerBank> {
    let filters = horizons
        .iter()
        .map(|&h| wiener_filter(autocorr, input_len, t_csi, h))
        .collect::<Result<Vec<_>>>()?;
    Ok(WienerBank {
        input_len,
        t_csi,
        filters,
    })
}

impl WienerBank {
    /// One output per filter, in filter order.
    pub fn predict(&self, window: &[f64]) -> Vec<f64> {
        self.filters.iter().map(|f| f.predict(window)).collect()
    }

    pub fn filter_for(&self, horizon: usize) -> Option<&WienerFilter> {
        self.filters.iter().find(|f| f.horizon == horizon)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("wiener-bank p={} t_csi={}\n", self.input_len, self.t_csi);
        for f in &self.filters {
            let _ = write!(s, "{} {:e}", f.horizon, f.analytic_mmse);
            for a in &f.coefficients {
                let _ = write!(s, " {a:e}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("wiener bank: {what}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty input"))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("wiener-bank") {
            return Err(bad("missing header"));
        }
        let mut kv = |key: &str| -> Result<usize> {
            fields
                .next()
                .and_then(|f| f.strip_prefix(key))
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(&format!("header field {key}")))
        };
        let input_len = kv("p=")?;
        let t_csi = kv("t_csi=")?;
        let mut filters = Vec::new();
        for line in lines {
            let mut it = line.split_whitespace();
            let horizon = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("horizon"))?;
            let analytic_mmse = it.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("mmse"))?;
            let coefficients = it
                .map(|v| v.parse::<f64>().map_err(|_| bad("coefficient")))
                .collect::<Result<Vec<_>>>()?;
            if coefficients.len() != input_len {
                return Err(bad("coefficient count"));
            }
            filters.push(WienerFilter {
                horizon,
                coefficients,
                analytic_mmse,
                loading: None,
            });
        }
        Ok(Self {
            input_len,
            t_csi,
            filters,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Self::from_text(&text).map_err(|e| Error::Load {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }
}

/// Lower Cholesky factor of a row-major `n x n` matrix.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                if !(d > 0.0) || !d.is_finite() {
                    return None;
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ar1(rho: f64, lags: usize) -> Autocorrelation {
        Autocorrelation::from_values((0..=lags).map(|m| rho.powi(m as i32)).collect()).unwrap()
    }

    #[test]
    fn ar1_two_step_single_tap() {
        let f = wiener_filter(&ar1(0.9, 4), 1, 1, 2).unwrap();
        assert!((f.coefficients[0] - 0.81).abs() < 1e-12);
        assert!((f.analytic_mmse - 0.3439).abs() < 1e-12);
    }

    #[test]
    fn ar1_only_latest_sample_matters() {
        let f = wiener_filter(&ar1(0.7, 40), 5, 4, 3).unwrap();
        assert!((f.coefficients[0] - 0.7f64.powi(3)).abs() < 1e-10);
        assert!(f.coefficients[1..].iter().all(|a| a.abs() < 1e-10));
    }

    #[test]
    fn white_noise_gives_zero_filter() {
        let mut v = vec![0.0; 20];
        v[0] = 2.0;
        let f = wiener_filter(&Autocorrelation::from_values(v).unwrap(), 3, 4, 2).unwrap();
        assert!(f.coefficients.iter().all(|a| *a == 0.0));
        assert_eq!(f.analytic_mmse, 2.0);
    }

    #[test]
    fn constant_series_estimate_decays_only_by_overlap() {
        let s = vec![1.5; 200];
        let r = estimate_autocorrelation(&s, 10).unwrap();
        for m in 0..=10 {
            let expect = 2.25 * (200 - m) as f64 / 200.0;
            assert!((r.at(m) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn short_series_is_a_sizing_error() {
        let e = estimate_autocorrelation(&[1.0; 99], 10);
        assert!(matches!(e, Err(Error::Sizing { required: 100, available: 99, .. })));
    }

    #[test]
    fn rank_deficient_matrix_gets_loaded() {
        // A constant process makes every input identical.
        let r = Autocorrelation::from_values(vec![1.0; 20]).unwrap();
        let f = wiener_filter(&r, 3, 2, 1).unwrap();
        assert!(f.loading.is_some());
        let sum: f64 = f.coefficients.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn text_round_trip() {
        let bank = build_filter_bank(&ar1(0.95, 30), 4, 4, &[1, 2, 3]).unwrap();
        let back = WienerBank::from_text(&bank.to_text()).unwrap();
        assert_eq!(back.input_len, 4);
        for (a, b) in bank.filters.iter().zip(&back.filters) {
            assert_eq!(a.horizon, b.horizon);
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                assert!((x - y).abs() <= 1e-15 * x.abs().max(1.0));
            }
        }
    }
}
