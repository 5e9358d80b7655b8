use crate::error::{Error, Result};

/// Zero-order hold: every horizon repeats the latest report.
pub fn zoh(window: &[f64], output_len: usize) -> Vec<f64> {
    vec![window[0]; output_len]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpMethod {
    Linear,
    /// Two-point LMMSE from the neighbouring reports.
    Lmmse,
}

/// Fills the slots between sparse reports taken every `t_csi` slots.
///
/// Output length is `(sparse.len() - 1) * t_csi + 1`; report slots are kept
/// as given. `autocorr(m)` is the autocorrelation at lag `m` slots and is
/// required for [`InterpMethod::Lmmse`].
pub fn interpolate(
    sparse: &[f64],
    t_csi: usize,
    method: InterpMethod,
    autocorr: Option<&dyn Fn(usize) -> f64>,
) -> Result<Vec<f64>> {
    if t_csi == 0 {
        return Err(Error::Config("T_CSI must be >= 1".into()));
    }
    if sparse.len() < 2 {
        return Ok(sparse.to_vec());
    }
    let weights: Vec<(f64, f64)> = match method {
        InterpMethod::Linear => (0..t_csi)
            .map(|d| {
                let w = d as f64 / t_csi as f64;
                (1.0 - w, w)
            })
            .collect(),
        InterpMethod::Lmmse => {
            let r = autocorr.ok_or_else(|| {
                Error::Config("LMMSE interpolation requires an autocorrelation".into())
            })?;
            let (r0, rt) = (r(0), r(t_csi));
            let det = r0 * r0 - rt * rt;
            if !(det > 0.0) {
                return Err(Error::Domain(
                    "LMMSE interpolation: singular 2x2 correlation matrix".into(),
                ));
            }
            (0..t_csi)
                .map(|d| {
                    let (ra, rb) = (r(d), r(t_csi - d));
                    ((r0 * ra - rt * rb) / det, (r0 * rb - rt * ra) / det)
                })
                .collect()
        }
    };
    let mut out = Vec::with_capacity((sparse.len() - 1) * t_csi + 1);
    for pair in sparse.windows(2) {
        out.extend(weights.iter().map(|(wa, wb)| wa * pair[0] + wb * pair[1]));
    }
    out.push(*sparse.last().unwrap());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zoh_repeats_latest() {
        assert_eq!(zoh(&[2.5, -1.0, 0.3], 3), vec![2.5; 3]);
    }

    #[test]
    fn linear_midpoint() {
        let d = interpolate(&[0.0, 4.0], 4, InterpMethod::Linear, None).unwrap();
        assert_eq!(d, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn lmmse_ar1_midpoint() {
        let rho: f64 = 0.9;
        let r = move |m: usize| rho.powi(m as i32);
        let d = interpolate(&[1.0, 1.0], 4, InterpMethod::Lmmse, Some(&r)).unwrap();
        let expected = 2.0 * rho.powi(2) / (1.0 + rho.powi(4));
        assert!((d[2] - expected).abs() < 1e-12, "{} vs {expected}", d[2]);
        assert!((d[0] - 1.0).abs() < 1e-12 && (d[4] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lmmse_white_noise_gives_zero_between_reports() {
        let r = |m: usize| if m == 0 { 1.0 } else { 0.0 };
        let d = interpolate(&[3.0, -2.0], 4, InterpMethod::Lmmse, Some(&r)).unwrap();
        assert_eq!(d, vec![3.0, 0.0, 0.0, 0.0, -2.0]);
    }

    #[test]
    fn lmmse_without_autocorrelation_is_a_config_error() {
        let e = interpolate(&[0.0, 1.0], 4, InterpMethod::Lmmse, None);
        assert!(matches!(e, Err(Error::Config(_))));
    }
}
