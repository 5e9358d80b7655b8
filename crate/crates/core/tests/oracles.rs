use std::f64::consts::PI;

use csi_predict::channel::{generate_tap_process, normalized_autocorrelation, ChannelConfig};
use csi_predict::eesm::Standardizer;
use csi_predict::neural::{train, NeuralModel, TrainConfig, TrainSet};
use csi_predict::predictor::{
    build_windows, Engine, PredictorKind, PredictorModel, PredictorSpec, TrackPredictor,
};
use csi_predict::sim::{evaluate_mse, mse_to_db};
use csi_predict::verify::{ar1_series, check_gradients, check_wiener_ar1, check_zoh_limit};
use csi_predict::wiener::{build_filter_bank, estimate_autocorrelation, wiener_filter};

#[test]
fn tap_autocorrelation_follows_bessel_j0() {
    for fd in [5.0, 20.0] {
        let g = generate_tap_process(fd, 100_000, 1e-3, 0.0, 9).unwrap();
        for m in [1usize, 8, 32] {
            let want = libm::j0(2.0 * PI * fd * m as f64 * 1e-3);
            let got = normalized_autocorrelation(&g, m);
            assert!((got - want).abs() < 0.05, "{fd} Hz lag {m}: {got} vs {want}");
        }
    }
}

#[test]
fn rician_tap_keeps_unit_power() {
    let k = 10.0;
    let g = generate_tap_process(10.0, 50_000, 1e-3, k, 4).unwrap();
    let power = g.iter().map(|x| x.norm_sqr()).sum::<f64>() / g.len() as f64;
    assert!((power - 1.0).abs() < 0.05, "{power}");
}

#[test]
fn ar1_autocorrelation_estimate() {
    let x = ar1_series(0.9, 1_000_000, 21);
    let r = estimate_autocorrelation(&x, 8).unwrap();
    for m in 0..=8 {
        assert!((r.at(m) - 0.9f64.powi(m as i32)).abs() < 0.02, "lag {m}: {}", r.at(m));
    }
}

#[test]
fn wiener_ar1_orthogonality_and_mmse() {
    let c = check_wiener_ar1(0.9, 100_000, 3);
    assert!(c.passed, "{c}");
}

#[test]
fn wiener_design_on_exact_ar1_statistics() {
    let r = csi_predict::wiener::Autocorrelation::from_values((0..=8).map(|m| 0.9f64.powi(m)).collect()).unwrap();
    let f = wiener_filter(&r, 1, 1, 2).unwrap();
    assert!((f.coefficients[0] - 0.81).abs() < 1e-12);
    assert!((f.analytic_mmse - 0.3439).abs() < 1e-12);
    let bank = build_filter_bank(&r, 1, 1, &[2]).unwrap();
    assert!((bank.predict(&[1.0])[0] - 0.81).abs() < 1e-12);
}

fn wiener_model(series: &[f64], p: usize, t: usize) -> PredictorModel {
    let spec = PredictorSpec::tdd(PredictorKind::Wiener, p, 0, t);
    let r = estimate_autocorrelation(series, t * (p - 1) + t).unwrap();
    let bank = build_filter_bank(&r, p, t, &spec.horizons()).unwrap();
    let track = TrackPredictor {
        stats: Standardizer::new(0.0, 1.0).unwrap(),
        engine: Engine::Wiener(bank),
    };
    PredictorModel::new(spec, vec![track]).unwrap()
}

#[test]
fn evaluated_wiener_mse_on_ar1_matches_closed_form() {
    let x = ar1_series(0.9, 200_000, 5);
    let model = wiener_model(&x, 4, 2);
    let batch = build_windows(&x, 4, 2).unwrap();
    let db = evaluate_mse(&model, &[batch]).unwrap()[0];
    assert!((db - mse_to_db(0.19)).abs() < 0.3, "{db}");
}

#[test]
fn zoh_on_white_windows_is_three_db() {
    let x = ar1_series(0.0, 200_000, 6);
    let spec = PredictorSpec::tdd(PredictorKind::Zoh, 2, 0, 4);
    let model = PredictorModel::zoh(spec, vec![Standardizer::new(0.0, 1.0).unwrap()]).unwrap();
    let batch = build_windows(&x, 2, 4).unwrap();
    for db in evaluate_mse(&model, &[batch]).unwrap() {
        assert!((db - 10.0 * 2.0f64.log10()).abs() < 0.1, "{db}");
    }
}

#[test]
fn zoh_error_power_tends_to_twice_the_variance() {
    let c = check_zoh_limit(0.9, 100_000, 8);
    assert!(c.passed, "{c}");
}

#[test]
fn gradients_match_central_differences() {
    let c = check_gradients(10, 99, false);
    assert!(c.passed, "{c}");
}

#[test]
fn gru_approaches_the_ar1_bound() {
    let x = ar1_series(0.9, 30_000, 31);
    let batch = build_windows(&x, 4, 2).unwrap();
    let n = batch.len();
    let train_set = TrainSet::from_batch(&batch.slice(0..n * 4 / 5), &[1]);
    let val_set = TrainSet::from_batch(&batch.slice(n * 4 / 5..n), &[1]);
    let init = NeuralModel::new(PredictorKind::Gru, 4, 16, 1, 2).unwrap();
    let cfg = TrainConfig {
        epochs: 60,
        batch_size: 128,
        learning_rate: 3e-3,
        shuffle_seed: 1,
        patience: Some(10),
    };
    let (_, history) = train(&init, &train_set, &val_set, &cfg).unwrap();
    let db = mse_to_db(history.best_val_loss());
    assert!((db - mse_to_db(0.19)).abs() < 1.0, "{db} dB");
}

#[test]
fn config_defaults_match_the_reference_link() {
    let c = ChannelConfig::new(10.0, 100, 0);
    assert_eq!((c.n_layers, c.n_rb, c.profile.as_str()), (4, 52, "tdl-a"));
    assert_eq!(c.avg_snr_db, 12.5);
}
