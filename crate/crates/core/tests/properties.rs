use csi_predict::eesm::{
    destandardize, eesm_compress, effective_sinr_all_cqi, from_db, select_cqi, select_cqi_scalar, standardize,
    CqiTable,
};
use csi_predict::predictor::{build_windows_strided, TargetStrategy};
use csi_predict::sim::{dataset_from_traces, DatasetSpec};
use proptest::prelude::*;

fn sinr_grid(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-15.0f64..35.0).prop_map(from_db), 1..len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn eesm_lies_between_min_and_arithmetic_mean(s in sinr_grid(64), beta in 0.05f64..100.0) {
        let v = eesm_compress(&s, beta).unwrap();
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        prop_assert!(v >= lo * (1.0 - 1e-12));
        prop_assert!(v <= mean * (1.0 + 1e-12));
    }

    #[test]
    fn eesm_is_monotone_in_each_entry(s in sinr_grid(64), k in any::<prop::sample::Index>(), f in 1.0f64..20.0, beta in 0.5f64..30.0) {
        let mut up = s.clone();
        let i = k.index(up.len());
        up[i] *= f;
        prop_assert!(eesm_compress(&up, beta).unwrap() >= eesm_compress(&s, beta).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn eesm_grows_with_beta(s in sinr_grid(64), b in 0.5f64..20.0, f in 1.0f64..5.0) {
        prop_assert!(eesm_compress(&s, b * f).unwrap() >= eesm_compress(&s, b).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn cqi_selection_is_monotone_in_a_uniform_gain(s in sinr_grid(64), gain_db in 0.0f64..10.0) {
        let table = CqiTable::default();
        let up: Vec<f64> = s.iter().map(|v| v * from_db(gain_db)).collect();
        let a = select_cqi(&effective_sinr_all_cqi(&s, &table).unwrap(), &table).unwrap();
        let b = select_cqi(&effective_sinr_all_cqi(&up, &table).unwrap(), &table).unwrap();
        prop_assert!(b >= a);
    }

    #[test]
    fn scalar_cqi_selection_is_monotone(a_db in -20.0f64..40.0, d in 0.0f64..10.0) {
        let table = CqiTable::default();
        prop_assert!(select_cqi_scalar(from_db(a_db + d), &table) >= select_cqi_scalar(from_db(a_db), &table));
    }

    #[test]
    fn standardization_round_trips(s in prop::collection::vec(-1e3f64..1e3, 1..50), mean in -50.0f64..50.0, std in 0.01f64..100.0) {
        let back = destandardize(&standardize(&s, mean, std).unwrap(), mean, std).unwrap();
        for (x, y) in s.iter().zip(back) {
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn windows_follow_the_report_layout(len in 8usize..300, p in 1usize..5, t in 2usize..9, stride in 1usize..9) {
        prop_assume!(len >= p * t);
        let series: Vec<f64> = (0..len).map(|i| i as f64).collect();
        let b = build_windows_strided(&series, p, t, stride).unwrap();
        let first = t * (p - 1);
        let expected = (first..=len - t).step_by(stride).count();
        prop_assert_eq!(b.len(), expected);
        for r in 0..b.len() {
            let n = b.slot(r);
            for (i, x) in b.input(r).iter().enumerate() {
                prop_assert_eq!(*x, (n - i * t) as f64);
            }
            for (h, y) in b.targets_tdd(r).iter().enumerate() {
                prop_assert_eq!(*y, (n + h + 1) as f64);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dataset_splits_are_chronological_and_disjoint(seed in 0u64..1000, t in 2usize..6, stride in 1usize..4) {
        let table = CqiTable::default();
        let config = csi_predict::channel::ChannelConfig::new(20.0, 1500, seed);
        let trace = csi_predict::eesm::trace_from_config(&config, &table).unwrap();
        let spec = DatasetSpec::new(3, t, TargetStrategy::BestCqi).with_stride(stride.min(t));
        let ds = dataset_from_traces(&[config], &[trace], spec).unwrap();
        let tr = &ds.tracks[0];
        let slots = |b: &csi_predict::predictor::PredictionBatch| (0..b.len()).map(|r| b.slot(r)).collect::<Vec<_>>();
        let (a, v, s) = (slots(&tr.train), slots(&tr.val), slots(&tr.test));
        prop_assert!(a.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(a.last() < v.first());
        if let (Some(lv), Some(fs)) = (v.last(), s.first()) {
            prop_assert!(lv < fs);
        }
        let total = a.len() + v.len() + s.len();
        prop_assert!((a.len() as f64 - 0.784 * total as f64).abs() <= 1.0);
    }
}
