//! Acceptance suite: one verdict line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 1 7 9`. Criteria in
//! `KNOWN_FAILURES` are reported as FAIL but do not fail the run; any other
//! failure does.

use std::process::ExitCode;
use std::time::Instant;

use csi_predict::channel::ChannelConfig;
use csi_predict::eesm::CqiTable;
use csi_predict::neural::TrainConfig;
use csi_predict::predictor::{PredictorKind, TargetStrategy};
use csi_predict::sim::RunReport;
use csi_predict::sweep::{
    doppler_generalization, fd_tcsi, fdd_horizon, input_len, target_strategy, tdd_throughput, MseRow, SweepContext,
};
use csi_predict::verify;

const KNOWN_FAILURES: &[usize] = &[7, 11, 12];

const WIENER: PredictorKind = PredictorKind::Wiener;
const GRU: PredictorKind = PredictorKind::Gru;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }
}

impl From<verify::Check> for Verdict {
    fn from(c: verify::Check) -> Self {
        Self::new(c.passed, c.detail)
    }
}

fn context() -> SweepContext {
    let train = TrainConfig {
        epochs: 200,
        batch_size: 256,
        learning_rate: 3e-3,
        shuffle_seed: 1,
        patience: Some(20),
    };
    let mut ctx = SweepContext::new(CqiTable::default(), ChannelConfig::new(10.0, 110_000, 0), train, 2024);
    ctx.stride = Some(4);
    ctx.test_slots = 48_000;
    ctx.mixed_slots = 16_000;
    ctx
}

fn find<'a>(rows: &'a [MseRow], kind: PredictorKind, pred: impl Fn(&MseRow) -> bool) -> &'a MseRow {
    rows.iter().find(|r| r.predictor == kind && pred(r)).expect("missing sweep row")
}

fn c7(ctx: &SweepContext) -> Verdict {
    let reports = tdd_throughput(ctx, &[WIENER, GRU], 10.0, 32).unwrap();
    let tp = |label: &str| reports.iter().find(|r| r.predictor == label).unwrap();
    let (zoh, ideal) = (tp("zoh"), tp("ideal"));
    let ds = ctx
        .dataset(&[ctx.train_config("tdl-a", 10.0)], 4, 32, TargetStrategy::BestCqi)
        .unwrap();
    let windows = ds.split_sizes().0;
    let mut passed = zoh.intervals >= 300 && windows >= 20_000;
    let mut parts = vec![format!(
        "{} intervals, {windows} training windows; zoh {:.3}, ideal {:.3} Mbps (+{:.2}%)",
        zoh.intervals,
        zoh.unconditioned_tp,
        ideal.unconditioned_tp,
        100.0 * (ideal.unconditioned_tp / zoh.unconditioned_tp - 1.0)
    )];
    for label in ["wiener", "gru"] {
        let r = tp(label);
        let gain = r.unconditioned_tp / zoh.unconditioned_tp - 1.0;
        passed &= gain >= 0.05 && ideal.unconditioned_tp >= r.unconditioned_tp;
        parts.push(format!("{label} {:.3} Mbps ({:+.2}%)", r.unconditioned_tp, 100.0 * gain));
    }
    passed &= ideal.unconditioned_tp >= zoh.unconditioned_tp;
    Verdict::new(passed, format!("{} [need >= +5%]", parts.join(", ")))
}

fn c8(ctx: &SweepContext) -> Verdict {
    let rows = fd_tcsi(ctx, &[WIENER, GRU], &[5.0, 10.0, 20.0], &[8, 16, 32, 40]).unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for kind in [WIENER, GRU] {
        let mut low = f64::NEG_INFINITY;
        let mut high = f64::INFINITY;
        for r in rows.iter().filter(|r| r.predictor == kind) {
            let product = r.doppler_hz * r.t_csi as f64;
            if product <= 100.0 {
                low = low.max(r.curve.average_db);
            }
            if product >= 400.0 {
                high = high.min(r.curve.average_db);
            }
        }
        let a = find(&rows, kind, |r| r.doppler_hz == 10.0 && r.t_csi == 32);
        let b = find(&rows, kind, |r| r.doppler_hz == 20.0 && r.t_csi == 16);
        let gap = (1..16)
            .map(|j| (a.curve.at(2 * j).unwrap() - b.curve.at(j).unwrap()).abs())
            .fold(0.0, f64::max);
        passed &= low < -5.0 && high > -2.0 && gap <= 1.5;
        parts.push(format!(
            "{kind}: worst <=100 {low:.2} dB, best >=400 {high:.2} dB, 10Hz x32 vs 20Hz x16 max gap {gap:.2} dB"
        ));
    }
    Verdict::new(passed, parts.join("; "))
}

fn c9(ctx: &SweepContext) -> Verdict {
    let rows = input_len(ctx, &[WIENER], &[40.0], 4, &[2, 3, 4, 5, 6, 7]).unwrap();
    let v: Vec<f64> = rows.iter().map(|r| r.curve.average_db).collect();
    let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
    let list: Vec<String> = rows.iter().map(|r| format!("P={} {:.2}", r.input_len, r.curve.average_db)).collect();
    Verdict::new(spread < 0.3, format!("{} dB; spread {spread:.3} dB [need < 0.3]", list.join(", ")))
}

fn c10(ctx: &SweepContext) -> Verdict {
    let rows = target_strategy(ctx, &[WIENER, GRU], 10.0, 4).unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for kind in [WIENER, GRU] {
        let best = find(&rows, kind, |r| r.target == TargetStrategy::BestCqi);
        let by = find(&rows, kind, |r| r.target == TargetStrategy::ByCqi);
        let ratio = by.flops as f64 / best.flops as f64;
        passed &= by.curve.average_db <= best.curve.average_db + 0.2 && by.flops == 15 * best.flops;
        parts.push(format!(
            "{kind}: best {:.2} dB, by-CQI {:.2} dB, FLOPs {} / {} = {ratio}",
            best.curve.average_db, by.curve.average_db, by.flops, best.flops
        ));
    }
    Verdict::new(passed, parts.join("; "))
}

fn c11(ctx: &SweepContext) -> Verdict {
    let horizons = [2, 8, 16, 24, 31];
    let reports = fdd_horizon(ctx, &[WIENER, GRU], 10.0, 32, &horizons).unwrap();
    let mut passed = true;
    let mut parts = Vec::new();
    for label in ["wiener", "gru"] {
        let mine: Vec<&RunReport> = reports.iter().filter(|r| r.predictor == label).collect();
        let best = mine
            .iter()
            .max_by(|a, b| a.unconditioned_tp.total_cmp(&b.unconditioned_tp))
            .unwrap();
        let short = mine.iter().find(|r| r.fdd_horizon == Some(2)).unwrap();
        let h = best.fdd_horizon.unwrap();
        let (pm, pp) = (best.error_probability(-1), best.error_probability(1));
        passed &= h > 16 && best.conditioned_spread() < short.conditioned_spread() && pm < pp;
        let tps: Vec<String> = mine
            .iter()
            .map(|r| format!("{}:{:.3}", r.fdd_horizon.unwrap(), r.unconditioned_tp))
            .collect();
        parts.push(format!(
            "{label}: tp [{}], best horizon {h}, std {:.3} vs {:.3} at 2, P(-1) {pm:.3} vs P(+1) {pp:.3}",
            tps.join(" "),
            best.conditioned_spread(),
            short.conditioned_spread()
        ));
    }
    Verdict::new(passed, parts.join("; "))
}

fn c12(ctx: &SweepContext) -> Verdict {
    let mixed: Vec<f64> = (1..=50).map(f64::from).collect();
    let rows = doppler_generalization(ctx, &[WIENER, GRU], &[5.0, 10.0, 20.0], &mixed, 4).unwrap();
    let loss = |kind: PredictorKind, fd: f64| {
        let get = |t: &str| find(&rows, kind, |r| r.doppler_hz == fd && r.training == t).curve.average_db;
        get("mixed") - get("specific")
    };
    let mut gru_ok = true;
    let mut wiener_worse = 0;
    let mut parts = Vec::new();
    for fd in [5.0, 10.0, 20.0] {
        let (g, w) = (loss(GRU, fd), loss(WIENER, fd));
        gru_ok &= g <= 1.5;
        if w > g {
            wiener_worse += 1;
        }
        parts.push(format!("{fd} Hz: gru loss {g:.2} dB, wiener loss {w:.2} dB"));
    }
    Verdict::new(
        gru_ok && wiener_worse >= 2,
        format!("{} [need gru <= 1.5; wiener worse at {wiener_worse}/3, need >= 2]", parts.join("; ")),
    )
}

fn main() -> ExitCode {
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ctx = context();
    type Run = Box<dyn Fn(&SweepContext) -> Verdict>;
    let criteria: Vec<(usize, &str, Run)> = vec![
        (1, "FLOPs exactness", Box::new(|_| verify::check_flops().into())),
        (2, "Wiener AR(1) oracle", Box::new(|_| verify::check_wiener_ar1(0.9, 100_000, 11).into())),
        (3, "ZOH limit", Box::new(|_| verify::check_zoh_limit(0.9, 100_000, 12).into())),
        (4, "gradient checks", Box::new(|_| verify::check_gradients(10, 13, false).into())),
        (5, "EESM properties", Box::new(|_| verify::check_eesm(14).into())),
        (
            6,
            "channel statistics",
            Box::new(|_| verify::check_channel_autocorrelation(&[5.0, 10.0, 20.0], 200_000, 1, 15).into()),
        ),
        (7, "prediction beats ZOH (TDD throughput)", Box::new(c7)),
        (8, "waterfall and product dependence", Box::new(c8)),
        (9, "input-length saturation", Box::new(c9)),
        (10, "target-strategy ordering", Box::new(c10)),
        (11, "FDD horizon", Box::new(c11)),
        (12, "Doppler generalization", Box::new(c12)),
    ];
    let mut unexpected = 0;
    for (id, name, run) in &criteria {
        if !wanted.is_empty() && !wanted.contains(id) {
            continue;
        }
        let start = Instant::now();
        let v = run(&ctx);
        let status = match (v.passed, KNOWN_FAILURES.contains(id)) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as known failure)",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!(
            "criterion {id:2} {status}: {name} ({:.1} s): {}",
            start.elapsed().as_secs_f64(),
            v.detail
        );
    }
    if unexpected > 0 {
        println!("{unexpected} unexpected failure(s)");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
