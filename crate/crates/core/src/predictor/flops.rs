use super::spec::{PredictionMode, PredictorKind, PredictorSpec, TargetStrategy};

/// Floating-point operations for one prediction step of a single track.
///
/// A multiply-accumulate counts as two operations; activations are free.
pub fn flops_single(kind: PredictorKind, p: u64, d: u64, outputs: u64) -> u64 {
    match kind {
        PredictorKind::Zoh => 0,
        PredictorKind::Wiener => outputs * (2 * p - 1),
        PredictorKind::Dnn => 2 * d * (p + outputs),
        // Four gates at 2D^2 + 2D each, plus the cell and output updates.
        PredictorKind::Lstm => p * (8 * d * d + 12 * d) + 2 * d * outputs,
        // Three gates at 2D^2 + 2D each (plus D for the reset product), plus
        // the interpolating state update.
        PredictorKind::Gru => p * (6 * d * d + 11 * d) + 2 * d * outputs,
    }
}

/// Operations per report instant for `spec`, across all predicted tracks.
pub fn flops(spec: &PredictorSpec) -> u64 {
    let outputs = match spec.mode {
        PredictionMode::TddVector => spec.t_csi as u64 - 1,
        PredictionMode::FddScalar { .. } => 1,
    };
    let tracks = match spec.target {
        TargetStrategy::BestCqi => 1,
        TargetStrategy::ByCqi => crate::eesm::N_CQI as u64,
    };
    tracks * flops_single(spec.kind, spec.input_len as u64, spec.hidden as u64, outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_counts() {
        let gru = PredictorSpec::tdd(PredictorKind::Gru, 4, 16, 4);
        assert_eq!(flops(&gru), 6944);
        assert_eq!(flops(&gru.by_cqi()), 15 * 6944);
        let lstm = PredictorSpec::tdd(PredictorKind::Lstm, 4, 16, 4);
        assert_eq!(flops(&lstm), 9056);
        let dnn = PredictorSpec::tdd(PredictorKind::Dnn, 4, 16, 4);
        assert_eq!(flops(&dnn), 224);
        let w = PredictorSpec::tdd(PredictorKind::Wiener, 4, 0, 4);
        assert_eq!(flops(&w), 21);
        assert_eq!(flops(&w.by_cqi()), 315);
        assert_eq!(flops(&PredictorSpec::tdd(PredictorKind::Zoh, 4, 0, 4)), 0);
    }

    #[test]
    fn fdd_has_one_output() {
        let s = PredictorSpec::fdd(PredictorKind::Wiener, 4, 0, 4, 3);
        assert_eq!(flops(&s), 7);
    }
}
