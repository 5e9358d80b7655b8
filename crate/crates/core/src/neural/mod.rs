//! Dense, GRU and LSTM predictors with hand-written reverse-mode gradients.

mod cells;
mod train;

use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::predictor::PredictorKind;
use cells::{Cache, Layout};

pub use train::{train, Adam, EpochLoss, LossHistory, TrainConfig, TrainSet};

/// A single-hidden-layer network over a flat parameter vector.
///
/// Parameter order:
/// - DNN: `W1 [D x P]`, `b1 [D]`, `V [out x D]`, `c [out]`.
/// - GRU: update, reset and candidate gates, each `U [D]`, `W [D x D]`,
///   `b [D]`; then `V`, `c`.
/// - LSTM: input, forget, output and candidate gates in the same per-gate
///   layout; then `V`, `c`.
///
/// Matrices are row-major. Recurrent kinds read the window oldest sample
/// first, starting from zero state.
#[derive(Debug, Clone)]
pub struct NeuralModel {
    layout: Layout,
    pub seed: u64,
    params: Vec<f64>,
}

impl PartialEq for NeuralModel {
    fn eq(&self, other: &Self) -> bool {
        self.kind() == other.kind()
            && self.input_len() == other.input_len()
            && self.hidden() == other.hidden()
            && self.output_len() == other.output_len()
            && self.params == other.params
    }
}

impl NeuralModel {
    /// Uniform `+-1/sqrt(fan_in)` weights, zero biases.
    pub fn new(kind: PredictorKind, input_len: usize, hidden: usize, output_len: usize, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(kind, input_len, hidden, output_len)?;
        m.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (off, len, fan_in) in m.layout.weight_blocks() {
            let a = 1.0 / (fan_in as f64).sqrt();
            for w in &mut m.params[off..off + len] {
                *w = rng.gen_range(-a..=a);
            }
        }
        Ok(m)
    }

    pub fn zeros(kind: PredictorKind, input_len: usize, hidden: usize, output_len: usize) -> Result<Self> {
        if !kind.is_neural() {
            return Err(Error::Config(format!("{kind} is not a neural predictor")));
        }
        if input_len == 0 || hidden == 0 || output_len == 0 {
            return Err(Error::Config("network dimensions must be >= 1".into()));
        }
        let layout = Layout::new(kind, input_len, hidden, output_len);
        Ok(Self {
            params: vec![0.0; layout.len],
            layout,
            seed: 0,
        })
    }

    pub fn kind(&self) -> PredictorKind {
        self.layout.kind
    }

    pub fn input_len(&self) -> usize {
        self.layout.p
    }

    pub fn hidden(&self) -> usize {
        self.layout.d
    }

    pub fn output_len(&self) -> usize {
        self.layout.out
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::Domain(format!(
                "expected {} parameters, got {}",
                self.params.len(),
                params.len()
            )));
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn check_window(&self, window: &[f64]) -> Result<()> {
        if window.len() != self.input_len() {
            return Err(Error::Domain(format!(
                "window has {} samples, model expects {}",
                window.len(),
                self.input_len()
            )));
        }
        Ok(())
    }

    /// Prediction for a most-recent-first window.
    pub fn forward(&self, window: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_counted(window)?.0)
    }

    /// Prediction plus the number of arithmetic operations it took.
    pub fn forward_counted(&self, window: &[f64]) -> Result<(Vec<f64>, u64)> {
        self.check_window(window)?;
        let mut cache = Cache::default();
        let ops = cells::forward(&self.layout, &self.params, window, &mut cache);
        Ok((cache.y, ops))
    }

    /// Mean squared error over all samples and outputs, and its gradient.
    ///
    /// `inputs` and `targets` hold `n` rows of `P` and `out` values.
    pub fn loss_and_gradient(&self, inputs: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.accumulate(inputs, targets, &mut grad, &mut Cache::default())?;
        Ok((loss, grad))
    }

    /// Writes the mean gradient into `grad` (overwriting) and returns the loss.
    pub(crate) fn accumulate(&self, inputs: &[f64], targets: &[f64], grad: &mut [f64], cache: &mut Cache) -> Result<f64> {
        let (p, out) = (self.input_len(), self.output_len());
        if inputs.len() % p != 0 || targets.len() != inputs.len() / p * out || inputs.is_empty() {
            return Err(Error::Domain("batch shape does not match the model".into()));
        }
        let n = inputs.len() / p;
        let scale = 2.0 / (n * out) as f64;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut sse = 0.0;
        let mut dy = vec![0.0; out];
        for s in 0..n {
            cells::forward(&self.layout, &self.params, &inputs[s * p..(s + 1) * p], cache);
            for k in 0..out {
                let e = cache.y[k] - targets[s * out + k];
                sse += e * e;
                dy[k] = scale * e;
            }
            cells::backward(&self.layout, &self.params, cache, &dy, grad);
        }
        let loss = sse / (n * out) as f64;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Domain("non-finite loss or gradient".into()));
        }
        Ok(loss)
    }

    /// Mean squared error without gradients.
    pub fn evaluate(&self, inputs: &[f64], targets: &[f64]) -> Result<f64> {
        let (p, out) = (self.input_len(), self.output_len());
        if inputs.len() % p != 0 || targets.len() != inputs.len() / p * out || inputs.is_empty() {
            return Err(Error::Domain("batch shape does not match the model".into()));
        }
        let n = inputs.len() / p;
        let mut cache = Cache::default();
        let mut sse = 0.0;
        for s in 0..n {
            cells::forward(&self.layout, &self.params, &inputs[s * p..(s + 1) * p], &mut cache);
            sse += cache.y.iter().zip(&targets[s * out..(s + 1) * out]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        Ok(sse / (n * out) as f64)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "csi-predict-net\nkind {}\ninput_len {}\nhidden {}\noutput_len {}\nseed {}\nparams {}\n",
            self.kind(),
            self.input_len(),
            self.hidden(),
            self.output_len(),
            self.seed,
            self.params.len()
        );
        for v in &self.params {
            s.push_str(&format!("{v:e}\n"));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse(format!("network checkpoint: {what}"));
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("csi-predict-net") {
            return Err(bad("missing header"));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(&format!("missing {key}")))?;
            line.strip_prefix(key)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| bad(&format!("expected {key}")))
        };
        let kind: PredictorKind = field("kind")?.parse()?;
        let num = |v: String| v.parse::<u64>().map_err(|_| bad("bad number"));
        let p = num(field("input_len")?)? as usize;
        let d = num(field("hidden")?)? as usize;
        let out = num(field("output_len")?)? as usize;
        let seed = num(field("seed")?)?;
        let count = num(field("params")?)? as usize;
        let values = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.trim().parse::<f64>().map_err(|_| bad("bad parameter")))
            .collect::<Result<Vec<_>>>()?;
        let mut m = Self::zeros(kind, p, d, out)?;
        if values.len() != count || count != m.params.len() {
            return Err(bad(&format!(
                "{} parameters stored, {} declared, {} expected",
                values.len(),
                count,
                m.params.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(bad("non-finite parameter"));
        }
        m.params = values;
        m.seed = seed;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let load_err = |detail: String| Error::Load {
            path: path.to_path_buf(),
            detail,
        };
        let text = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        Self::from_text(&text).map_err(|e| load_err(e.to_string()))
    }
}

/// Mean squared error over matching vectors.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(Error::Domain("prediction and target shapes differ".into()));
    }
    let sse: f64 = predictions.iter().zip(targets).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sse / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{flops_single, PredictorKind::*};

    fn rand_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn zero_parameters_give_zero_output() {
        for kind in [Dnn, Gru, Lstm] {
            let m = NeuralModel::zeros(kind, 4, 5, 3).unwrap();
            assert_eq!(m.forward(&[0.3, -1.2, 2.0, 0.5]).unwrap(), vec![0.0; 3]);
        }
    }

    #[test]
    fn dnn_hand_computed() {
        // P=2, D=2, out=1: hidden = tanh(b1) since W1 = 0.
        let mut m = NeuralModel::zeros(Dnn, 2, 2, 1).unwrap();
        m.params_mut().copy_from_slice(&[0.0, 0.0, 0.0, 0.0, 0.5, -0.25, 1.0, 2.0, 0.1]);
        let y = m.forward(&[7.0, -3.0]).unwrap()[0];
        let expect = 0.5f64.tanh() + 2.0 * (-0.25f64).tanh() + 0.1;
        assert!((y - expect).abs() < 1e-15);
    }

    #[test]
    fn same_seed_same_model() {
        for kind in [Dnn, Gru, Lstm] {
            let a = NeuralModel::new(kind, 4, 8, 3, 11).unwrap();
            let b = NeuralModel::new(kind, 4, 8, 3, 11).unwrap();
            let c = NeuralModel::new(kind, 4, 8, 3, 12).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn loss_examples() {
        assert_eq!(mse_loss(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[1.0], &[0.0]).unwrap(), 1.0);
        assert_eq!(mse_loss(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 2.5);
        assert!(mse_loss(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn wrong_window_is_a_domain_error() {
        let m = NeuralModel::new(Gru, 4, 3, 1, 0).unwrap();
        assert!(matches!(m.forward(&[1.0; 3]), Err(Error::Domain(_))));
    }

    fn check_gradient(kind: PredictorKind, p: usize, d: usize, out: usize, seed: u64, tol: f64) {
        let mut m = NeuralModel::new(kind, p, d, out, seed).unwrap();
        // Nonzero biases exercise every path.
        let np = m.params().len();
        let noise = rand_vec(np, seed + 100);
        for (w, n) in m.params_mut().iter_mut().zip(noise) {
            *w += 0.3 * n;
        }
        let n = 3;
        let x = rand_vec(n * p, seed + 1);
        let y = rand_vec(n * out, seed + 2);
        let (_, g) = m.loss_and_gradient(&x, &y).unwrap();
        let h = 1e-5;
        for i in 0..np {
            let orig = m.params()[i];
            m.params_mut()[i] = orig + h;
            let lp = m.evaluate(&x, &y).unwrap();
            m.params_mut()[i] = orig - h;
            let lm = m.evaluate(&x, &y).unwrap();
            m.params_mut()[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            let err = (g[i] - fd).abs() / g[i].abs().max(1.0);
            assert!(err < tol, "{kind} param {i}: analytic {} fd {fd}", g[i]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        check_gradient(Dnn, 1, 1, 1, 3, 1e-6);
        check_gradient(Dnn, 4, 5, 3, 4, 1e-4);
        check_gradient(Gru, 3, 2, 1, 5, 1e-4);
        check_gradient(Gru, 4, 4, 3, 6, 1e-4);
        check_gradient(Lstm, 3, 2, 1, 7, 1e-4);
        check_gradient(Lstm, 4, 4, 3, 8, 1e-4);
    }

    #[test]
    fn zero_dnn_zero_data_has_zero_gradient() {
        let m = NeuralModel::zeros(Dnn, 3, 4, 2).unwrap();
        let (l, g) = m.loss_and_gradient(&[0.0; 6], &[0.0; 4]).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn counted_operations_match_closed_form() {
        for kind in [Dnn, Gru, Lstm] {
            for (p, d, out) in [(4, 16, 3), (1, 1, 1), (8, 32, 1), (3, 7, 15)] {
                let m = NeuralModel::new(kind, p, d, out, 0).unwrap();
                let (_, ops) = m.forward_counted(&vec![0.1; p]).unwrap();
                assert_eq!(ops, flops_single(kind, p as u64, d as u64, out as u64), "{kind} {p} {d} {out}");
            }
        }
    }

    #[test]
    fn batch_loss_is_permutation_invariant() {
        let m = NeuralModel::new(Lstm, 3, 4, 2, 9).unwrap();
        let x = rand_vec(30, 1);
        let y = rand_vec(20, 2);
        let mut xr = Vec::new();
        let mut yr = Vec::new();
        for s in (0..10).rev() {
            xr.extend_from_slice(&x[s * 3..s * 3 + 3]);
            yr.extend_from_slice(&y[s * 2..s * 2 + 2]);
        }
        let a = m.evaluate(&x, &y).unwrap();
        let b = m.evaluate(&xr, &yr).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = NeuralModel::new(Gru, 4, 6, 3, 42).unwrap();
        let back = NeuralModel::from_text(&m.to_text()).unwrap();
        assert_eq!(m, back);
        assert_eq!(back.seed, 42);
        let truncated: String = m.to_text().lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(NeuralModel::from_text(&truncated).is_err());
    }
}
