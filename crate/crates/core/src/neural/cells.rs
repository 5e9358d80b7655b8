//! Forward and reverse passes for the three architectures over a flat
//! parameter vector. Operation counts follow the convention that an affine
//! map with an `r x c` weight matrix (bias folded in) costs `2rc`, each
//! elementwise add or multiply costs one, and activations are free.

use crate::predictor::PredictorKind;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `y[r] = b[r] + sum_c w[r, c] x[c]` for row-major `w`.
#[inline]
fn affine(w: &[f64], b: &[f64], x: &[f64], y: &mut [f64]) {
    let c = x.len();
    for (r, yr) in y.iter_mut().enumerate() {
        let row = &w[r * c..(r + 1) * c];
        *yr = b[r] + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// Adds `w^T dy` into `dx`, and `dy x^T` into `dw`.
#[inline]
fn affine_back(w: &[f64], x: &[f64], dy: &[f64], dw: &mut [f64], dx: Option<&mut [f64]>) {
    let c = x.len();
    for (r, &g) in dy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        for (d, xi) in dw[r * c..(r + 1) * c].iter_mut().zip(x) {
            *d += g * xi;
        }
    }
    if let Some(dx) = dx {
        for (r, &g) in dy.iter().enumerate() {
            for (d, wi) in dx.iter_mut().zip(&w[r * c..(r + 1) * c]) {
                *d += g * wi;
            }
        }
    }
}

/// Offsets of one recurrent gate: input weights `U [D]`, recurrent weights
/// `W [D x D]`, bias `b [D]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Gate {
    u: usize,
    w: usize,
    b: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub kind: PredictorKind,
    pub p: usize,
    pub d: usize,
    pub out: usize,
    gates: Vec<Gate>,
    /// Output projection `[out x D]` and bias `[out]`.
    pub v: usize,
    pub c: usize,
    /// DNN hidden layer `[D x P]` and bias `[D]`.
    pub w1: usize,
    pub b1: usize,
    pub len: usize,
}

impl Layout {
    pub fn new(kind: PredictorKind, p: usize, d: usize, out: usize) -> Self {
        let n_gates = match kind {
            PredictorKind::Gru => 3,
            PredictorKind::Lstm => 4,
            _ => 0,
        };
        let mut at = 0;
        let (w1, b1) = if kind == PredictorKind::Dnn {
            at = d * p + d;
            (0, d * p)
        } else {
            (0, 0)
        };
        let gates = (0..n_gates)
            .map(|_| {
                let g = Gate { u: at, w: at + d, b: at + d + d * d };
                at += d * d + 2 * d;
                g
            })
            .collect();
        let v = at;
        let c = v + out * d;
        Self { kind, p, d, out, gates, v, c, w1, b1, len: c + out }
    }

    /// `(offset, len, fan_in)` of each weight block; biases are the rest.
    pub fn weight_blocks(&self) -> Vec<(usize, usize, usize)> {
        let d = self.d;
        let mut blocks = Vec::new();
        if self.kind == PredictorKind::Dnn {
            blocks.push((self.w1, d * self.p, self.p));
        }
        for g in &self.gates {
            // Input and recurrent weights feed the same pre-activation.
            blocks.push((g.u, d, d + 1));
            blocks.push((g.w, d * d, d + 1));
        }
        blocks.push((self.v, self.out * d, d));
        blocks
    }
}

/// Per-sample activations kept for the reverse pass.
#[derive(Debug, Default, Clone)]
pub(crate) struct Cache {
    /// Sequence inputs, oldest first.
    xs: Vec<f64>,
    /// Hidden states `h_0..h_P` (DNN: the hidden layer only).
    hs: Vec<f64>,
    /// Cell states `c_0..c_P` (LSTM).
    cs: Vec<f64>,
    /// Gate activations per step, `n_gates * D` each.
    acts: Vec<f64>,
    /// GRU `r * h_prev` per step, LSTM `tanh(c)` per step.
    aux: Vec<f64>,
    pub y: Vec<f64>,
}

/// Runs the model, filling `cache`; returns the operation count.
pub(crate) fn forward(l: &Layout, params: &[f64], window: &[f64], cache: &mut Cache) -> u64 {
    let (p, d, out) = (l.p, l.d, l.out);
    cache.y.resize(out, 0.0);
    let mut ops = 0u64;
    match l.kind {
        PredictorKind::Dnn => {
            cache.xs.clear();
            cache.xs.extend_from_slice(window);
            cache.hs.resize(d, 0.0);
            affine(&params[l.w1..l.b1], &params[l.b1..l.b1 + d], window, &mut cache.hs);
            ops += 2 * (d * p) as u64;
            for h in &mut cache.hs {
                *h = h.tanh();
            }
            affine(&params[l.v..l.c], &params[l.c..l.c + out], &cache.hs, &mut cache.y);
            ops += 2 * (out * d) as u64;
            return ops;
        }
        PredictorKind::Gru | PredictorKind::Lstm => {}
        _ => unreachable!("not a neural kind"),
    }
    let ng = l.gates.len();
    cache.xs.clear();
    cache.xs.extend(window.iter().rev());
    cache.hs.clear();
    cache.hs.resize((p + 1) * d, 0.0);
    cache.cs.clear();
    cache.cs.resize((p + 1) * d, 0.0);
    cache.acts.resize(p * ng * d, 0.0);
    cache.aux.resize(p * d, 0.0);
    let mut pre = vec![0.0; d];
    for t in 0..p {
        let x = cache.xs[t];
        let (before, after) = cache.hs.split_at_mut((t + 1) * d);
        let h_prev = &before[t * d..];
        let h_next = &mut after[..d];
        let acts = &mut cache.acts[t * ng * d..(t + 1) * ng * d];
        let aux = &mut cache.aux[t * d..(t + 1) * d];
        // Every gate: U x + W h + b over the concatenated [x; h].
        let gate_pre = |g: &Gate, h: &[f64], pre: &mut [f64]| {
            affine(&params[g.w..g.b], &params[g.b..g.b + d], h, pre);
            for (j, v) in pre.iter_mut().enumerate() {
                *v += params[g.u + j] * x;
            }
        };
        if l.kind == PredictorKind::Gru {
            let (z_g, r_g, h_g) = (&l.gates[0], &l.gates[1], &l.gates[2]);
            gate_pre(z_g, h_prev, &mut pre);
            for j in 0..d {
                acts[j] = sigmoid(pre[j]);
            }
            gate_pre(r_g, h_prev, &mut pre);
            for j in 0..d {
                acts[d + j] = sigmoid(pre[j]);
                aux[j] = acts[d + j] * h_prev[j];
            }
            gate_pre(h_g, aux, &mut pre);
            for j in 0..d {
                let cand = pre[j].tanh();
                acts[2 * d + j] = cand;
                let z = acts[j];
                h_next[j] = (1.0 - z) * h_prev[j] + z * cand;
            }
            ops += 3 * (2 * d * (d + 1)) as u64 + d as u64 + 4 * d as u64;
        } else {
            for (k, g) in l.gates.iter().enumerate() {
                gate_pre(g, h_prev, &mut pre);
                for j in 0..d {
                    acts[k * d + j] = if k == 3 { pre[j].tanh() } else { sigmoid(pre[j]) };
                }
            }
            let (cb, ca) = cache.cs.split_at_mut((t + 1) * d);
            let c_prev = &cb[t * d..];
            let c_next = &mut ca[..d];
            for j in 0..d {
                let (i, f, o, g) = (acts[j], acts[d + j], acts[2 * d + j], acts[3 * d + j]);
                c_next[j] = f * c_prev[j] + i * g;
                aux[j] = c_next[j].tanh();
                h_next[j] = o * aux[j];
            }
            ops += 4 * (2 * d * (d + 1)) as u64 + 4 * d as u64;
        }
    }
    let h_last = &cache.hs[p * d..];
    affine(&params[l.v..l.c], &params[l.c..l.c + out], h_last, &mut cache.y);
    ops += 2 * (out * d) as u64;
    ops
}

/// Accumulates parameter gradients for upstream gradient `dy` into `grad`.
pub(crate) fn backward(l: &Layout, params: &[f64], cache: &Cache, dy: &[f64], grad: &mut [f64]) {
    let (p, d) = (l.p, l.d);
    for (k, g) in dy.iter().enumerate() {
        grad[l.c + k] += g;
    }
    let h_last = match l.kind {
        PredictorKind::Dnn => &cache.hs[..d],
        _ => &cache.hs[p * d..],
    };
    let mut dh = vec![0.0; d];
    affine_back(&params[l.v..l.c], h_last, dy, &mut grad[l.v..l.c], Some(&mut dh));
    if l.kind == PredictorKind::Dnn {
        let da: Vec<f64> = dh.iter().zip(&cache.hs).map(|(g, h)| g * (1.0 - h * h)).collect();
        for (j, g) in da.iter().enumerate() {
            grad[l.b1 + j] += g;
        }
        affine_back(&params[l.w1..l.b1], &cache.xs, &da, &mut grad[l.w1..l.b1], None);
        return;
    }
    let ng = l.gates.len();
    let mut dh_prev = vec![0.0; d];
    let mut dc = vec![0.0; d];
    let mut dc_prev = vec![0.0; d];
    let mut da = vec![0.0; ng * d];
    for t in (0..p).rev() {
        let x = cache.xs[t];
        let h_prev = &cache.hs[t * d..(t + 1) * d];
        let acts = &cache.acts[t * ng * d..(t + 1) * ng * d];
        let aux = &cache.aux[t * d..(t + 1) * d];
        dh_prev.iter_mut().for_each(|v| *v = 0.0);
        if l.kind == PredictorKind::Gru {
            let h_g = l.gates[2];
            // Candidate path first: it determines dr.
            let mut d_rh = vec![0.0; d];
            for j in 0..d {
                let (z, cand) = (acts[j], acts[2 * d + j]);
                dh_prev[j] += dh[j] * (1.0 - z);
                da[j] = dh[j] * (cand - h_prev[j]) * z * (1.0 - z);
                da[2 * d + j] = dh[j] * z * (1.0 - cand * cand);
            }
            gate_back(params, grad, &h_g, d, x, aux, &da[2 * d..], &mut d_rh);
            for j in 0..d {
                let r = acts[d + j];
                dh_prev[j] += d_rh[j] * r;
                da[d + j] = d_rh[j] * h_prev[j] * r * (1.0 - r);
            }
            let (z_g, r_g) = (l.gates[0], l.gates[1]);
            gate_back(params, grad, &z_g, d, x, h_prev, &da[..d], &mut dh_prev);
            gate_back(params, grad, &r_g, d, x, h_prev, &da[d..2 * d], &mut dh_prev);
        } else {
            let c_prev = &cache.cs[t * d..(t + 1) * d];
            for j in 0..d {
                let (i, f, o, g) = (acts[j], acts[d + j], acts[2 * d + j], acts[3 * d + j]);
                let tc = aux[j];
                let dcj = dc[j] + dh[j] * o * (1.0 - tc * tc);
                da[j] = dcj * g * i * (1.0 - i);
                da[d + j] = dcj * c_prev[j] * f * (1.0 - f);
                da[2 * d + j] = dh[j] * tc * o * (1.0 - o);
                da[3 * d + j] = dcj * i * (1.0 - g * g);
                dc_prev[j] = dcj * f;
            }
            for (k, gate) in l.gates.iter().enumerate() {
                gate_back(params, grad, gate, d, x, h_prev, &da[k * d..(k + 1) * d], &mut dh_prev);
            }
            std::mem::swap(&mut dc, &mut dc_prev);
        }
        std::mem::swap(&mut dh, &mut dh_prev);
    }
}

/// Reverse pass through `U x + W h + b` for one gate.
#[allow(clippy::too_many_arguments)]
fn gate_back(
    params: &[f64],
    grad: &mut [f64],
    g: &Gate,
    d: usize,
    x: f64,
    h: &[f64],
    da: &[f64],
    dh: &mut [f64],
) {
    for j in 0..d {
        grad[g.u + j] += da[j] * x;
        grad[g.b + j] += da[j];
    }
    affine_back(&params[g.w..g.b], h, da, &mut grad[g.w..g.b], Some(dh));
}
