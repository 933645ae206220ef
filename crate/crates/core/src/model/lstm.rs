//! Bidirectional single-layer LSTM with a linear tag projection, plus
//! hand-written backpropagation through time.
//!
//! Gate weights of one direction are stacked row-wise in the order
//! input, forget, output, candidate; each block is `H x (H + F)` and
//! multiplies the concatenation `[h_prev, x]`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FeatureSequence;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Output = 2,
    Candidate = 3,
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Weights of one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionParams {
    pub hidden: usize,
    pub input_dim: usize,
    /// `4H x (H + F)`, row-major.
    pub w: Vec<f64>,
    /// `4H`.
    pub b: Vec<f64>,
}

impl DirectionParams {
    pub fn zeros(hidden: usize, input_dim: usize) -> Self {
        DirectionParams {
            hidden,
            input_dim,
            w: vec![0.0; 4 * hidden * (hidden + input_dim)],
            b: vec![0.0; 4 * hidden],
        }
    }

    fn cols(&self) -> usize {
        self.hidden + self.input_dim
    }

    /// The `H x (H + F)` block of one gate.
    pub fn gate_weights(&self, g: Gate) -> &[f64] {
        let block = self.hidden * self.cols();
        &self.w[g as usize * block..(g as usize + 1) * block]
    }

    pub fn gate_weights_mut(&mut self, g: Gate) -> &mut [f64] {
        let block = self.hidden * self.cols();
        &mut self.w[g as usize * block..(g as usize + 1) * block]
    }

    pub fn gate_bias(&self, g: Gate) -> &[f64] {
        &self.b[g as usize * self.hidden..(g as usize + 1) * self.hidden]
    }

    pub fn gate_bias_mut(&mut self, g: Gate) -> &mut [f64] {
        let h = self.hidden;
        &mut self.b[g as usize * h..(g as usize + 1) * h]
    }

    /// One time step. `gates` receives the activated `[i, f, o, c~]`
    /// (length 4H); `h` and `c` receive the new state.
    #[inline]
    fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64], gates: &mut [f64], h: &mut [f64], c: &mut [f64]) {
        let hd = self.hidden;
        let cols = self.cols();
        for (r, g) in gates.iter_mut().enumerate() {
            let row = &self.w[r * cols..(r + 1) * cols];
            let (wh, wx) = row.split_at(hd);
            let mut acc = self.b[r];
            for (a, b) in wh.iter().zip(h_prev) {
                acc += a * b;
            }
            for (a, b) in wx.iter().zip(x) {
                acc += a * b;
            }
            *g = acc;
        }
        for k in 0..hd {
            let i = sigmoid(gates[k]);
            let f = sigmoid(gates[hd + k]);
            let o = sigmoid(gates[2 * hd + k]);
            let cc = gates[3 * hd + k].tanh();
            gates[k] = i;
            gates[hd + k] = f;
            gates[2 * hd + k] = o;
            gates[3 * hd + k] = cc;
            c[k] = f * c_prev[k] + i * cc;
            h[k] = o * c[k].tanh();
        }
    }
}

/// One LSTM step: returns `(h_t, c_t)`.
pub fn lstm_cell(
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
    p: &DirectionParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len(p.input_dim, x.len())?;
    check_len(p.hidden, h_prev.len())?;
    check_len(p.hidden, c_prev.len())?;
    let mut gates = vec![0.0; 4 * p.hidden];
    let mut h = vec![0.0; p.hidden];
    let mut c = vec![0.0; p.hidden];
    p.step(x, h_prev, c_prev, &mut gates, &mut h, &mut c);
    Ok((h, c))
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub n_classes: usize,
    pub fwd: DirectionParams,
    pub bwd: DirectionParams,
    /// `n_classes x 2H`, row-major; columns `0..H` read the forward state.
    pub w_tag: Vec<f64>,
    pub b_tag: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden: usize, n_classes: usize) -> Self {
        LstmParams {
            input_dim,
            hidden,
            n_classes,
            fwd: DirectionParams::zeros(hidden, input_dim),
            bwd: DirectionParams::zeros(hidden, input_dim),
            w_tag: vec![0.0; n_classes * 2 * hidden],
            b_tag: vec![0.0; n_classes],
        }
    }

    /// Uniform in `[-1/sqrt(H), 1/sqrt(H)]` for every tensor.
    pub fn init(input_dim: usize, hidden: usize, n_classes: usize, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(input_dim, hidden, n_classes);
        let k = 1.0 / (hidden as f64).sqrt();
        for t in p.tensors_mut() {
            for v in t.iter_mut() {
                *v = rng.random_range(-k..=k);
            }
        }
        p
    }

    pub fn tensors(&self) -> [&Vec<f64>; 6] {
        [&self.fwd.w, &self.fwd.b, &self.bwd.w, &self.bwd.b, &self.w_tag, &self.b_tag]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.fwd.w,
            &mut self.fwd.b,
            &mut self.bwd.w,
            &mut self.bwd.b,
            &mut self.w_tag,
            &mut self.b_tag,
        ]
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim, self.hidden, self.n_classes)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    /// Checks internal consistency of all tensor shapes.
    pub fn validate(&self) -> Result<()> {
        let (h, f, n) = (self.hidden, self.input_dim, self.n_classes);
        if h == 0 || n == 0 {
            return Err(Error::InvalidConfig("hidden size and class count must be >= 1".into()));
        }
        for d in [&self.fwd, &self.bwd] {
            check_len(h, d.hidden)?;
            check_len(f, d.input_dim)?;
            check_len(4 * h * (h + f), d.w.len())?;
            check_len(4 * h, d.b.len())?;
        }
        check_len(n * 2 * h, self.w_tag.len())?;
        check_len(n, self.b_tag.len())?;
        if !self.is_finite() {
            return Err(Error::Numeric("parameters contain non-finite values".into()));
        }
        Ok(())
    }

    /// Squared L2 norm over all tensors.
    pub fn norm_sq(&self) -> f64 {
        self.tensors().iter().flat_map(|t| t.iter()).map(|v| v * v).sum()
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

/// Activations of one direction over the real rows of a chunk, indexed
/// in processing order.
struct DirCache {
    gates: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
}

fn run_direction(p: &DirectionParams, rows: &[Vec<f64>], reverse: bool) -> DirCache {
    let hd = p.hidden;
    let t_len = rows.len();
    let mut cache = DirCache {
        gates: vec![0.0; t_len * 4 * hd],
        c: vec![0.0; t_len * hd],
        h: vec![0.0; t_len * hd],
    };
    let zeros = vec![0.0; hd];
    for s in 0..t_len {
        let t = if reverse { t_len - 1 - s } else { s };
        let (h_done, h_rest) = cache.h.split_at_mut(s * hd);
        let (c_done, c_rest) = cache.c.split_at_mut(s * hd);
        let (h_prev, c_prev) = if s == 0 {
            (&zeros[..], &zeros[..])
        } else {
            (&h_done[(s - 1) * hd..], &c_done[(s - 1) * hd..])
        };
        p.step(
            &rows[t],
            h_prev,
            c_prev,
            &mut cache.gates[s * 4 * hd..(s + 1) * 4 * hd],
            &mut h_rest[..hd],
            &mut c_rest[..hd],
        );
    }
    cache
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardPass {
    valid: usize,
    fwd: DirCache,
    bwd: DirCache,
    /// `valid x 2H` post-dropout features fed to the projection.
    feats: Vec<f64>,
    /// `valid x 2H` dropout multipliers (0 or 1/(1-p)); empty when off.
    drop: Vec<f64>,
    /// `chunk_len x n` scores.
    pub scores: Vec<Vec<f64>>,
}

fn check_chunk(seq: &FeatureSequence, p: &LstmParams) -> Result<usize> {
    let n = seq.mask.len();
    check_len(n, seq.features.len())?;
    check_len(n, seq.labels.len())?;
    let valid = seq.valid_len();
    if seq.mask[valid..].iter().any(|&m| m) {
        return Err(Error::InvalidConfig("mask must mark a prefix of real rows".into()));
    }
    for row in &seq.features {
        check_len(p.input_dim, row.len())?;
    }
    Ok(valid)
}

/// Forward pass over the real rows of `seq`. With `dropout = Some((p,
/// rng))` inverted dropout is applied to the concatenated states.
/// Padded rows score `b_tag` and never influence real rows.
pub fn forward_pass(
    seq: &FeatureSequence,
    params: &LstmParams,
    dropout: Option<(f64, &mut Rng)>,
) -> Result<ForwardPass> {
    let valid = check_chunk(seq, params)?;
    let rows = &seq.features[..valid];
    let hd = params.hidden;
    let nc = params.n_classes;
    let fwd = run_direction(&params.fwd, rows, false);
    let bwd = run_direction(&params.bwd, rows, true);

    let mut feats = vec![0.0; valid * 2 * hd];
    for t in 0..valid {
        let out = &mut feats[t * 2 * hd..(t + 1) * 2 * hd];
        out[..hd].copy_from_slice(&fwd.h[t * hd..(t + 1) * hd]);
        let s = valid - 1 - t;
        out[hd..].copy_from_slice(&bwd.h[s * hd..(s + 1) * hd]);
    }
    let mut drop = Vec::new();
    if let Some((p, rng)) = dropout {
        if p > 0.0 {
            let keep = 1.0 / (1.0 - p);
            drop = (0..feats.len())
                .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
                .collect();
            feats.iter_mut().zip(&drop).for_each(|(f, d)| *f *= d);
        }
    }

    let mut scores = vec![params.b_tag.clone(); seq.mask.len()];
    for (t, row) in scores.iter_mut().enumerate().take(valid) {
        let x = &feats[t * 2 * hd..(t + 1) * 2 * hd];
        for (k, s) in row.iter_mut().enumerate() {
            let w = &params.w_tag[k * 2 * hd..(k + 1) * 2 * hd];
            *s += w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }
    debug_assert_eq!(scores.first().map_or(nc, Vec::len), nc);
    Ok(ForwardPass {
        valid,
        fwd,
        bwd,
        feats,
        drop,
        scores,
    })
}

/// `chunk_len x n_classes` tag scores with dropout off.
pub fn forward(seq: &FeatureSequence, params: &LstmParams) -> Result<Vec<Vec<f64>>> {
    Ok(forward_pass(seq, params, None)?.scores)
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

/// `-log softmax(scores)[label]`, computed stably.
pub fn cross_entropy(scores: &[f64], label: usize) -> f64 {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    lse - scores[label]
}

/// Sum of (weighted) cross-entropy over labeled rows and the sum of the
/// weights, so callers can form means across chunks.
pub fn chunk_loss(scores: &[Vec<f64>], seq: &FeatureSequence, weights: Option<&[f64]>) -> (f64, f64) {
    let mut total = 0.0;
    let mut norm = 0.0;
    for (t, y) in seq.labeled() {
        let w = weights.map_or(1.0, |w| w[y]);
        total += w * cross_entropy(&scores[t], y);
        norm += w;
    }
    (total, norm)
}

fn backward_direction(
    p: &DirectionParams,
    g: &mut DirectionParams,
    cache: &DirCache,
    rows: &[Vec<f64>],
    dh_out: &[f64],
    reverse: bool,
) {
    let hd = p.hidden;
    let cols = p.cols();
    let t_len = rows.len();
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let mut dz = vec![0.0; 4 * hd];
    let zeros = vec![0.0; hd];
    for s in (0..t_len).rev() {
        let t = if reverse { t_len - 1 - s } else { s };
        let gates = &cache.gates[s * 4 * hd..(s + 1) * 4 * hd];
        let c = &cache.c[s * hd..(s + 1) * hd];
        let (h_prev, c_prev) = if s == 0 {
            (&zeros[..], &zeros[..])
        } else {
            (&cache.h[(s - 1) * hd..s * hd], &cache.c[(s - 1) * hd..s * hd])
        };
        for k in 0..hd {
            let i = gates[k];
            let f = gates[hd + k];
            let o = gates[2 * hd + k];
            let cc = gates[3 * hd + k];
            let tc = c[k].tanh();
            let dh = dh_out[s * hd + k] + dh_next[k];
            let dc = dh * o * (1.0 - tc * tc) + dc_next[k];
            dz[k] = dc * cc * i * (1.0 - i);
            dz[hd + k] = dc * c_prev[k] * f * (1.0 - f);
            dz[2 * hd + k] = dh * tc * o * (1.0 - o);
            dz[3 * hd + k] = dc * i * (1.0 - cc * cc);
            dc_next[k] = dc * f;
        }
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        let x = &rows[t];
        for (r, &d) in dz.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            g.b[r] += d;
            let grow = &mut g.w[r * cols..(r + 1) * cols];
            let prow = &p.w[r * cols..(r + 1) * cols];
            let (gh, gx) = grow.split_at_mut(hd);
            for (gv, hv) in gh.iter_mut().zip(h_prev) {
                *gv += d * hv;
            }
            for (gv, xv) in gx.iter_mut().zip(x) {
                *gv += d * xv;
            }
            for (dn, pv) in dh_next.iter_mut().zip(&prow[..hd]) {
                *dn += d * pv;
            }
        }
    }
}

/// Gradient of `scale * sum_t w_{y_t} * CE_t` with respect to all
/// parameters, accumulated into `grad`.
pub fn backward(
    seq: &FeatureSequence,
    params: &LstmParams,
    pass: &ForwardPass,
    weights: Option<&[f64]>,
    scale: f64,
    grad: &mut LstmParams,
) {
    let hd = params.hidden;
    let nc = params.n_classes;
    let valid = pass.valid;
    let mut dfeat = vec![0.0; valid * 2 * hd];
    for (t, y) in seq.labeled() {
        let w = weights.map_or(1.0, |w| w[y]) * scale;
        let mut ds = softmax(&pass.scores[t]);
        ds[y] -= 1.0;
        let x = &pass.feats[t * 2 * hd..(t + 1) * 2 * hd];
        let df = &mut dfeat[t * 2 * hd..(t + 1) * 2 * hd];
        for k in 0..nc {
            let d = ds[k] * w;
            grad.b_tag[k] += d;
            let gw = &mut grad.w_tag[k * 2 * hd..(k + 1) * 2 * hd];
            let pw = &params.w_tag[k * 2 * hd..(k + 1) * 2 * hd];
            for j in 0..2 * hd {
                gw[j] += d * x[j];
                df[j] += d * pw[j];
            }
        }
    }
    if !pass.drop.is_empty() {
        dfeat.iter_mut().zip(&pass.drop).for_each(|(d, m)| *d *= m);
    }
    // split into per-direction, processing-ordered state gradients
    let mut dh_f = vec![0.0; valid * hd];
    let mut dh_b = vec![0.0; valid * hd];
    for t in 0..valid {
        dh_f[t * hd..(t + 1) * hd].copy_from_slice(&dfeat[t * 2 * hd..t * 2 * hd + hd]);
        let s = valid - 1 - t;
        dh_b[s * hd..(s + 1) * hd].copy_from_slice(&dfeat[t * 2 * hd + hd..(t + 1) * 2 * hd]);
    }
    let rows = &seq.features[..valid];
    backward_direction(&params.fwd, &mut grad.fwd, &pass.fwd, rows, &dh_f, false);
    backward_direction(&params.bwd, &mut grad.bwd, &pass.bwd, rows, &dh_b, true);
}

/// Mean cross-entropy over labeled rows of one chunk with dropout off,
/// and its analytic gradient. Chunks without labeled rows give zero.
pub fn loss_and_grad(seq: &FeatureSequence, params: &LstmParams) -> Result<(f64, LstmParams)> {
    let pass = forward_pass(seq, params, None)?;
    let (total, norm) = chunk_loss(&pass.scores, seq, None);
    let mut grad = params.zeros_like();
    if norm == 0.0 {
        return Ok((0.0, grad));
    }
    backward(seq, params, &pass, None, 1.0 / norm, &mut grad);
    Ok((total / norm, grad))
}

fn chunk_mean_loss(seq: &FeatureSequence, params: &LstmParams) -> Result<f64> {
    let scores = forward(seq, params)?;
    let (t, n) = chunk_loss(&scores, seq, None);
    Ok(if n == 0.0 { 0.0 } else { t / n })
}

/// Relative error `|a - n| / max(|a|, |n|, 1e-6)` between analytic and
/// central finite-difference gradients, maximized over every parameter.
pub fn gradient_check(params: &LstmParams, seq: &FeatureSequence, epsilon: f64) -> Result<f64> {
    params.validate()?;
    let (_, grad) = loss_and_grad(seq, params)?;
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for ti in 0..6 {
        for j in 0..params.tensors()[ti].len() {
            let orig = params.tensors()[ti][j];
            probe.tensors_mut()[ti][j] = orig + epsilon;
            let plus = chunk_mean_loss(seq, &probe)?;
            probe.tensors_mut()[ti][j] = orig - epsilon;
            let minus = chunk_mean_loss(seq, &probe)?;
            probe.tensors_mut()[ti][j] = orig;
            let numeric = (plus - minus) / (2.0 * epsilon);
            let analytic = grad.tensors()[ti][j];
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn seq(rows: Vec<Vec<f64>>, labels: Vec<Option<usize>>, valid: usize) -> FeatureSequence {
        let n = rows.len();
        FeatureSequence {
            features: rows,
            labels,
            mask: (0..n).map(|i| i < valid).collect(),
        }
    }

    fn random_seq(r: &mut Rng, t: usize, f: usize, classes: usize) -> FeatureSequence {
        let rows = (0..t).map(|_| (0..f).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let labels = (0..t).map(|_| Some(r.random_range(0..classes))).collect();
        seq(rows, labels, t)
    }

    #[test]
    fn zero_params_half_gates() {
        let p = DirectionParams::zeros(3, 2);
        let (h, c) = lstm_cell(&[1.0, -2.0], &[0.3; 3], &[0.0; 3], &p).unwrap();
        assert_eq!(h, vec![0.0; 3]);
        assert_eq!(c, vec![0.0; 3]);
        let mut gates = vec![0.0; 12];
        let (mut h, mut c) = (vec![0.0; 3], vec![0.0; 3]);
        p.step(&[1.0, -2.0], &[0.3; 3], &[0.0; 3], &mut gates, &mut h, &mut c);
        assert!(gates[..9].iter().all(|&g| g == 0.5));
    }

    #[test]
    fn saturated_forget_gate_keeps_state() {
        let mut p = DirectionParams::zeros(2, 2);
        p.gate_bias_mut(Gate::Forget).fill(20.0);
        let v = [0.7, -1.3];
        let (_, c) = lstm_cell(&[0.5, 0.5], &[0.0; 2], &v, &p).unwrap();
        for (a, b) in c.iter().zip(v) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn cell_dimension_mismatch() {
        let p = DirectionParams::zeros(2, 3);
        assert!(matches!(
            lstm_cell(&[0.0; 2], &[0.0; 2], &[0.0; 2], &p),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn single_step_shape() {
        let mut r = rng::seeded(1);
        let p = LstmParams::init(4, 3, 2, &mut r);
        let s = random_seq(&mut r, 1, 4, 2);
        let out = forward(&s, &p).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].len(), 2);
    }

    #[test]
    fn padding_rows_are_inert() {
        let mut r = rng::seeded(2);
        let p = LstmParams::init(3, 4, 2, &mut r);
        let base = random_seq(&mut r, 5, 3, 2);
        let mut padded = base.clone();
        for _ in 0..3 {
            padded.features.push(vec![9.0, -9.0, 9.0]);
            padded.labels.push(Some(1));
            padded.mask.push(false);
        }
        let a = forward(&base, &p).unwrap();
        let b = forward(&padded, &p).unwrap();
        assert_eq!(a[..], b[..5]);
        let (la, ga) = loss_and_grad(&base, &p).unwrap();
        let (lb, gb) = loss_and_grad(&padded, &p).unwrap();
        assert_eq!(la, lb);
        assert_eq!(ga, gb);
    }

    #[test]
    fn mask_must_be_prefix() {
        let p = LstmParams::zeros(1, 1, 2);
        let s = FeatureSequence {
            features: vec![vec![0.0]; 2],
            labels: vec![None; 2],
            mask: vec![false, true],
        };
        assert!(forward(&s, &p).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut r = rng::seeded(3);
        let p = LstmParams::init(5, 4, 3, &mut r);
        let s = random_seq(&mut r, 4, 5, 3);
        assert!(gradient_check(&p, &s, 1e-5).unwrap() < 1e-4);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, -1000.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((cross_entropy(&[0.0, 0.0], 1) - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gate_views() {
        let mut p = DirectionParams::zeros(2, 1);
        p.gate_weights_mut(Gate::Output).fill(1.0);
        assert_eq!(p.w.iter().filter(|&&v| v == 1.0).count(), 6);
        assert_eq!(&p.w[12..18], &[1.0; 6]);
        assert_eq!(p.gate_weights(Gate::Candidate), &[0.0; 6]);
    }
}
