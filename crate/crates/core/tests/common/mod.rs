//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use resid_core::geometry::{Point, Segment};
use resid_core::ingest::FeatureSequence;
use resid_core::model::{DirectionParams, Gate, LstmParams};

// ---------- geometry ----------

fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0);
    let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

fn xy(p: &Point) -> (f64, f64) {
    (p.coords()[0], p.coords()[1])
}

/// Smallest distance between two 2-D segments, found by sampling
/// `samples` points along `l1`, then refining around the best sample.
///
/// The distance from a point moving along `l1` to the convex set `l2` is
/// convex in the position, so refining the bracket around the best sample
/// converges to the true minimum.
pub fn sampled_distance(l1: &Segment, l2: &Segment, samples: usize) -> f64 {
    let (a, b) = (xy(l1.a()), xy(l1.b()));
    let (c, d) = (xy(l2.a()), xy(l2.b()));
    let at = |s: f64| (a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1));
    let f = |s: f64| point_segment_distance(at(s), c, d);
    let n = samples.max(2);
    let mut best = 0;
    let mut best_v = f64::INFINITY;
    for k in 0..n {
        let v = f(k as f64 / (n - 1) as f64);
        if v < best_v {
            best_v = v;
            best = k;
        }
    }
    let step = 1.0 / (n - 1) as f64;
    let mut lo = (best as f64 - 1.0).max(0.0) * step;
    let mut hi = ((best as f64 + 1.0) * step).min(1.0);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    best_v.min(f(0.5 * (lo + hi)))
}

// ---------- LSTM ----------

fn sigma(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `W[g][k][j]` over the concatenation `[h_prev, x]`.
fn gate_matrix(p: &DirectionParams, g: Gate) -> Vec<Vec<f64>> {
    let cols = p.hidden + p.input_dim;
    let w = p.gate_weights(g);
    (0..p.hidden).map(|k| w[k * cols..(k + 1) * cols].to_vec()).collect()
}

/// Scalar-loop LSTM step, written out gate by gate.
pub fn reference_cell(x: &[f64], h_prev: &[f64], c_prev: &[f64], p: &DirectionParams) -> (Vec<f64>, Vec<f64>) {
    let hd = p.hidden;
    let mut concat = h_prev.to_vec();
    concat.extend_from_slice(x);
    let pre = |g: Gate, k: usize| {
        let row = &gate_matrix(p, g)[k];
        let mut z = p.gate_bias(g)[k];
        for j in 0..concat.len() {
            z += row[j] * concat[j];
        }
        z
    };
    let mut h = vec![0.0; hd];
    let mut c = vec![0.0; hd];
    for k in 0..hd {
        let i = sigma(pre(Gate::Input, k));
        let f = sigma(pre(Gate::Forget, k));
        let o = sigma(pre(Gate::Output, k));
        let cand = pre(Gate::Candidate, k).tanh();
        c[k] = f * c_prev[k] + i * cand;
        h[k] = o * c[k].tanh();
    }
    (h, c)
}

/// Scores of every row of `seq` by running both directions with the
/// reference cell. Padded rows score the tag bias.
pub fn reference_forward(seq: &FeatureSequence, params: &LstmParams) -> Vec<Vec<f64>> {
    let hd = params.hidden;
    let valid = seq.mask.iter().take_while(|&&m| m).count();
    let run = |p: &DirectionParams, order: Vec<usize>| {
        let mut out = vec![vec![0.0; hd]; valid];
        let (mut h, mut c) = (vec![0.0; hd], vec![0.0; hd]);
        for t in order {
            let (h2, c2) = reference_cell(&seq.features[t], &h, &c, p);
            h = h2;
            c = c2;
            out[t] = h.clone();
        }
        out
    };
    let hf = run(&params.fwd, (0..valid).collect());
    let hb = run(&params.bwd, (0..valid).rev().collect());
    (0..seq.mask.len())
        .map(|t| {
            (0..params.n_classes)
                .map(|cls| {
                    let mut s = params.b_tag[cls];
                    if t < valid {
                        let row = &params.w_tag[cls * 2 * hd..(cls + 1) * 2 * hd];
                        for k in 0..hd {
                            s += row[k] * hf[t][k] + row[hd + k] * hb[t][k];
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// Seeded random chunk with `valid` real rows and labels in `0..classes`.
pub fn toy_chunk(seed: u64, len: usize, valid: usize, width: usize, classes: usize) -> FeatureSequence {
    use rand::Rng;
    let mut r = resid_core::rng::seeded(seed);
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for t in 0..len {
        if t < valid {
            features.push((0..width).map(|_| r.random_range(-1.0..1.0)).collect());
            labels.push(Some(r.random_range(0..classes)));
        } else {
            features.push(vec![0.0; width]);
            labels.push(None);
        }
    }
    FeatureSequence {
        features,
        labels,
        mask: (0..len).map(|t| t < valid).collect(),
    }
}

// ---------- graph ----------

/// The 4-node accessibility graph of the worked APG example.
pub fn paper_adjacency() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 1.0, 0.0, 0.0],
        vec![1.0, 0.0, 2.0, 3.0],
        vec![0.0, 2.0, 0.0, 1.0],
        vec![0.0, 3.0, 1.0, 0.0],
    ]
}

/// APG entries computed by hand from `1/(d+1)` weights, one row at a
/// time, with exact fractions.
pub fn analytic_apg(w: f64) -> Vec<Vec<f64>> {
    let m = paper_adjacency();
    m.iter()
        .enumerate()
        .map(|(i, row)| {
            let weights: Vec<f64> = row.iter().map(|&d| if d > 0.0 { 1.0 / (d + 1.0) } else { 0.0 }).collect();
            let z: f64 = weights.iter().sum();
            weights
                .iter()
                .enumerate()
                .map(|(j, &v)| if i == j { w } else { (1.0 - w) * v / z })
                .collect()
        })
        .collect()
}
