//! Node embeddings from random walks over the accessibility probability
//! graph, plus the positional encoders that attach a location vector to
//! each sensor event.
//!
//! Walks are first-order: the next node is drawn from the current node's
//! transition row. The walk corpus is fed to a skip-gram model trained
//! with negative sampling; the input-side vectors are the embeddings.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::LayoutMap;
use crate::graph::AccessProbabilityGraph;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    pub num_walks_per_node: usize,
    pub walk_length: usize,
    pub rng_seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            num_walks_per_node: 700,
            walk_length: 1000,
            rng_seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_walks_per_node == 0 {
            return Err(Error::InvalidConfig("num_walks_per_node must be >= 1".into()));
        }
        if self.walk_length < 2 {
            return Err(Error::InvalidConfig("walk_length must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dimension: usize,
    pub window_size: usize,
    pub negative_samples: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Exponent applied to node frequencies for the noise distribution.
    pub noise_exponent: f64,
    /// L2 bound on each per-pair gradient vector.
    pub max_grad_norm: f64,
    pub rng_seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dimension: 256,
            window_size: 1,
            negative_samples: 5,
            learning_rate: 0.025,
            epochs: 5,
            noise_exponent: 0.75,
            max_grad_norm: 10.0,
            rng_seed: 0,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.dimension == 0 {
            return bad("dimension must be >= 1");
        }
        if self.window_size == 0 {
            return bad("window_size must be >= 1");
        }
        if self.negative_samples == 0 {
            return bad("negative_samples must be >= 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a nonnegative finite number");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        Ok(())
    }
}

/// Walk corpus over node indices of one graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walks {
    pub node_ids: Vec<String>,
    pub sequences: Vec<Vec<u32>>,
}

impl Walks {
    pub fn as_ids(&self) -> impl Iterator<Item = Vec<&str>> + '_ {
        self.sequences
            .iter()
            .map(|w| w.iter().map(|&i| self.node_ids[i as usize].as_str()).collect())
    }

    /// `counts[i][j]`: number of observed `i -> j` steps.
    pub fn transition_counts(&self) -> Vec<Vec<u64>> {
        let n = self.node_ids.len();
        let mut counts = vec![vec![0u64; n]; n];
        for w in &self.sequences {
            for pair in w.windows(2) {
                counts[pair[0] as usize][pair[1] as usize] += 1;
            }
        }
        counts
    }
}

/// Per-node comparison of empirical step frequencies against the APG row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkFidelity {
    pub node_id: String,
    pub samples: u64,
    pub total_variation: f64,
}

pub fn walk_fidelity(walks: &Walks, apg: &AccessProbabilityGraph) -> Vec<WalkFidelity> {
    walks
        .transition_counts()
        .iter()
        .zip(apg.trans())
        .zip(apg.node_ids())
        .map(|((counts, row), id)| {
            let samples: u64 = counts.iter().sum();
            let tv = if samples == 0 {
                f64::NAN
            } else {
                0.5 * counts
                    .iter()
                    .zip(row)
                    .map(|(&c, &p)| (c as f64 / samples as f64 - p).abs())
                    .sum::<f64>()
            };
            WalkFidelity {
                node_id: id.clone(),
                samples,
                total_variation: tv,
            }
        })
        .collect()
}

fn cumulative(row: &[f64]) -> Vec<f64> {
    row.iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Index drawn from a cumulative weight table.
fn sample_cumulative(cum: &[f64], rng: &mut rng::Rng) -> usize {
    let total = *cum.last().expect("nonempty table");
    let u = rng.random::<f64>() * total;
    let idx = cum.partition_point(|&c| c <= u);
    // guard against u landing on the top edge through rounding
    let mut idx = idx.min(cum.len() - 1);
    while idx > 0 && cum[idx] == cum[idx - 1] {
        idx -= 1;
    }
    idx
}

/// `num_walks_per_node` walks from every node, each `walk_length` nodes long.
///
/// Node `i` draws from its own stream seeded by `(rng_seed, i)`, so walks
/// can be generated in parallel. Output is ordered round by round: walk `r`
/// of node 0, walk `r` of node 1, and so on.
pub fn random_walks(apg: &AccessProbabilityGraph, cfg: &WalkConfig) -> Result<Walks> {
    cfg.validate()?;
    let n = apg.len();
    if n == 0 {
        return Err(Error::EmptyInput("probability graph has no nodes"));
    }
    let tables: Vec<Vec<f64>> = apg.trans().iter().map(|r| cumulative(r)).collect();
    let per_node: Vec<Vec<Vec<u32>>> = (0..n)
        .into_par_iter()
        .map(|start| {
            let mut rng = rng::rng(cfg.rng_seed, start as u64);
            (0..cfg.num_walks_per_node)
                .map(|_| {
                    let mut walk = Vec::with_capacity(cfg.walk_length);
                    let mut cur = start;
                    walk.push(cur as u32);
                    for _ in 1..cfg.walk_length {
                        cur = sample_cumulative(&tables[cur], &mut rng);
                        walk.push(cur as u32);
                    }
                    walk
                })
                .collect()
        })
        .collect();

    let mut sequences = Vec::with_capacity(n * cfg.num_walks_per_node);
    let mut iters: Vec<_> = per_node.into_iter().map(Vec::into_iter).collect();
    for _ in 0..cfg.num_walks_per_node {
        for it in iters.iter_mut() {
            sequences.push(it.next().expect("walk count per node"));
        }
    }
    Ok(Walks {
        node_ids: apg.node_ids().to_vec(),
        sequences,
    })
}

/// One dense vector per node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEmbeddings {
    node_ids: Vec<String>,
    vectors: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingExport {
    pub node_ids: Vec<String>,
    pub dimension: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl NodeEmbeddings {
    pub fn new(node_ids: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if node_ids.len() != vectors.len() {
            return Err(Error::DimensionMismatch {
                expected: node_ids.len(),
                got: vectors.len(),
            });
        }
        let d = vectors.first().map_or(0, Vec::len);
        for v in &vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Numeric("non-finite embedding entry".into()));
            }
        }
        let index = node_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Ok(NodeEmbeddings {
            node_ids,
            vectors,
            index,
        })
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dimension(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.vectors[i].as_slice())
    }

    pub fn cosine(&self, a: &str, b: &str) -> Option<f64> {
        Some(cosine(self.get(a)?, self.get(b)?))
    }

    pub fn to_export(&self) -> EmbeddingExport {
        EmbeddingExport {
            node_ids: self.node_ids.clone(),
            dimension: self.dimension(),
            vectors: self.vectors.clone(),
        }
    }

    pub fn from_export(ex: EmbeddingExport) -> Result<Self> {
        let emb = Self::new(ex.node_ids, ex.vectors)?;
        if !emb.vectors.is_empty() && emb.dimension() != ex.dimension {
            return Err(Error::DimensionMismatch {
                expected: ex.dimension,
                got: emb.dimension(),
            });
        }
        Ok(emb)
    }

    /// `id,v0,...,v{d-1}` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for k in 0..self.dimension() {
            write!(out, ",v{k}").unwrap();
        }
        out.push('\n');
        for (id, v) in self.node_ids.iter().zip(&self.vectors) {
            out.push_str(id);
            for x in v {
                write!(out, ",{x}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn clip_norm(v: &mut [f64], max: f64) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > max {
        let s = max / norm;
        v.iter_mut().for_each(|x| *x *= s);
    }
}

/// Skip-gram with negative sampling over a walk corpus.
///
/// Every `(center, context)` pair within `window_size` positions of each
/// other contributes `log s(u_ctx . v_center) + sum_k log s(-u_neg_k . v_center)`,
/// with negatives drawn from node frequency raised to `noise_exponent`.
/// A node staying put in a walk pairs with itself like any other context;
/// on bipartite graphs this is what keeps ring neighbours closer than
/// nodes two steps apart. A one-node graph has nothing to contrast, so
/// it keeps its initial vector. The learning rate
/// decays linearly to 1e-4 of its initial value over all epochs.
pub fn train_skipgram(walks: &Walks, cfg: &SkipGramConfig) -> Result<NodeEmbeddings> {
    cfg.validate()?;
    if walks.sequences.is_empty() {
        return Err(Error::EmptyInput("walk corpus is empty"));
    }
    let n = walks.node_ids.len();
    let d = cfg.dimension;
    let mut rng = rng::seeded(cfg.rng_seed);

    let mut freq = vec![0u64; n];
    for w in &walks.sequences {
        for &v in w {
            freq[v as usize] += 1;
        }
    }
    for (id, f) in walks.node_ids.iter().zip(&freq) {
        if *f == 0 {
            log::warn!("node `{id}` never appears in the walks; keeping its initial vector");
        }
    }
    let noise = cumulative(
        &freq
            .iter()
            .map(|&f| (f as f64).powf(cfg.noise_exponent))
            .collect::<Vec<_>>(),
    );

    let half = 0.5 / d as f64;
    let mut input: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-half..=half)).collect())
        .collect();
    let mut output = vec![vec![0.0; d]; n];

    let tokens: usize = walks.sequences.iter().map(Vec::len).sum();
    let total = (tokens * cfg.epochs) as f64;
    let mut processed = 0usize;
    let mut order: Vec<usize> = (0..walks.sequences.len()).collect();
    let mut grad_in = vec![0.0; d];
    let mut grad_out = vec![0.0; d];

    let epochs = if n < 2 { 0 } else { cfg.epochs };
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &wi in &order {
            let walk = &walks.sequences[wi];
            for (pos, &center) in walk.iter().enumerate() {
                let lr = cfg.learning_rate * (1.0 - processed as f64 / total).max(1e-4);
                processed += 1;
                let center = center as usize;
                let lo = pos.saturating_sub(cfg.window_size);
                let hi = (pos + cfg.window_size).min(walk.len() - 1);
                for cpos in lo..=hi {
                    let ctx = walk[cpos] as usize;
                    if cpos == pos {
                        continue;
                    }
                    grad_in.iter_mut().for_each(|g| *g = 0.0);
                    for k in 0..=cfg.negative_samples {
                        let (target, label) = if k == 0 {
                            (ctx, 1.0)
                        } else {
                            let t = sample_cumulative(&noise, &mut rng);
                            if t == ctx {
                                continue;
                            }
                            (t, 0.0)
                        };
                        let v = &input[center];
                        let u = &output[target];
                        let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                        let g = label - sigmoid(dot);
                        for ((gi, go), (&vi, &ui)) in grad_in
                            .iter_mut()
                            .zip(grad_out.iter_mut())
                            .zip(v.iter().zip(u))
                        {
                            *gi += g * ui;
                            *go = g * vi;
                        }
                        clip_norm(&mut grad_out, cfg.max_grad_norm);
                        for (u, go) in output[target].iter_mut().zip(&grad_out) {
                            *u += lr * go;
                        }
                    }
                    clip_norm(&mut grad_in, cfg.max_grad_norm);
                    for (v, gi) in input[center].iter_mut().zip(&grad_in) {
                        *v += lr * gi;
                    }
                }
            }
        }
    }

    if input.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("skip-gram training produced non-finite vectors".into()));
    }
    NodeEmbeddings::new(walks.node_ids.clone(), input)
}

/// Location vector attached to each sensor event.
#[derive(Debug, Clone, PartialEq)]
pub enum PositionalEncoder {
    None,
    Coordinates(HashMap<String, Vec<f64>>),
    RoomNumber(HashMap<String, u32>),
    Node2Vec(NodeEmbeddings),
}

impl PositionalEncoder {
    pub fn coordinates(map: &LayoutMap) -> Self {
        PositionalEncoder::Coordinates(
            map.pois()
                .iter()
                .map(|p| (p.id.clone(), p.point.coords().to_vec()))
                .collect(),
        )
    }

    pub fn room_number(map: &LayoutMap) -> Result<Self> {
        if map.rooms().is_empty() {
            return Err(Error::InvalidConfig(
                "room-number encoding needs a `room` on each POI".into(),
            ));
        }
        Ok(PositionalEncoder::RoomNumber(map.rooms().clone()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            PositionalEncoder::None => "none",
            PositionalEncoder::Coordinates(_) => "coordinates",
            PositionalEncoder::RoomNumber(_) => "room_number",
            PositionalEncoder::Node2Vec(_) => "node2vec",
        }
    }

    /// Width of the vector produced by [`encode`](Self::encode).
    pub fn dim(&self) -> usize {
        match self {
            PositionalEncoder::None => 0,
            PositionalEncoder::Coordinates(m) => m.values().next().map_or(0, Vec::len),
            PositionalEncoder::RoomNumber(_) => 1,
            PositionalEncoder::Node2Vec(e) => e.dimension(),
        }
    }

    pub fn encode(&self, sensor_id: &str) -> Result<Vec<f64>> {
        let unknown = || Error::UnknownSensor(sensor_id.to_string());
        match self {
            PositionalEncoder::None => Ok(Vec::new()),
            PositionalEncoder::Coordinates(m) => m.get(sensor_id).cloned().ok_or_else(unknown),
            PositionalEncoder::RoomNumber(m) => {
                m.get(sensor_id).map(|&r| vec![f64::from(r)]).ok_or_else(unknown)
            }
            PositionalEncoder::Node2Vec(e) => {
                e.get(sensor_id).map(<[f64]>::to_vec).ok_or_else(unknown)
            }
        }
    }
}
