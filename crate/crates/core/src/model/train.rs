//! Mini-batch training with Adam, gradient-norm clipping and selection of
//! the epoch with the lowest validation loss.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::lstm::{backward, chunk_loss, forward, forward_pass, LstmParams};
use super::metrics::EvalReport;
use crate::error::{Error, Result};
use crate::ingest::FeatureSequence;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub hidden_size: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Epochs without a new best validation loss before stopping.
    pub patience: usize,
    /// Chunks per optimizer step.
    pub batch_size: usize,
    pub grad_clip: f64,
    /// Weight each class by inverse training frequency.
    pub class_weighting: bool,
    pub chunk_len: usize,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden_size: 64,
            dropout: 0.2,
            learning_rate: 1e-3,
            max_epochs: 100,
            patience: 10,
            batch_size: 1,
            grad_clip: 5.0,
            class_weighting: false,
            chunk_len: 1000,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.hidden_size == 0 {
            return bad("hidden_size must be >= 1");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must be in [0, 1)");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and >= 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.chunk_len == 0 {
            return bad("chunk_len must be >= 1");
        }
        if !(self.grad_clip > 0.0) {
            return bad("grad_clip must be > 0");
        }
        Ok(())
    }
}

/// First-order adaptive optimizer with bias-corrected moments.
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: LstmParams,
    v: LstmParams,
}

impl Adam {
    pub fn new(params: &LstmParams, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut LstmParams, grad: &LstmParams) {
        if self.lr == 0.0 {
            return;
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let ms = self.m.tensors_mut();
        let vs = self.v.tensors_mut();
        for (((p, g), m), v) in params.tensors_mut().into_iter().zip(grad.tensors()).zip(ms).zip(vs) {
            for j in 0..p.len() {
                m[j] = b1 * m[j] + (1.0 - b1) * g[j];
                v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
                p[j] -= lr * (m[j] / c1) / ((v[j] / c2).sqrt() + eps);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    /// 0 is the initialization, before any update.
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: LstmParams,
    pub curve: Vec<EpochStats>,
    pub best_epoch: usize,
}

/// Labeled-row count of every class in `chunks`.
pub fn class_counts(chunks: &[FeatureSequence], n_classes: usize) -> Vec<u64> {
    let mut c = vec![0u64; n_classes];
    for ch in chunks {
        for (_, y) in ch.labeled() {
            if y < n_classes {
                c[y] += 1;
            }
        }
    }
    c
}

/// `N / (K * count_k)` over the K classes that occur; absent classes get 0.
pub fn inverse_frequency_weights(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    let present = counts.iter().filter(|&&c| c > 0).count().max(1) as f64;
    counts
        .iter()
        .map(|&c| if c == 0 { 0.0 } else { total as f64 / (present * c as f64) })
        .collect()
}

/// Mean (weighted) cross-entropy over every labeled row of `chunks`, with
/// dropout off. `None` when there are no labeled rows.
pub fn mean_loss(
    chunks: &[FeatureSequence],
    params: &LstmParams,
    weights: Option<&[f64]>,
) -> Result<Option<f64>> {
    let mut total = 0.0;
    let mut norm = 0.0;
    for c in chunks {
        let scores = forward(c, params)?;
        let (t, n) = chunk_loss(&scores, c, weights);
        total += t;
        norm += n;
    }
    Ok(if norm > 0.0 { Some(total / norm) } else { None })
}

fn check_labels(chunks: &[FeatureSequence], n_classes: usize) -> Result<()> {
    for c in chunks {
        if let Some((_, y)) = c.labeled().find(|&(_, y)| y >= n_classes) {
            return Err(Error::InvalidConfig(format!(
                "label {y} out of range for {n_classes} classes"
            )));
        }
    }
    Ok(())
}

/// Trains a fresh model.
///
/// Each epoch visits the training chunks in a seeded random order; every
/// `batch_size` chunks the mean-loss gradient is clipped to `grad_clip`
/// in global L2 norm and applied with Adam. After each epoch the training
/// and validation losses are recomputed with dropout off. The returned
/// parameters are those of the epoch with the lowest validation loss
/// (training loss if the validation set has no labeled rows).
pub fn train(
    chunks_train: &[FeatureSequence],
    chunks_valid: &[FeatureSequence],
    n_classes: usize,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if chunks_train.is_empty() {
        return Err(Error::EmptyInput("training set has no chunks"));
    }
    let input_dim = chunks_train[0].width();
    let mut init_rng = rng::rng(cfg.rng_seed, 0);
    let params = LstmParams::init(input_dim, cfg.hidden_size, n_classes, &mut init_rng);
    train_from(params, chunks_train, chunks_valid, cfg)
}

/// As [`train`], starting from given parameters.
pub fn train_from(
    mut params: LstmParams,
    chunks_train: &[FeatureSequence],
    chunks_valid: &[FeatureSequence],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    params.validate()?;
    if chunks_train.is_empty() {
        return Err(Error::EmptyInput("training set has no chunks"));
    }
    let n_classes = params.n_classes;
    check_labels(chunks_train, n_classes)?;
    check_labels(chunks_valid, n_classes)?;
    let weights = cfg
        .class_weighting
        .then(|| inverse_frequency_weights(&class_counts(chunks_train, n_classes)));
    let w = weights.as_deref();

    let mut order_rng = rng::rng(cfg.rng_seed, 1);
    let mut drop_rng = rng::rng(cfg.rng_seed, 2);
    let mut adam = Adam::new(&params, cfg.learning_rate);

    let evaluate = |p: &LstmParams, epoch: usize| -> Result<EpochStats> {
        let train_loss = mean_loss(chunks_train, p, w)?.unwrap_or(0.0);
        let valid_loss = match mean_loss(chunks_valid, p, w)? {
            Some(v) => v,
            None => train_loss,
        };
        if !train_loss.is_finite() || !valid_loss.is_finite() {
            return Err(Error::Numeric(format!(
                "loss diverged at epoch {epoch}: train {train_loss}, valid {valid_loss}"
            )));
        }
        Ok(EpochStats {
            epoch,
            train_loss,
            valid_loss,
        })
    };

    let mut curve = vec![evaluate(&params, 0)?];
    let mut best = (curve[0].valid_loss, 0usize, params.clone());
    let mut order: Vec<usize> = (0..chunks_train.len()).collect();
    let mut grad = params.zeros_like();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut order_rng);
        for batch in order.chunks(cfg.batch_size) {
            grad.scale(0.0);
            let mut norm = 0.0;
            for &ci in batch {
                let c = &chunks_train[ci];
                let pass = forward_pass(c, &params, Some((cfg.dropout, &mut drop_rng)))?;
                let (_, n) = chunk_loss(&pass.scores, c, w);
                if n > 0.0 {
                    backward(c, &params, &pass, w, 1.0, &mut grad);
                    norm += n;
                }
            }
            if norm == 0.0 {
                continue;
            }
            grad.scale(1.0 / norm);
            let gn = grad.norm_sq().sqrt();
            if !gn.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite gradient in epoch {epoch} (batch starting at chunk {})",
                    batch[0]
                )));
            }
            if gn > cfg.grad_clip {
                grad.scale(cfg.grad_clip / gn);
            }
            adam.step(&mut params, &grad);
        }
        let stats = evaluate(&params, epoch)?;
        log::debug!(
            "epoch {epoch}: train {:.5} valid {:.5}",
            stats.train_loss,
            stats.valid_loss
        );
        curve.push(stats);
        if stats.valid_loss < best.0 {
            best = (stats.valid_loss, epoch, params.clone());
        } else if epoch - best.1 >= cfg.patience {
            log::debug!("early stop after epoch {epoch}");
            break;
        }
    }
    Ok(TrainOutcome {
        params: best.2,
        curve,
        best_epoch: best.1,
    })
}

/// Argmax class of every real row of `seq`.
pub fn predict(seq: &FeatureSequence, params: &LstmParams) -> Result<Vec<usize>> {
    let scores = forward(seq, params)?;
    Ok(scores[..seq.valid_len()]
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, &s)| if s > acc.1 { (k, s) } else { acc })
                .0
        })
        .collect())
}

/// Masked per-event argmax against the labels of `chunks`.
pub fn evaluate(chunks: &[FeatureSequence], params: &LstmParams) -> Result<EvalReport> {
    let mut pairs = Vec::new();
    for c in chunks {
        let pred = predict(c, params)?;
        pairs.extend(c.labeled().map(|(t, y)| (y, pred[t])));
    }
    EvalReport::from_pairs(pairs, params.n_classes)
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub input_dim: usize,
    pub hidden: usize,
    pub n_classes: usize,
}

/// Versioned model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: TrainConfig,
    pub dims: ModelDims,
    pub params: LstmParams,
}

impl Checkpoint {
    pub fn new(config: TrainConfig, params: LstmParams) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config,
            dims: ModelDims {
                input_dim: params.input_dim,
                hidden: params.hidden,
                n_classes: params.n_classes,
            },
            params,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidConfig(format!(
                "unsupported checkpoint version {}",
                c.version
            )));
        }
        let d = c.dims;
        if (d.input_dim, d.hidden, d.n_classes)
            != (c.params.input_dim, c.params.hidden, c.params.n_classes)
        {
            return Err(Error::InvalidConfig("checkpoint dims disagree with parameters".into()));
        }
        c.params.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rows carry a 4-slot one-hot sensor; the label is sensor parity.
    fn parity_chunks(n_chunks: usize, len: usize, seed: u64) -> Vec<FeatureSequence> {
        use rand::Rng as _;
        let mut r = rng::seeded(seed);
        (0..n_chunks)
            .map(|_| {
                let mut s = FeatureSequence {
                    features: vec![],
                    labels: vec![],
                    mask: vec![],
                };
                for _ in 0..len {
                    let k = r.random_range(0..4usize);
                    let mut row = vec![0.0; 4];
                    row[k] = 1.0;
                    s.features.push(row);
                    s.labels.push(Some(k % 2));
                    s.mask.push(true);
                }
                s
            })
            .collect()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            hidden_size: 8,
            dropout: 0.0,
            learning_rate: 0.01,
            max_epochs: 50,
            patience: 50,
            chunk_len: 20,
            rng_seed: 5,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learns_sensor_parity() {
        let data = parity_chunks(8, 20, 1);
        let out = train(&data, &data, 2, &small_cfg()).unwrap();
        let rep = evaluate(&data, &out.params).unwrap();
        assert!(rep.metrics.accuracy >= 0.99, "{rep:?}");
    }

    #[test]
    fn zero_learning_rate_is_flat() {
        let data = parity_chunks(2, 10, 2);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            max_epochs: 3,
            ..small_cfg()
        };
        let out = train(&data, &data, 2, &cfg).unwrap();
        let mut r = rng::rng(cfg.rng_seed, 0);
        let init = LstmParams::init(4, 8, 2, &mut r);
        assert_eq!(out.params, init);
        assert!(out.curve.windows(2).all(|w| w[0].train_loss == w[1].train_loss));
    }

    #[test]
    fn single_chunk_train_equals_valid() {
        let data = parity_chunks(1, 10, 3);
        let cfg = TrainConfig {
            dropout: 0.3,
            max_epochs: 5,
            ..small_cfg()
        };
        let out = train(&data, &data, 2, &cfg).unwrap();
        for s in &out.curve {
            assert!((s.train_loss - s.valid_loss).abs() <= 1e-6);
        }
    }

    #[test]
    fn snapshot_has_minimum_validation_loss() {
        let data = parity_chunks(4, 10, 4);
        let valid = parity_chunks(2, 10, 40);
        let cfg = TrainConfig {
            dropout: 0.2,
            max_epochs: 15,
            ..small_cfg()
        };
        let out = train(&data, &valid, 2, &cfg).unwrap();
        let best = out.curve[out.best_epoch].valid_loss;
        assert!(out.curve.iter().all(|s| best <= s.valid_loss));
        let again = mean_loss(&valid, &out.params, None).unwrap().unwrap();
        assert!((again - best).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let data = parity_chunks(3, 10, 6);
        let cfg = TrainConfig {
            dropout: 0.2,
            max_epochs: 4,
            ..small_cfg()
        };
        let a = train(&data, &data, 2, &cfg).unwrap();
        let b = train(&data, &data, 2, &cfg).unwrap();
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(
            train(&[], &[], 2, &small_cfg()),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let mut data = parity_chunks(1, 5, 7);
        data[0].features[0][0] = f64::NAN;
        assert!(matches!(train(&data, &data, 2, &small_cfg()), Err(Error::Numeric(_))));
    }

    #[test]
    fn class_weights() {
        assert_eq!(inverse_frequency_weights(&[3, 1, 0]), vec![4.0 / 6.0, 2.0, 0.0]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut r = rng::seeded(8);
        let p = LstmParams::init(3, 2, 2, &mut r);
        let c = Checkpoint::new(small_cfg(), p);
        let back = Checkpoint::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        let mut bad = c.clone();
        bad.version = 99;
        assert!(Checkpoint::from_json(&bad.to_json().unwrap()).is_err());
    }
}
