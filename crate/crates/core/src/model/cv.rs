//! Randomized k-fold cross-validation over chunks.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{Aggregate, EvalReport, MetricSet};
use super::train::{predict, train, TrainConfig};
use crate::error::{Error, Result};
use crate::ingest::{upsample_training, FeatureSequence};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    pub folds: usize,
    /// Share of the non-test chunks held out for epoch selection.
    pub valid_fraction: f64,
    pub upsample_factor: usize,
    pub train: TrainConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            valid_fraction: 0.25,
            upsample_factor: 8,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// Indices into the input chunk list.
    pub test_chunks: Vec<usize>,
    pub train_chunks: Vec<usize>,
    pub valid_chunks: Vec<usize>,
    pub best_epoch: usize,
    pub report: EvalReport,
    /// Argmax class of every real row, per test chunk.
    pub predictions: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    pub aggregate: Aggregate,
}

impl CvReport {
    /// `fold,accuracy,precision,recall,f1,events,best_epoch` plus mean and
    /// std rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,accuracy,precision,recall,f1,events,best_epoch\n");
        let row = |label: &str, m: &MetricSet, tail: &str| {
            format!(
                "{label},{:.6},{:.6},{:.6},{:.6},{tail}\n",
                m.accuracy, m.precision, m.recall, m.f1
            )
        };
        for f in &self.folds {
            out.push_str(&row(
                &f.fold.to_string(),
                &f.report.metrics,
                &format!("{},{}", f.report.total, f.best_epoch),
            ));
        }
        out.push_str(&row("mean", &self.aggregate.mean, ","));
        out.push_str(&row("std", &self.aggregate.std, ","));
        out
    }
}

/// Assignment of shuffled chunk indices to `k` contiguous folds.
pub fn fold_assignment(n_chunks: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidConfig("cross-validation needs k >= 2".into()));
    }
    if n_chunks < k {
        return Err(Error::TooFewChunks(n_chunks, k));
    }
    let mut idx: Vec<usize> = (0..n_chunks).collect();
    idx.shuffle(&mut rng::rng(seed, 100));
    Ok((0..k)
        .map(|f| idx[f * n_chunks / k..(f + 1) * n_chunks / k].to_vec())
        .collect())
}

/// Each fold serves once as the test set. The remaining chunks, in
/// shuffled order, are split into training and validation parts, and only
/// the training part is up-sampled. Folds run in parallel on the current
/// rayon pool; results are ordered by fold index.
pub fn cross_validate(chunks: &[FeatureSequence], n_classes: usize, cfg: &CvConfig) -> Result<CvReport> {
    if !(0.0..1.0).contains(&cfg.valid_fraction) {
        return Err(Error::InvalidConfig("valid_fraction must be in [0, 1)".into()));
    }
    cfg.train.validate()?;
    let seed = cfg.train.rng_seed;
    let folds = fold_assignment(chunks.len(), cfg.folds, seed)?;

    let results: Vec<Result<FoldResult>> = (0..cfg.folds)
        .into_par_iter()
        .map(|f| {
            let rest: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            let n_valid = if rest.len() >= 2 {
                ((rest.len() as f64 * cfg.valid_fraction).round() as usize).min(rest.len() - 1)
            } else {
                0
            };
            let (train_idx, valid_idx) = rest.split_at(rest.len() - n_valid);
            let pick = |ix: &[usize]| ix.iter().map(|&i| chunks[i].clone()).collect::<Vec<_>>();
            let mut up_rng = rng::rng(seed, 200 + f as u64);
            let train_set = upsample_training(&pick(train_idx), cfg.upsample_factor, &mut up_rng)?;
            let valid_set = pick(valid_idx);
            let tcfg = TrainConfig {
                rng_seed: rng::derive_seed(seed, 300 + f as u64),
                ..cfg.train.clone()
            };
            let out = train(&train_set, &valid_set, n_classes, &tcfg)?;

            let mut pairs = Vec::new();
            let mut predictions = Vec::with_capacity(folds[f].len());
            for &i in &folds[f] {
                let p = predict(&chunks[i], &out.params)?;
                pairs.extend(chunks[i].labeled().map(|(t, y)| (y, p[t])));
                predictions.push(p);
            }
            Ok(FoldResult {
                fold: f,
                test_chunks: folds[f].clone(),
                train_chunks: train_idx.to_vec(),
                valid_chunks: valid_idx.to_vec(),
                best_epoch: out.best_epoch,
                report: EvalReport::from_pairs(pairs, n_classes)?,
                predictions,
            })
        })
        .collect();
    let folds: Vec<FoldResult> = results.into_iter().collect::<Result<_>>()?;
    let aggregate = Aggregate::of(&folds.iter().map(|f| f.report.metrics).collect::<Vec<_>>());
    Ok(CvReport { folds, aggregate })
}
