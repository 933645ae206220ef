//! Bidirectional LSTM resident tagger: cell and BPTT, training,
//! metrics and cross-validation.

pub mod cv;
pub mod lstm;
pub mod metrics;
pub mod train;

pub use cv::{cross_validate, fold_assignment, CvConfig, CvReport, FoldResult};
pub use lstm::{forward, gradient_check, lstm_cell, DirectionParams, Gate, LstmParams};
pub use metrics::{Aggregate, EvalReport, MetricSet};
pub use train::{evaluate, predict, train, Checkpoint, EpochStats, TrainConfig, TrainOutcome};
