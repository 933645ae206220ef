//! Accuracy, macro precision/recall/F1 and confusion matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricSet {
    pub const NAMES: [&'static str; 4] = ["accuracy", "precision", "recall", "f1"];

    pub fn values(&self) -> [f64; 4] {
        [self.accuracy, self.precision, self.recall, self.f1]
    }

    pub fn from_values(v: [f64; 4]) -> Self {
        MetricSet {
            accuracy: v[0],
            precision: v[1],
            recall: v[2],
            f1: v[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub metrics: MetricSet,
    /// `confusion[true][pred]`.
    pub confusion: Vec<Vec<u64>>,
    pub total: u64,
}

impl EvalReport {
    /// Builds a report from aligned label/prediction pairs.
    ///
    /// Macro averages run over classes that occur in either the truth or
    /// the predictions; an undefined precision or recall counts as 0.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>, n_classes: usize) -> Result<Self> {
        let mut confusion = vec![vec![0u64; n_classes]; n_classes];
        let mut total = 0u64;
        for (y, p) in pairs {
            if y >= n_classes || p >= n_classes {
                return Err(Error::DimensionMismatch {
                    expected: n_classes,
                    got: y.max(p) + 1,
                });
            }
            confusion[y][p] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(Error::EmptyInput("no labeled events to evaluate"));
        }
        Ok(Self::from_confusion(confusion))
    }

    pub fn from_confusion(confusion: Vec<Vec<u64>>) -> Self {
        let n = confusion.len();
        let total: u64 = confusion.iter().flatten().sum();
        let correct: u64 = (0..n).map(|k| confusion[k][k]).sum();
        let mut sums = [0.0; 3];
        let mut present = 0usize;
        for k in 0..n {
            let support: u64 = confusion[k].iter().sum();
            let predicted: u64 = confusion.iter().map(|r| r[k]).sum();
            if support == 0 && predicted == 0 {
                continue;
            }
            present += 1;
            let tp = confusion[k][k] as f64;
            let p = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
            let r = if support > 0 { tp / support as f64 } else { 0.0 };
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            sums[0] += p;
            sums[1] += r;
            sums[2] += f;
        }
        let m = present.max(1) as f64;
        EvalReport {
            metrics: MetricSet {
                accuracy: if total > 0 { correct as f64 / total as f64 } else { 0.0 },
                precision: sums[0] / m,
                recall: sums[1] / m,
                f1: sums[2] / m,
            },
            confusion,
            total,
        }
    }

    pub fn support(&self) -> Vec<u64> {
        self.confusion.iter().map(|r| r.iter().sum()).collect()
    }

    /// `true\pred,0,1,...` grid.
    pub fn confusion_csv(&self) -> String {
        let n = self.confusion.len();
        let mut out = String::from("true\\pred");
        for k in 0..n {
            out.push_str(&format!(",{k}"));
        }
        out.push('\n');
        for (k, row) in self.confusion.iter().enumerate() {
            out.push_str(&k.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Mean and sample standard deviation of each metric.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: MetricSet,
    pub std: MetricSet,
}

impl Aggregate {
    pub fn of(sets: &[MetricSet]) -> Self {
        let n = sets.len();
        if n == 0 {
            return Aggregate::default();
        }
        let mut mean = [0.0; 4];
        for s in sets {
            for (m, v) in mean.iter_mut().zip(s.values()) {
                *m += v / n as f64;
            }
        }
        let mut var = [0.0; 4];
        if n > 1 {
            for s in sets {
                for ((a, v), m) in var.iter_mut().zip(s.values()).zip(mean) {
                    *a += (v - m).powi(2) / (n - 1) as f64;
                }
            }
        }
        Aggregate {
            mean: MetricSet::from_values(mean),
            std: MetricSet::from_values(var.map(f64::sqrt)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let r = EvalReport::from_pairs([(0, 0), (1, 1), (1, 1), (2, 2)], 3).unwrap();
        assert_eq!(r.metrics.accuracy, 1.0);
        assert_eq!(r.metrics.f1, 1.0);
        assert_eq!(r.total, 4);
    }

    #[test]
    fn constant_predictor_on_balanced_pair() {
        let r = EvalReport::from_pairs([(0, 0), (0, 0), (1, 0), (1, 0)], 2).unwrap();
        assert_eq!(r.metrics.accuracy, 0.5);
        assert!((r.metrics.f1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.support(), vec![2, 2]);
    }

    #[test]
    fn absent_classes_are_skipped() {
        let r = EvalReport::from_pairs([(0, 0), (1, 1)], 4).unwrap();
        assert_eq!(r.metrics.f1, 1.0);
    }

    #[test]
    fn empty_and_out_of_range() {
        assert!(matches!(
            EvalReport::from_pairs(std::iter::empty(), 2),
            Err(Error::EmptyInput(_))
        ));
        assert!(EvalReport::from_pairs([(0, 2)], 2).is_err());
    }

    #[test]
    fn aggregate_stats() {
        let a = MetricSet::from_values([0.5, 0.5, 0.5, 0.5]);
        let b = MetricSet::from_values([1.0, 1.0, 1.0, 1.0]);
        let agg = Aggregate::of(&[a, b]);
        assert_eq!(agg.mean.accuracy, 0.75);
        assert!((agg.std.f1 - 0.125f64.sqrt()).abs() < 1e-12);
        assert_eq!(Aggregate::of(&[a]).std.accuracy, 0.0);
    }

    #[test]
    fn confusion_csv_layout() {
        let r = EvalReport::from_pairs([(0, 1), (1, 1)], 2).unwrap();
        assert_eq!(r.confusion_csv(), "true\\pred,0,1\n0,0,1\n1,0,1\n");
    }
}
