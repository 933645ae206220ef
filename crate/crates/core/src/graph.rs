//! Accessibility probability graph: the accessibility graph re-weighted
//! into a row-stochastic transition matrix.
//!
//! Distances become affinities through `1 / (d + 1)`, each row is
//! normalized, a diagonal of `w / (1 - w)` is added, and rows are
//! normalized again. For any node with at least one neighbour this leaves
//! exactly `w` on the diagonal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::AccessibilityGraph;

pub const DEFAULT_SELF_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessProbabilityGraph {
    node_ids: Vec<String>,
    trans: Vec<Vec<f64>>,
    self_weight: f64,
}

/// JSON form: `trans` is dense row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApgExport {
    pub node_ids: Vec<String>,
    pub trans: Vec<f64>,
    pub self_weight: f64,
}

/// Row-normalizes `m` in place; all-zero rows are left untouched.
fn normalize_rows(m: &mut [Vec<f64>]) {
    for row in m.iter_mut() {
        let sum: f64 = row.iter().sum();
        if sum > 0.0 {
            row.iter_mut().for_each(|v| *v /= sum);
        }
    }
}

/// Transition matrix from a distance adjacency matrix.
///
/// Returns the matrix after the first normalization when `w == 0`.
/// Isolated nodes get a self-loop of probability 1 when `w > 0`; with
/// `w == 0` their row cannot be made stochastic and the call fails.
pub fn transition_matrix(
    node_ids: &[String],
    adjacency: &[Vec<f64>],
    w: f64,
) -> Result<Vec<Vec<f64>>> {
    if !(0.0..1.0).contains(&w) {
        return Err(Error::InvalidSelfWeight(w));
    }
    let n = adjacency.len();
    if n == 0 {
        return Err(Error::EmptyInput("accessibility graph has no nodes"));
    }
    let mut m: Vec<Vec<f64>> = adjacency
        .iter()
        .map(|row| {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            Ok(row
                .iter()
                .map(|&d| if d > 0.0 { 1.0 / (d + 1.0) } else { 0.0 })
                .collect())
        })
        .collect::<Result<_>>()?;
    normalize_rows(&mut m);

    let diag = w / (1.0 - w);
    for (i, row) in m.iter_mut().enumerate() {
        if row.iter().all(|&v| v == 0.0) {
            if w == 0.0 {
                return Err(Error::IsolatedNode(node_ids[i].clone()));
            }
            log::warn!("node `{}` has no edges; using a pure self-loop", node_ids[i]);
        }
        row[i] += diag;
    }
    normalize_rows(&mut m);
    Ok(m)
}

impl AccessProbabilityGraph {
    pub fn from_ag(ag: &AccessibilityGraph, w: f64) -> Result<Self> {
        let trans = transition_matrix(ag.node_ids(), ag.dist(), w)?;
        Ok(AccessProbabilityGraph {
            node_ids: ag.node_ids().to_vec(),
            trans,
            self_weight: w,
        })
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn trans(&self) -> &[Vec<f64>] {
        &self.trans
    }

    pub fn self_weight(&self) -> f64 {
        self.self_weight
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.node_ids
            .iter()
            .position(|n| n == id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn transition_row(&self, node_id: &str) -> Result<&[f64]> {
        Ok(&self.trans[self.index_of(node_id)?])
    }

    pub fn to_export(&self) -> ApgExport {
        ApgExport {
            node_ids: self.node_ids.clone(),
            trans: self.trans.iter().flatten().copied().collect(),
            self_weight: self.self_weight,
        }
    }

    pub fn from_export(ex: ApgExport) -> Result<Self> {
        let n = ex.node_ids.len();
        if ex.trans.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: ex.trans.len(),
            });
        }
        let trans: Vec<Vec<f64>> = ex.trans.chunks(n.max(1)).map(<[f64]>::to_vec).collect();
        for (i, row) in trans.iter().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 || row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Numeric(format!(
                    "row {i} of the transition matrix is not a probability vector"
                )));
            }
        }
        Ok(AccessProbabilityGraph {
            node_ids: ex.node_ids,
            trans,
            self_weight: ex.self_weight,
        })
    }
}

/// Convenience wrapper over [`AccessProbabilityGraph::from_ag`].
pub fn apg_from_ag(ag: &AccessibilityGraph, w: f64) -> Result<AccessProbabilityGraph> {
    AccessProbabilityGraph::from_ag(ag, w)
}
