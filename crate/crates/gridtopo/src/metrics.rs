//! Agreement metrics between an estimated and a true adjacency matrix.

use serde::Serialize;

use crate::error::Error;
use crate::grid::AdjacencyMatrix;

/// Edge-level and element-level agreement between an estimate and the
/// ground truth. `edge_accuracy` (the headline number) is the fraction of
/// true edges recovered, i.e. recall over the true edge set.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AccuracyReport {
    pub edge_accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Fraction of off-diagonal adjacency entries that match.
    pub element_agreement: f64,
    /// Identification wall time in seconds, filled in by the caller;
    /// excluded from serialized reports so they stay reproducible.
    #[serde(skip)]
    pub wall_time: f64,
}

/// Score `estimate` against `truth`. Edge sets are read off the upper
/// triangles; swapping the arguments swaps precision and recall.
pub fn compare(
    estimate: &AdjacencyMatrix,
    truth: &AdjacencyMatrix,
) -> Result<AccuracyReport, Error> {
    if estimate.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            a: estimate.len(),
            b: truth.len(),
        });
    }
    let n = truth.len();
    let pred: Vec<(usize, usize)> = estimate.edge_set();
    let real: Vec<(usize, usize)> = truth.edge_set();
    let real_set: std::collections::HashSet<(usize, usize)> = real.iter().copied().collect();
    let shared = pred.iter().filter(|e| real_set.contains(e)).count();

    let recall = if real.is_empty() {
        if pred.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        shared as f64 / real.len() as f64
    };
    let precision = if pred.is_empty() {
        if real.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        shared as f64 / pred.len() as f64
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };

    let off_diagonal = n * n - n;
    let element_agreement = if off_diagonal == 0 {
        1.0
    } else {
        let mut matches = 0usize;
        for i in 0..n {
            for j in 0..n {
                if i != j && estimate.entry(i, j) == truth.entry(i, j) {
                    matches += 1;
                }
            }
        }
        matches as f64 / off_diagonal as f64
    };

    Ok(AccuracyReport {
        edge_accuracy: recall,
        precision,
        recall,
        f1,
        element_agreement,
        wall_time: 0.0,
    })
}
