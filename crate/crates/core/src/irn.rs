//! Inverse rank normalization: the deterministic aggregation baseline.
//!
//! Each annotator gives weight `1/i` to their `i`-th ranked block, split
//! evenly across tied classes; unranked classes get nothing. Scores are summed
//! over annotators and normalized only after aggregation.

use crate::error::{Error, Result};
use crate::posterior::argmax;
use crate::rankings::PartialRanking;

/// Aggregated IRN scores for one case.
#[derive(Debug, Clone, PartialEq)]
pub struct IrnScores {
    pub unnormalized: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl IrnScores {
    /// Classes with positive IRN mass.
    pub fn support(&self) -> Vec<usize> {
        self.unnormalized
            .iter()
            .enumerate()
            .filter_map(|(c, &v)| (v > 0.0).then_some(c))
            .collect()
    }

    pub fn top1(&self) -> usize {
        top1_label(&self.normalized)
    }
}

/// Unnormalized IRN scores of a single annotator.
pub fn irn_single(ranking: &PartialRanking) -> Vec<f64> {
    let mut scores = vec![0.0; ranking.num_classes()];
    for (i, block) in ranking.blocks().iter().enumerate() {
        let weight = 1.0 / ((i + 1) as f64 * block.len() as f64);
        for &class in block {
            scores[class] = weight;
        }
    }
    scores
}

/// Sums IRN scores over annotators and normalizes the total.
pub fn irn_aggregate(rankings: &[PartialRanking]) -> Result<IrnScores> {
    let k = shared_num_classes(rankings)?;
    let mut unnormalized = vec![0.0; k];
    for ranking in rankings {
        for (acc, v) in unnormalized.iter_mut().zip(irn_single(ranking)) {
            *acc += v;
        }
    }
    let total: f64 = unnormalized.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroMass);
    }
    let normalized = unnormalized.iter().map(|v| v / total).collect();
    Ok(IrnScores {
        unnormalized,
        normalized,
    })
}

/// Most plausible class; ties go to the lowest class id.
pub fn top1_label(scores: &[f64]) -> usize {
    argmax(scores)
}

/// The common class count of a non-empty set of rankings.
pub(crate) fn shared_num_classes(rankings: &[PartialRanking]) -> Result<usize> {
    let first = rankings
        .first()
        .ok_or_else(|| Error::InvalidParameter("at least one ranking is required".into()))?;
    let k = first.num_classes();
    for r in rankings {
        if r.num_classes() != k {
            return Err(Error::ClassSpaceMismatch {
                expected: k,
                found: r.num_classes(),
            });
        }
    }
    Ok(k)
}
