//! Exact Plackett–Luce probabilities of full and partial rankings.
//!
//! For a block `b_l` followed by classes of total weight `Z_l`, the
//! probability that the block's members are drawn before everything after it
//! is `prod_{k in b_l} lambda_k * R_l(b_l)`, where
//!
//! ```text
//! R_l({})  = 1
//! R_l(A)   = sum_{a in A} R_l(A \ {a}) / (Z_l + sum_{a in A} lambda_a)
//! ```
//!
//! The recursion runs over the power set of the block, so a block of size `n`
//! costs `O(n 2^n)` instead of `n!`.

use crate::error::{Error, Result};
use crate::rankings::{check_permutation, PartialRanking};

/// Default largest block the subset recursion accepts.
pub const DEFAULT_BLOCK_CAP: usize = 20;

/// Default repetition grid explored by the CLI.
pub const DEFAULT_REPETITION_GRID: [u32; 5] = [1, 2, 3, 5, 10];

/// Strictly positive Plackett–Luce weights (not necessarily normalized).
#[derive(Debug, Clone, PartialEq)]
pub struct PlParams {
    lambda: Vec<f64>,
}

impl PlParams {
    pub fn new(lambda: Vec<f64>) -> Result<Self> {
        if lambda.is_empty() {
            return Err(Error::EmptyClassSpace);
        }
        if let Some((index, &value)) = lambda
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::NonPositiveWeight { index, value });
        }
        Ok(Self { lambda })
    }

    pub fn uniform(num_classes: usize) -> Result<Self> {
        Self::new(vec![1.0 / num_classes as f64; num_classes])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.lambda
    }

    pub fn num_classes(&self) -> usize {
        self.lambda.len()
    }

    pub fn total(&self) -> f64 {
        self.lambda.iter().sum()
    }
}

/// `R_l(A)` for every subset `A` of one block.
///
/// Subsets are bitmasks over block-local indices. Values are stored in units
/// where `Z_l + sum(block) = 1`, which keeps them in floating-point range;
/// the true value is `value(A) / scale^|A|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetTable {
    block: Vec<usize>,
    residual: f64,
    scale: f64,
    values: Vec<f64>,
}

impl SubsetTable {
    pub fn block(&self) -> &[usize] {
        &self.block
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn full_mask(&self) -> usize {
        (1usize << self.block.len()) - 1
    }

    /// Rescaled `R(A)`; ratios between subsets of equal size are exact.
    pub fn scaled(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    pub fn log_value(&self, mask: usize) -> f64 {
        self.values[mask].ln() - mask.count_ones() as f64 * self.scale.ln()
    }

    pub fn value(&self, mask: usize) -> f64 {
        self.log_value(mask).exp()
    }

    /// `log p(block drawn before the residual classes)`.
    pub fn block_log_prob(&self, lambda: &PlParams) -> f64 {
        let log_weights: f64 = self
            .block
            .iter()
            .map(|&c| (lambda.lambda[c] / self.scale).ln())
            .sum();
        log_weights + self.values[self.full_mask()].ln()
    }
}

/// Runs the subset recursion for `block` given the residual mass of all
/// classes ranked after it.
///
/// Masks are visited in increasing order, which visits every subset after
/// all of its own subsets, i.e. layer by layer up the Hasse diagram.
pub fn subset_recursion(
    block: &[usize],
    residual: f64,
    lambda: &PlParams,
    cap: usize,
) -> Result<SubsetTable> {
    let n = block.len();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "subset recursion needs a non-empty block".into(),
        ));
    }
    if n > cap {
        return Err(Error::BlockTooLarge { size: n, cap });
    }
    if !(residual.is_finite() && residual >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "residual mass {residual} is invalid"
        )));
    }
    if let Some(&c) = block.iter().find(|&&c| c >= lambda.num_classes()) {
        return Err(Error::ClassIdOutOfRange {
            class: c,
            num_classes: lambda.num_classes(),
        });
    }
    let block_mass: f64 = block.iter().map(|&c| lambda.lambda[c]).sum();
    let scale = residual + block_mass;
    let weights: Vec<f64> = block.iter().map(|&c| lambda.lambda[c] / scale).collect();
    let residual_scaled = residual / scale;

    let size = 1usize << n;
    let mut mass = vec![0.0; size];
    let mut values = vec![0.0; size];
    values[0] = 1.0;
    for mask in 1..size {
        let low = mask.trailing_zeros() as usize;
        mass[mask] = mass[mask & (mask - 1)] + weights[low];
        let mut acc = 0.0;
        let mut rest = mask;
        while rest != 0 {
            let bit = rest & rest.wrapping_neg();
            acc += values[mask ^ bit];
            rest ^= bit;
        }
        values[mask] = acc / (residual_scaled + mass[mask]);
    }
    Ok(SubsetTable {
        block: block.to_vec(),
        residual,
        scale,
        values,
    })
}

/// Log-probability of a full permutation under Plackett–Luce.
pub fn pl_full_ranking_log_prob(lambda: &PlParams, sigma: &[usize]) -> Result<f64> {
    check_permutation(sigma, lambda.num_classes())?;
    let mut remaining = lambda.total();
    let mut log_prob = 0.0;
    // The final factor is always lambda / lambda = 1.
    for &class in &sigma[..sigma.len() - 1] {
        let w = lambda.lambda[class];
        log_prob += w.ln() - remaining.ln();
        remaining -= w;
    }
    Ok(log_prob)
}

/// Per-block residual masses `Z_l` for the ranked blocks of `ranking`.
pub fn residual_masses(lambda: &PlParams, ranking: &PartialRanking) -> Vec<f64> {
    let unranked: f64 = ranking.unranked().iter().map(|&c| lambda.lambda[c]).sum();
    let mut after = unranked;
    let mut out: Vec<f64> = ranking
        .blocks()
        .iter()
        .rev()
        .map(|block| {
            let z = after;
            after += block.iter().map(|&c| lambda.lambda[c]).sum::<f64>();
            z
        })
        .collect();
    out.reverse();
    out
}

/// Exact log-probability of a partial ranking with the default block cap.
pub fn pl_partial_ranking_log_prob(lambda: &PlParams, ranking: &PartialRanking) -> Result<f64> {
    pl_partial_ranking_log_prob_with_cap(lambda, ranking, DEFAULT_BLOCK_CAP)
}

/// Exact log-probability of a partial ranking.
///
/// A final ranked block with nothing after it contributes probability one
/// and is skipped, as is the unranked block.
pub fn pl_partial_ranking_log_prob_with_cap(
    lambda: &PlParams,
    ranking: &PartialRanking,
    cap: usize,
) -> Result<f64> {
    if ranking.num_classes() != lambda.num_classes() {
        return Err(Error::ClassSpaceMismatch {
            expected: lambda.num_classes(),
            found: ranking.num_classes(),
        });
    }
    let residuals = residual_masses(lambda, ranking);
    let mut log_prob = 0.0;
    let last = ranking.blocks().len().saturating_sub(1);
    for (l, (block, &residual)) in ranking.blocks().iter().zip(&residuals).enumerate() {
        if l == last && ranking.unranked().is_empty() {
            if block.len() > cap {
                return Err(Error::BlockTooLarge {
                    size: block.len(),
                    cap,
                });
            }
            continue;
        }
        log_prob += subset_recursion(block, residual, lambda, cap)?.block_log_prob(lambda);
    }
    Ok(log_prob)
}

/// Joint log-likelihood of several annotators, each counted `repetitions` times.
pub fn pl_log_likelihood_multi(
    lambda: &PlParams,
    rankings: &[PartialRanking],
    repetitions: u32,
) -> Result<f64> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter(
            "repetitions must be at least 1".into(),
        ));
    }
    let mut total = 0.0;
    for ranking in rankings {
        total += pl_partial_ranking_log_prob(lambda, ranking)?;
    }
    Ok(repetitions as f64 * total)
}
