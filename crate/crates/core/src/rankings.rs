//! Partial rankings with ties.
//!
//! A [`PartialRanking`] is an ordered list of blocks of tied class ids,
//! most confident first. Classes that appear in no block form an implicit
//! trailing block of unranked classes, which is materialized on demand.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of permutations an enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Ordinal risk category of a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLevel {
    Low = 0,
    Medium = 1,
    High = 2,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 3] = [RiskLevel::Low, RiskLevel::Medium, RiskLevel::High];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(value: usize) -> Option<Self> {
        match value {
            0 => Some(RiskLevel::Low),
            1 => Some(RiskLevel::Medium),
            2 => Some(RiskLevel::High),
            _ => None,
        }
    }
}

/// The label space: `K` dense class ids plus optional display names and risk levels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassSpace {
    num_classes: usize,
    names: BTreeMap<usize, String>,
    risk: BTreeMap<usize, RiskLevel>,
}

impl ClassSpace {
    pub fn new(num_classes: usize) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::EmptyClassSpace);
        }
        Ok(Self {
            num_classes,
            names: BTreeMap::new(),
            risk: BTreeMap::new(),
        })
    }

    /// Builds a class space whose ids are the positions in `names`.
    pub fn from_names<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: BTreeMap<usize, String> =
            names.into_iter().map(Into::into).enumerate().collect();
        let mut space = Self::new(names.len())?;
        space.names = names;
        Ok(space)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn set_name(&mut self, class: usize, name: impl Into<String>) -> Result<()> {
        self.check(class)?;
        self.names.insert(class, name.into());
        Ok(())
    }

    pub fn set_risk(&mut self, class: usize, level: RiskLevel) -> Result<()> {
        self.check(class)?;
        self.risk.insert(class, level);
        Ok(())
    }

    pub fn name(&self, class: usize) -> Option<&str> {
        self.names.get(&class).map(String::as_str)
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.names
            .iter()
            .find_map(|(&id, n)| (n == name).then_some(id))
    }

    pub fn risk(&self, class: usize) -> Option<RiskLevel> {
        self.risk.get(&class).copied()
    }

    /// The risk level of every class, or an error naming the first unmapped class.
    pub fn risk_map(&self) -> Result<Vec<RiskLevel>> {
        (0..self.num_classes)
            .map(|c| self.risk(c).ok_or(Error::MissingRiskMapping { class: c }))
            .collect()
    }

    /// Validates `blocks` against this class space.
    pub fn ranking(&self, blocks: Vec<Vec<usize>>) -> Result<PartialRanking> {
        PartialRanking::new(self.num_classes, blocks)
    }

    fn check(&self, class: usize) -> Result<()> {
        if class >= self.num_classes {
            return Err(Error::ClassIdOutOfRange {
                class,
                num_classes: self.num_classes,
            });
        }
        Ok(())
    }
}

/// A validated partial ranking `b_1 > b_2 > ... > b_L` over `K` classes.
///
/// `blocks` holds the explicitly ranked blocks; every class that appears in
/// none of them belongs to the trailing unranked block. Ids inside a block are
/// kept sorted so that equal rankings compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialRanking {
    num_classes: usize,
    blocks: Vec<Vec<usize>>,
    unranked: Vec<usize>,
}

impl PartialRanking {
    /// Validates the blocks and materializes the unranked remainder.
    pub fn new(num_classes: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::EmptyClassSpace);
        }
        let mut seen = vec![false; num_classes];
        let mut blocks = blocks;
        for (index, block) in blocks.iter_mut().enumerate() {
            if block.is_empty() {
                return Err(Error::EmptyBlock { block: index });
            }
            for &class in block.iter() {
                if class >= num_classes {
                    return Err(Error::ClassIdOutOfRange { class, num_classes });
                }
                if seen[class] {
                    return Err(Error::DuplicateClassAcrossBlocks { class });
                }
                seen[class] = true;
            }
            block.sort_unstable();
        }
        let unranked = (0..num_classes).filter(|&c| !seen[c]).collect();
        Ok(Self {
            num_classes,
            blocks,
            unranked,
        })
    }

    /// A ranking in which every class is its own block, in the given order.
    pub fn from_permutation(sigma: &[usize]) -> Result<Self> {
        Self::new(sigma.len(), sigma.iter().map(|&c| vec![c]).collect())
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// The explicitly ranked blocks, most confident first.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Classes in the implicit trailing block (possibly empty).
    pub fn unranked(&self) -> &[usize] {
        &self.unranked
    }

    pub fn num_ranked(&self) -> usize {
        self.num_classes - self.unranked.len()
    }

    /// Ranked classes in block order.
    pub fn ranked_classes(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().flatten().copied()
    }

    pub fn is_ranked(&self, class: usize) -> bool {
        self.blocks.iter().any(|b| b.contains(&class))
    }

    /// All blocks including the unranked one when it is non-empty.
    pub fn materialized_blocks(&self) -> Vec<&[usize]> {
        let mut out: Vec<&[usize]> = self.blocks.iter().map(Vec::as_slice).collect();
        if !self.unranked.is_empty() {
            out.push(&self.unranked);
        }
        out
    }

    /// Applies the class relabeling `class -> perm[class]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.num_classes)?;
        Self::new(
            self.num_classes,
            self.blocks
                .iter()
                .map(|b| b.iter().map(|&c| perm[c]).collect())
                .collect(),
        )
    }

    /// The `L x K` block matrix `B` and the partition-structure matrix `Q`.
    pub fn to_block_matrix(&self) -> BlockMatrix {
        let blocks = self.materialized_blocks();
        let rows = blocks.len();
        let cols = self.num_classes;
        let mut b = vec![0u8; rows * cols];
        let mut q = vec![0u8; rows * cols];
        let mut cumulative = Vec::with_capacity(rows);
        let mut start = 0;
        for (l, block) in blocks.iter().enumerate() {
            for &class in block.iter() {
                b[l * cols + class] = 1;
            }
            for position in start..start + block.len() {
                q[l * cols + position] = 1;
            }
            start += block.len();
            cumulative.push(start);
        }
        BlockMatrix {
            rows,
            cols,
            b,
            q,
            cumulative,
        }
    }

    /// Expected permutation matrix under uniform ordering within each block.
    ///
    /// Entry `(i, j)` is the probability that class `j` lands at position `i`.
    pub fn to_soft_permutation(&self) -> SoftPermutationMatrix {
        let k = self.num_classes;
        let mut data = vec![0.0; k * k];
        let mut start = 0;
        for block in self.materialized_blocks() {
            let weight = 1.0 / block.len() as f64;
            for position in start..start + block.len() {
                for &class in block {
                    data[position * k + class] = weight;
                }
            }
            start += block.len();
        }
        SoftPermutationMatrix { size: k, data }
    }

    /// Number of full permutations compatible with this ranking.
    pub fn compatible_count(&self) -> u128 {
        block_factorial_product(self.materialized_blocks().iter().map(|b| b.len()))
    }

    /// Enumerates every full permutation compatible with the ranking,
    /// including all orders of the unranked block.
    pub fn compatible_permutations(&self, cap: u128) -> Result<impl Iterator<Item = Vec<usize>>> {
        let blocks: Vec<Vec<usize>> = self
            .materialized_blocks()
            .into_iter()
            .map(<[usize]>::to_vec)
            .collect();
        enumerate_block_orders(blocks, cap)
    }

    /// Enumerates the orderings of the ranked prefix only (the unranked block
    /// is left out, as its internal order carries total probability one).
    pub fn ranked_prefixes(&self, cap: u128) -> Result<impl Iterator<Item = Vec<usize>>> {
        enumerate_block_orders(self.blocks.clone(), cap)
    }
}

/// Enumerates every full permutation compatible with `ranking`, subject to `cap`.
pub fn enumerate_compatible_permutations(
    ranking: &PartialRanking,
    cap: u128,
) -> Result<impl Iterator<Item = Vec<usize>>> {
    ranking.compatible_permutations(cap)
}

fn block_factorial_product(sizes: impl Iterator<Item = usize>) -> u128 {
    sizes.fold(1u128, |acc, n| {
        (1..=n as u128).fold(acc, |a, f| a.saturating_mul(f))
    })
}

fn enumerate_block_orders(
    blocks: Vec<Vec<usize>>,
    cap: u128,
) -> Result<impl Iterator<Item = Vec<usize>>> {
    let count = block_factorial_product(blocks.iter().map(Vec::len));
    if count > cap {
        return Err(Error::CombinatorialCap { count, cap });
    }
    Ok(blocks
        .into_iter()
        .map(|b| {
            let n = b.len();
            b.into_iter().permutations(n)
        })
        .multi_cartesian_product()
        .map(|parts| parts.concat()))
}

/// Checks that `perm` is a permutation of `0..n`.
pub fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "length {} but expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidPermutation(format!(
                "entry {p} is out of range or repeated"
            )));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Matrix representation of a partial ranking.
///
/// Row `l` of `B` marks the members of block `l`; row `l` of `Q` marks the
/// positions `c_{l-1}..c_l` that block occupies in any compatible permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMatrix {
    rows: usize,
    cols: usize,
    b: Vec<u8>,
    q: Vec<u8>,
    cumulative: Vec<usize>,
}

impl BlockMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn b(&self, row: usize, col: usize) -> u8 {
        self.b[row * self.cols + col]
    }

    pub fn q(&self, row: usize, col: usize) -> u8 {
        self.q[row * self.cols + col]
    }

    pub fn b_row(&self, row: usize) -> &[u8] {
        &self.b[row * self.cols..(row + 1) * self.cols]
    }

    pub fn q_row(&self, row: usize) -> &[u8] {
        &self.q[row * self.cols..(row + 1) * self.cols]
    }

    /// Cumulative block sizes `c_1, ..., c_L` (so `c_L = K`).
    pub fn cumulative_sizes(&self) -> &[usize] {
        &self.cumulative
    }

    /// Row sums of `B`.
    pub fn block_sizes(&self) -> Vec<usize> {
        (0..self.rows)
            .map(|l| self.b_row(l).iter().map(|&x| x as usize).sum())
            .collect()
    }

    /// Whether `B = Q P_sigma`, with `[P_sigma]_{i,j} = 1` iff `sigma_i = j`.
    pub fn is_compatible(&self, sigma: &[usize]) -> bool {
        if sigma.len() != self.cols {
            return false;
        }
        let mut product = vec![0u8; self.rows * self.cols];
        for l in 0..self.rows {
            for (i, &class) in sigma.iter().enumerate() {
                if class >= self.cols {
                    return false;
                }
                product[l * self.cols + class] += self.q(l, i);
            }
        }
        product == self.b
    }
}

/// A `K x K` doubly stochastic matrix: the expected permutation matrix of a
/// partial ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftPermutationMatrix {
    size: usize,
    data: Vec<f64>,
}

impl SoftPermutationMatrix {
    /// The hard permutation matrix of `sigma`.
    pub fn from_permutation(sigma: &[usize]) -> Result<Self> {
        let k = sigma.len();
        check_permutation(sigma, k)?;
        let mut data = vec![0.0; k * k];
        for (i, &class) in sigma.iter().enumerate() {
            data[i * k + class] = 1.0;
        }
        Ok(Self { size: k, data })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, position: usize, class: usize) -> f64 {
        self.data[position * self.size + class]
    }

    pub fn row(&self, position: usize) -> &[f64] {
        &self.data[position * self.size..(position + 1) * self.size]
    }

    /// Largest deviation of any row or column sum from one.
    pub fn stochasticity_error(&self) -> f64 {
        let k = self.size;
        let mut worst: f64 = 0.0;
        for i in 0..k {
            let row: f64 = self.row(i).iter().sum();
            let col: f64 = (0..k).map(|r| self.get(r, i)).sum();
            worst = worst.max((row - 1.0).abs()).max((col - 1.0).abs());
        }
        worst
    }
}
