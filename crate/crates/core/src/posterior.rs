//! Posterior plausibility samples and their provenance.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a plausibility vector lies on the simplex.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Which aggregation model produced a set of plausibilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationModel {
    Irn,
    Prirn,
    Pl,
    DirichletCounts,
    GaussianScores,
}

impl AggregationModel {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregationModel::Irn => "irn",
            AggregationModel::Prirn => "prirn",
            AggregationModel::Pl => "pl",
            AggregationModel::DirichletCounts => "dirichlet-counts",
            AggregationModel::GaussianScores => "gaussian-scores",
        }
    }
}

impl fmt::Display for AggregationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AggregationModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "irn" => Ok(AggregationModel::Irn),
            "prirn" => Ok(AggregationModel::Prirn),
            "pl" => Ok(AggregationModel::Pl),
            "dirichlet-counts" => Ok(AggregationModel::DirichletCounts),
            "gaussian-scores" => Ok(AggregationModel::GaussianScores),
            other => Err(Error::InvalidParameter(format!("unknown model '{other}'"))),
        }
    }
}

/// The reliability setting a posterior was drawn under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reliability {
    /// Dirichlet concentration scale.
    Gamma(f64),
    /// Integer annotation repetition count.
    Repetitions(u32),
    /// Deterministic aggregation (point mass).
    Infinite,
}

impl fmt::Display for Reliability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reliability::Gamma(g) => write!(f, "gamma={g}"),
            Reliability::Repetitions(r) => write!(f, "reps={r}"),
            Reliability::Infinite => f.write_str("infinite"),
        }
    }
}

/// Where a set of samples, or a number computed from them, came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: AggregationModel,
    pub reliability: Reliability,
    pub num_samples: usize,
    pub seed: u64,
}

/// `M` plausibility vectors drawn from an aggregation model, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub model: AggregationModel,
    pub reliability: Reliability,
    pub seed: u64,
    num_classes: usize,
    data: Vec<f64>,
}

impl PosteriorSamples {
    pub fn new(
        model: AggregationModel,
        reliability: Reliability,
        seed: u64,
        num_classes: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if num_classes == 0 || data.is_empty() || !data.len().is_multiple_of(num_classes) {
            return Err(Error::InvalidParameter(format!(
                "{} values cannot form samples over {num_classes} classes",
                data.len()
            )));
        }
        Ok(Self {
            model,
            reliability,
            seed,
            num_classes,
            data,
        })
    }

    /// Builds samples from individual rows.
    pub fn from_rows(
        model: AggregationModel,
        reliability: Reliability,
        seed: u64,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidParameter("ragged sample rows".into()));
        }
        Self::new(model, reliability, seed, k, rows.concat())
    }

    /// A deterministic aggregation viewed as a sampler: one row, the point estimate.
    pub fn point_mass(model: AggregationModel, plausibilities: &[f64]) -> Result<Self> {
        Self::new(
            model,
            Reliability::Infinite,
            0,
            plausibilities.len(),
            plausibilities.to_vec(),
        )
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            model: self.model,
            reliability: self.reliability,
            num_samples: self.len(),
            seed: self.seed,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.num_classes
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.data[m * self.num_classes..(m + 1) * self.num_classes]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.num_classes)
    }

    /// Mutable access, used by fault-injection checks.
    pub fn rows_mut(&mut self) -> impl Iterator<Item = &mut [f64]> + '_ {
        self.data.chunks_exact_mut(self.num_classes)
    }

    /// Per-class sample mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.num_classes];
        for row in self.rows() {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
        }
        let m = self.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        acc
    }

    /// Per-class sample variance (divides by `M`, zero for `M = 1`).
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        let mut acc = vec![0.0; self.num_classes];
        for row in self.rows() {
            for ((a, v), mu) in acc.iter_mut().zip(row).zip(&mean) {
                *a += (v - mu) * (v - mu);
            }
        }
        let m = self.len() as f64;
        acc.iter_mut().for_each(|a| *a /= m);
        acc
    }

    /// Largest deviation of any row sum from one, or infinity if any entry is
    /// negative or non-finite.
    pub fn normalization_error(&self) -> f64 {
        self.rows()
            .map(|row| {
                if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    f64::INFINITY
                } else {
                    (row.iter().sum::<f64>() - 1.0).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization_error() <= SIMPLEX_TOLERANCE
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// The `j` classes with the largest values, returned sorted by class id.
///
/// Ranking is by value descending, ties by lowest class id.
pub fn top_set(values: &[f64], j: usize) -> Vec<usize> {
    let mut set = ranked_order(values);
    set.truncate(j);
    set.sort_unstable();
    set
}

/// All classes ordered by value descending, ties by lowest class id.
pub fn ranked_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}
