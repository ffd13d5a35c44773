//! Probabilistic IRN: a Dirichlet posterior `Dir(gamma * irn)` over the
//! classes with positive IRN mass. Classes without mass stay at exactly zero.

use crate::error::{Error, Result};
use crate::irn::{irn_aggregate, IrnScores};
use crate::posterior::{AggregationModel, PosteriorSamples, Reliability};
use crate::rankings::PartialRanking;
use crate::sampling::{rng_from_seed, sample_dirichlet};

/// Default concentration grid explored by the CLI.
pub const DEFAULT_GAMMA_GRID: [f64; 5] = [10.0, 20.0, 30.0, 50.0, 100.0];

/// The PrIRN posterior for one case.
#[derive(Debug, Clone, PartialEq)]
pub struct PrIrnModel {
    gamma: f64,
    irn: IrnScores,
    support: Vec<usize>,
}

impl PrIrnModel {
    pub fn new(rankings: &[PartialRanking], gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "reliability gamma must be positive and finite, got {gamma}"
            )));
        }
        let irn = irn_aggregate(rankings)?;
        let support = irn.support();
        Ok(Self {
            gamma,
            irn,
            support,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn irn(&self) -> &IrnScores {
        &self.irn
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Dirichlet concentration vector `gamma * irn` (zero off the support).
    pub fn concentration(&self) -> Vec<f64> {
        self.irn.normalized.iter().map(|v| self.gamma * v).collect()
    }

    pub fn sample(&self, num_samples: usize, seed: u64) -> Result<PosteriorSamples> {
        if num_samples == 0 {
            return Err(Error::InvalidParameter(
                "sample count must be at least 1".into(),
            ));
        }
        let concentration = self.concentration();
        let k = concentration.len();
        let mut rng = rng_from_seed(seed);
        let mut data = Vec::with_capacity(num_samples * k);
        for _ in 0..num_samples {
            data.extend(sample_dirichlet(&concentration, &mut rng)?);
        }
        PosteriorSamples::new(
            AggregationModel::Prirn,
            Reliability::Gamma(self.gamma),
            seed,
            k,
            data,
        )
    }
}

/// Draws `num_samples` plausibility vectors from the PrIRN posterior.
pub fn prirn_sample(
    rankings: &[PartialRanking],
    gamma: f64,
    num_samples: usize,
    seed: u64,
) -> Result<PosteriorSamples> {
    PrIrnModel::new(rankings, gamma)?.sample(num_samples, seed)
}
